#pragma once

// Unit torus geometry and a uniform-grid point index.
//
// The index buckets points into cells of at least the given size, so any
// query with radius <= cell_size() only has to scan the 3x3 block of cells
// around the query point. Results are id-sorted so identical states always
// produce identical neighbor lists.

#include "samsim/rng.hpp"

#include <vector>

namespace samsim {

struct Position {
    double x = 0.0;
    double y = 0.0;
};

Position wrap(Position p);
double torus_distance(Position a, Position b);
double torus_distance2(Position a, Position b);

std::vector<Position> random_positions(int count, Rng& rng);

class NeighborhoodIndex {
public:
    explicit NeighborhoodIndex(double min_cell_size);

    void insert(int id, Position p);
    void remove(int id);
    bool contains(int id) const;
    Position position_of(int id) const;

    // ids with torus distance <= radius from p, ascending; radius must not
    // exceed cell_size()
    std::vector<int> neighbors_within(Position p, double radius) const;
    // same, centered on a stored point, excluding it
    std::vector<int> neighbors_within(int center_id, double radius) const;

    double cell_size() const { return 1.0 / cells_; }
    int size() const { return count_; }

private:
    struct Entry {
        Position pos;
        int cell = -1;
    };

    int cell_index(Position p) const;
    void check_radius(double radius) const;

    int cells_ = 1;
    int count_ = 0;
    std::vector<std::vector<int>> buckets_;
    std::vector<Entry> entries_; // indexed by id, cell == -1 when absent
};

} // namespace samsim
