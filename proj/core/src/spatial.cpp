#include "samsim/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace samsim {

Position wrap(Position p) {
    p.x -= std::floor(p.x);
    p.y -= std::floor(p.y);
    if (p.x >= 1.0) p.x = 0.0;
    if (p.y >= 1.0) p.y = 0.0;
    return p;
}

static double axis_delta(double a, double b) {
    double d = std::abs(a - b);
    return std::min(d, 1.0 - d);
}

double torus_distance2(Position a, Position b) {
    double dx = axis_delta(a.x, b.x);
    double dy = axis_delta(a.y, b.y);
    return dx * dx + dy * dy;
}

double torus_distance(Position a, Position b) { return std::sqrt(torus_distance2(a, b)); }

std::vector<Position> random_positions(int count, Rng& rng) {
    if (count < 0) throw std::invalid_argument("random_positions: negative count");
    std::vector<Position> out;
    out.reserve(count);
    for (int i = 0; i < count; ++i) {
        double x = rng.uniform();
        double y = rng.uniform();
        out.push_back({x, y});
    }
    return out;
}

NeighborhoodIndex::NeighborhoodIndex(double min_cell_size) {
    if (!(min_cell_size > 0.0) || min_cell_size > 1.0)
        throw std::invalid_argument("NeighborhoodIndex: cell size must be in (0, 1]");
    cells_ = std::max(1, static_cast<int>(std::floor(1.0 / min_cell_size)));
    buckets_.resize(static_cast<size_t>(cells_) * cells_);
}

int NeighborhoodIndex::cell_index(Position p) const {
    int ix = static_cast<int>(p.x * cells_);
    int iy = static_cast<int>(p.y * cells_);
    ix = std::clamp(ix, 0, cells_ - 1);
    iy = std::clamp(iy, 0, cells_ - 1);
    return iy * cells_ + ix;
}

void NeighborhoodIndex::insert(int id, Position p) {
    if (id < 0) throw std::invalid_argument("NeighborhoodIndex::insert: negative id");
    if (contains(id)) throw std::invalid_argument("NeighborhoodIndex::insert: duplicate id");
    p = wrap(p);
    if (id >= static_cast<int>(entries_.size())) entries_.resize(id + 1);
    int cell = cell_index(p);
    entries_[id] = {p, cell};
    auto& bucket = buckets_[cell];
    bucket.insert(std::lower_bound(bucket.begin(), bucket.end(), id), id);
    ++count_;
}

void NeighborhoodIndex::remove(int id) {
    if (!contains(id)) throw std::invalid_argument("NeighborhoodIndex::remove: unknown id");
    auto& bucket = buckets_[entries_[id].cell];
    bucket.erase(std::lower_bound(bucket.begin(), bucket.end(), id));
    entries_[id].cell = -1;
    --count_;
}

bool NeighborhoodIndex::contains(int id) const {
    return id >= 0 && id < static_cast<int>(entries_.size()) && entries_[id].cell != -1;
}

Position NeighborhoodIndex::position_of(int id) const {
    if (!contains(id)) throw std::invalid_argument("NeighborhoodIndex::position_of: unknown id");
    return entries_[id].pos;
}

void NeighborhoodIndex::check_radius(double radius) const {
    if (radius < 0.0) throw std::invalid_argument("NeighborhoodIndex: negative radius");
    if (radius > cell_size() * (1.0 + 1e-12))
        throw std::invalid_argument("NeighborhoodIndex: radius exceeds cell size");
}

std::vector<int> NeighborhoodIndex::neighbors_within(Position p, double radius) const {
    check_radius(radius);
    p = wrap(p);
    double r2 = radius * radius;
    int cx = cell_index(p) % cells_;
    int cy = cell_index(p) / cells_;

    std::vector<int> out;
    int seen_cells[9];
    int n_seen = 0;
    for (int dy = -1; dy <= 1; ++dy) {
        for (int dx = -1; dx <= 1; ++dx) {
            int ix = (cx + dx + cells_) % cells_;
            int iy = (cy + dy + cells_) % cells_;
            int cell = iy * cells_ + ix;
            bool dup = false;
            for (int i = 0; i < n_seen; ++i)
                if (seen_cells[i] == cell) dup = true;
            if (dup) continue;
            seen_cells[n_seen++] = cell;
            for (int id : buckets_[cell])
                if (torus_distance2(entries_[id].pos, p) <= r2) out.push_back(id);
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::vector<int> NeighborhoodIndex::neighbors_within(int center_id, double radius) const {
    Position p = position_of(center_id);
    auto out = neighbors_within(p, radius);
    auto it = std::lower_bound(out.begin(), out.end(), center_id);
    if (it != out.end() && *it == center_id) out.erase(it);
    return out;
}

} // namespace samsim
