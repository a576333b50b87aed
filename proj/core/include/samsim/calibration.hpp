#pragma once

// Evolutionary calibration: run the simulation, and every review interval
// nudge three levers toward their targets with clipped power-law factors:
//   startup_probability <- (target_births / observed_births)^gain
//   propensity (kappa)  <- (wealth_target / observed_wealth)^gain
//   wage_scale          <- (observed_unemployment / target_unemployment)^gain
// The loop stops when every target is within tolerance after the output
// series has reached steady state, or at the horizon. The result carries one
// row per review, final indicators, and a 3-seed dispersion table for the
// single-run-sufficiency check.

#include "samsim/config.hpp"
#include "samsim/engine.hpp"

#include <array>
#include <stdexcept>
#include <string>
#include <vector>

namespace samsim {

struct CalibrationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CalibrationReview {
    int review = 0; // 1-based
    int month = 0;
    double births_observed = 0.0; // population scale, per year
    double births_target = 0.0;
    double births_factor = 1.0;
    double wealth_observed = 0.0; // population scale
    double wealth_target = 0.0;
    double wealth_factor = 1.0;
    double unemployment_observed = 0.0;
    double unemployment_target = 0.0;
    double wage_factor = 1.0;
    // lever values after applying the factors
    double startup_probability = 0.0;
    double propensity = 0.0;
    double wage_scale = 0.0;
    bool within_tolerance = false;
};

struct ConvergenceIndicators {
    double sectoral_output_error = 0.0; // max relative gap to the scaled column totals
    double unemployment = 0.0;
    int firm_count = 0;
    double gini = 0.0;
    double births_annualized = 0.0; // population scale
};

// Trailing-12-month reads off the state's frames; throws CalibrationError
// with fewer than 24 months of history.
ConvergenceIndicators convergence_indicators(const SimState& state);

struct DispersionRow {
    std::string name;
    std::array<double, 3> by_seed{};
    double spread = 0.0; // (max - min) / |mean|
    bool gated = true;   // counts toward the pass flag
};

struct CalibrationResult {
    SimConfig calibrated;
    std::vector<CalibrationReview> reviews;
    bool converged = false;
    bool diverged = false;        // an observable ended beyond 10x or below 0.1x target
    int steady_state_at = -1;     // month the output series settled, -1 if never
    int stopped_at = 0;           // last simulated month
    ConvergenceIndicators final_indicators;
    std::array<std::uint64_t, 3> dispersion_seeds{};
    std::vector<DispersionRow> dispersion;
    double dispersion_tolerance = 0.05;
    bool dispersion_ok = false;

    std::string reviews_csv() const; // one row per review
    std::string summary() const;     // human-readable block
};

CalibrationResult calibrate(const SimConfig& config, const CalibrationTargets& targets,
                            const CalibrationSchedule& schedule);

} // namespace samsim
