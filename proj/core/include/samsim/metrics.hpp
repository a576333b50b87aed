#pragma once

// Observables computed from simulation state: firm size distribution,
// wealth inequality, per-month series frames with a byte-stable CSV
// round-trip, a moving-average steady-state detector, and the reproduction
// error of consumption against its reference distribution.

#include "samsim/agents.hpp"

#include <array>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace samsim {

// employment size bins: micro 0-9, small 10-49, medium 50-249, large 250+
inline constexpr int kSizeBinCount = 4;
inline constexpr std::array<const char*, kSizeBinCount> kSizeBinLabels = {"micro", "small",
                                                                          "medium", "large"};
int size_bin(int employees);

struct FirmSizeDistribution {
    std::array<double, kSizeBinCount> firm_share{};
    std::array<double, kSizeBinCount> employment_share{}; // of employed persons
    int firm_count = 0;
    int total_employees = 0;
};

// nullopt when no live firms
std::optional<FirmSizeDistribution> firm_size_distribution(const std::vector<Firm>& firms);

// Gini coefficient of a nonnegative sample with positive total.
double gini(std::span<const double> values);

struct WealthStats {
    double gini = 0.0;
    double top_decile_share = 0.0;
    double top_percentile_share = 0.0;
    double total = 0.0;
};

// nullopt when total wealth is zero
std::optional<WealthStats> wealth_stats(std::span<const double> wealth);

// (population share, cumulative wealth share) pairs, poorest first,
// at `points` evenly spaced population quantiles plus the origin
std::vector<std::pair<double, double>> lorenz_curve(std::span<const double> values,
                                                    int points = 10);

struct SeriesFrame {
    int month = 0;
    double unemployment_rate = 0.0;
    double total_wealth = 0.0;
    double gini_wealth = 0.0;
    double top_decile_share = 0.0;
    double top_percentile_share = 0.0;
    int firm_count = 0;
    int births = 0; // firms founded this month
    int deaths = 0; // firms closed this month
    int policy_marks = 0; // effective policy interventions applied this month
    double total_output = 0.0;      // all firm revenue this month
    double total_consumption = 0.0; // household spending this month
    std::array<double, kSizeBinCount> size_firm_share{};
    std::array<double, kSizeBinCount> size_employment_share{};
    // aligned with the producing-sector code list stored next to the frames
    std::vector<double> output_by_sector;
    std::vector<double> consumption_by_sector;
    std::vector<int> firms_by_sector;
};

void write_frames(const std::vector<SeriesFrame>& frames,
                  const std::vector<std::string>& sector_codes, std::ostream& out);
void write_frames_file(const std::vector<SeriesFrame>& frames,
                       const std::vector<std::string>& sector_codes, const std::string& path);

struct FrameData {
    std::vector<SeriesFrame> frames;
    std::vector<std::string> sector_codes;
};
FrameData read_frames(std::istream& in);
FrameData read_frames_file(const std::string& path);

struct SteadyStateParams {
    double rel_tol = 0.01;
    double abs_floor = 0.0;
    int ma_window = 12;
    int hold_months = 24;
};

// First index t such that |MA(s) - MA(s - window)| <= rel_tol*|MA(s - window)|
// + abs_floor held for the trailing hold_months at every s in (t-hold+1 .. t].
// -1 when the series never settles.
int steady_state_month(std::span<const double> series, const SteadyStateParams& params);

struct ConsumptionError {
    std::string code;
    double target = 0.0;   // annual currency
    double observed = 0.0; // annual currency, trailing 12 frames
    double rel_error = 0.0;
    bool significant = false; // target at least `significance` of the basket total
};

// Trailing-12-month consumption per market sector against target shares of
// the observed total (or absolute annual targets when provided).
std::vector<ConsumptionError> consumption_errors(const std::vector<SeriesFrame>& frames,
                                                 const std::vector<std::string>& sector_codes,
                                                 const std::vector<double>& target_shares,
                                                 const std::vector<double>& absolute_targets,
                                                 double significance = 0.05);

} // namespace samsim
