#include "samsim/calibration.hpp"
#include "samsim/metrics.hpp"
#include "samsim/text.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace samsim {

namespace {

double clip_factor(double f) { return std::clamp(f, 0.5, 2.0); }

// (target/observed)^gain with the degenerate cases pinned: a zero observation
// against a positive target pushes the lever up at the clip limit.
double nudge(double target, double observed, double gain) {
    if (gain <= 0.0) return 1.0;
    if (!(observed > 0.0)) return target > 0.0 ? 2.0 : 1.0;
    return clip_factor(std::pow(target / observed, gain));
}

double trailing_mean(const std::vector<SeriesFrame>& frames, int window,
                     double (*get)(const SeriesFrame&)) {
    int n = static_cast<int>(frames.size());
    int lo = std::max(0, n - window);
    double sum = 0.0;
    for (int i = lo; i < n; ++i) sum += get(frames[i]);
    return n > lo ? sum / (n - lo) : 0.0;
}

bool within(double observed, double target, double tol) {
    return std::abs(observed - target) <= tol * std::abs(target);
}

struct SeedOutcome {
    ConvergenceIndicators indicators;
    // final-120-month means used for the dispersion table
    double unemployment = 0.0;
    double firm_count = 0.0;
    double gini = 0.0;
    double output = 0.0;
    double births_annual = 0.0; // population scale
};

SeedOutcome run_fixed(const SimConfig& config, int horizon) {
    SimState s = deploy(config);
    for (int m = 0; m < horizon; ++m) step(s);
    SeedOutcome out;
    out.indicators = convergence_indicators(s);
    int window = std::min<int>(120, s.frames.size());
    out.unemployment =
        trailing_mean(s.frames, window, [](const SeriesFrame& f) { return f.unemployment_rate; });
    out.firm_count = trailing_mean(s.frames, window, [](const SeriesFrame& f) {
        return static_cast<double>(f.firm_count);
    });
    out.gini = trailing_mean(s.frames, window, [](const SeriesFrame& f) { return f.gini_wealth; });
    out.output =
        trailing_mean(s.frames, window, [](const SeriesFrame& f) { return f.total_output; });
    double births = 0.0;
    for (size_t i = s.frames.size() - window; i < s.frames.size(); ++i)
        births += s.frames[i].births;
    out.births_annual = window > 0 ? births / window * 12.0 * s.scale : 0.0;
    return out;
}

DispersionRow dispersion_row(const std::string& name, std::array<double, 3> v, bool gated) {
    DispersionRow row;
    row.name = name;
    row.by_seed = v;
    double lo = std::min({v[0], v[1], v[2]});
    double hi = std::max({v[0], v[1], v[2]});
    double mean = (v[0] + v[1] + v[2]) / 3.0;
    row.spread = mean != 0.0 ? (hi - lo) / std::abs(mean) : (hi > lo ? 1.0 : 0.0);
    row.gated = gated;
    return row;
}

std::string pct(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%+.1f%%", 100.0 * x);
    return buf;
}

} // namespace

ConvergenceIndicators convergence_indicators(const SimState& state) {
    if (state.frames.size() < 24)
        throw CalibrationError("convergence indicators need at least 24 months of history, have " +
                               std::to_string(state.frames.size()));
    ConvergenceIndicators ind;
    const auto& frames = state.frames;
    size_t lo = frames.size() - 12;

    for (size_t i = 0; i < state.sectors.size(); ++i) {
        double annual = 0.0;
        for (size_t f = lo; f < frames.size(); ++f) annual += frames[f].output_by_sector[i];
        double target = state.sam.col_sums[state.sectors[i].account] / state.scale;
        if (!(target > 0.0)) continue;
        ind.sectoral_output_error =
            std::max(ind.sectoral_output_error, std::abs(annual - target) / target);
    }
    const SeriesFrame& last = frames.back();
    ind.unemployment = last.unemployment_rate;
    ind.firm_count = last.firm_count;
    ind.gini = last.gini_wealth;
    double births = 0.0;
    for (size_t f = lo; f < frames.size(); ++f) births += frames[f].births;
    ind.births_annualized = births * state.scale;
    return ind;
}

CalibrationResult calibrate(const SimConfig& config, const CalibrationTargets& targets,
                            const CalibrationSchedule& schedule) {
    if (schedule.horizon_months < 2 * schedule.review_interval)
        throw CalibrationError("horizon must cover at least two review intervals");
    if (schedule.review_interval <= 0) throw CalibrationError("review interval must be positive");
    if (schedule.adjustment_gain < 0.0 || schedule.adjustment_gain > 1.0)
        throw CalibrationError("adjustment gain must lie in [0, 1]");

    const double target_u = targets.unemployment_rate;
    const double target_wealth =
        targets.wealth_target > 0.0 ? targets.wealth_target : config.wealth_target;
    const double target_births = targets.firm_births_per_year > 0.0 ? targets.firm_births_per_year
                                                                    : config.firm_births_per_year;
    if (!(target_u > 0.0) || !(target_wealth > 0.0) || !(target_births > 0.0))
        throw CalibrationError("calibration targets must be positive");

    CalibrationResult res;
    res.dispersion_tolerance = schedule.tolerance;

    SimState s = deploy(config);
    const int interval = schedule.review_interval;
    const double gain = schedule.adjustment_gain;

    double obs_births = 0.0, obs_wealth = 0.0, obs_u = 0.0;
    std::vector<double> output_series;
    output_series.reserve(schedule.horizon_months);

    for (int m = 1; m <= schedule.horizon_months; ++m) {
        step(s);
        output_series.push_back(s.frames.back().total_output);
        res.stopped_at = m;
        if (m % interval != 0) continue;

        double births = 0.0;
        for (int i = static_cast<int>(s.frames.size()) - interval;
             i < static_cast<int>(s.frames.size()); ++i)
            births += s.frames[i].births;
        obs_births = births / interval * 12.0 * s.scale;
        obs_wealth = trailing_mean(s.frames, interval,
                                   [](const SeriesFrame& f) { return f.total_wealth; }) *
                     s.scale;
        obs_u = trailing_mean(s.frames, interval,
                              [](const SeriesFrame& f) { return f.unemployment_rate; });

        CalibrationReview r;
        r.review = static_cast<int>(res.reviews.size()) + 1;
        r.month = m;
        r.births_observed = obs_births;
        r.births_target = target_births;
        r.births_factor = nudge(target_births, obs_births, gain);
        r.wealth_observed = obs_wealth;
        r.wealth_target = target_wealth;
        r.wealth_factor = nudge(target_wealth, obs_wealth, gain);
        r.unemployment_observed = obs_u;
        r.unemployment_target = target_u;
        // unemployment steers the wage scale in the same direction as the gap
        r.wage_factor = gain <= 0.0 ? 1.0
                        : obs_u > 0.0
                            ? clip_factor(std::pow(obs_u / target_u, gain))
                            : 0.5;

        s.config.startup_probability *= r.births_factor;
        s.config.propensity *= r.wealth_factor;
        s.config.wage_scale *= r.wage_factor;
        r.startup_probability = s.config.startup_probability;
        r.propensity = s.config.propensity;
        r.wage_scale = s.config.wage_scale;
        r.within_tolerance = within(obs_births, target_births, schedule.tolerance) &&
                             within(obs_wealth, target_wealth, schedule.tolerance) &&
                             within(obs_u, target_u, schedule.tolerance);
        res.reviews.push_back(r);

        if (r.within_tolerance) {
            res.steady_state_at = steady_state_month(output_series, SteadyStateParams{});
            if (res.steady_state_at >= 0) {
                res.converged = true;
                break;
            }
        }
    }

    if (res.steady_state_at < 0)
        res.steady_state_at = steady_state_month(output_series, SteadyStateParams{});
    if (!res.reviews.empty() && !res.converged) {
        auto outside = [](double obs, double target) {
            return obs > 10.0 * target || obs < 0.1 * target;
        };
        res.diverged = outside(obs_births, target_births) || outside(obs_wealth, target_wealth) ||
                       outside(obs_u, target_u);
    }

    res.calibrated = s.config;
    res.final_indicators = convergence_indicators(s);

    // single-run-sufficiency check: the calibrated config at three seeds
    std::array<SeedOutcome, 3> seed_runs;
    for (int i = 0; i < 3; ++i) {
        SimConfig cfg = res.calibrated;
        cfg.seed = config.seed + static_cast<std::uint64_t>(i);
        res.dispersion_seeds[i] = cfg.seed;
        seed_runs[i] = run_fixed(cfg, res.stopped_at);
    }
    auto pick = [&](double SeedOutcome::* field) {
        return std::array<double, 3>{seed_runs[0].*field, seed_runs[1].*field,
                                     seed_runs[2].*field};
    };
    res.dispersion.push_back(dispersion_row("unemployment", pick(&SeedOutcome::unemployment), true));
    res.dispersion.push_back(dispersion_row("firm_count", pick(&SeedOutcome::firm_count), true));
    res.dispersion.push_back(dispersion_row("gini", pick(&SeedOutcome::gini), true));
    res.dispersion.push_back(dispersion_row("output", pick(&SeedOutcome::output), true));
    // firm births are a small count at desk scale; reported, not gated
    res.dispersion.push_back(
        dispersion_row("births_per_year", pick(&SeedOutcome::births_annual), false));
    res.dispersion_ok = true;
    for (const auto& row : res.dispersion)
        if (row.gated && row.spread > schedule.tolerance) res.dispersion_ok = false;

    return res;
}

std::string CalibrationResult::reviews_csv() const {
    std::ostringstream os;
    os << "review,month,births_observed,births_target,births_factor,"
          "wealth_observed,wealth_target,wealth_factor,"
          "unemployment_observed,unemployment_target,wage_factor,"
          "startup_probability,propensity,wage_scale,within_tolerance\n";
    for (const auto& r : reviews) {
        os << r.review << ',' << r.month << ',' << format_double(r.births_observed) << ','
           << format_double(r.births_target) << ',' << format_double(r.births_factor) << ','
           << format_double(r.wealth_observed) << ',' << format_double(r.wealth_target) << ','
           << format_double(r.wealth_factor) << ',' << format_double(r.unemployment_observed)
           << ',' << format_double(r.unemployment_target) << ',' << format_double(r.wage_factor)
           << ',' << format_double(r.startup_probability) << ',' << format_double(r.propensity)
           << ',' << format_double(r.wage_scale) << ',' << (r.within_tolerance ? 1 : 0) << '\n';
    }
    return os.str();
}

std::string CalibrationResult::summary() const {
    std::ostringstream os;
    if (converged)
        os << "calibration converged at month " << stopped_at << " after " << reviews.size()
           << " reviews\n";
    else if (diverged)
        os << "calibration DIVERGED by month " << stopped_at << " (observable beyond 10x or below 0.1x target)\n";
    else
        os << "calibration did not converge within " << stopped_at << " months ("
           << reviews.size() << " reviews)\n";
    if (!reviews.empty()) {
        const auto& r = reviews.back();
        auto rel = [](double obs, double target) { return (obs - target) / target; };
        os << "  births/year    target " << format_double(r.births_target) << "  observed "
           << format_double(r.births_observed) << "  (" << pct(rel(r.births_observed, r.births_target))
           << ")  startup_probability " << format_double(r.startup_probability) << '\n';
        os << "  wealth         target " << format_double(r.wealth_target) << "  observed "
           << format_double(r.wealth_observed) << "  (" << pct(rel(r.wealth_observed, r.wealth_target))
           << ")  propensity " << format_double(r.propensity) << '\n';
        os << "  unemployment   target " << format_double(r.unemployment_target) << "  observed "
           << format_double(r.unemployment_observed) << "  ("
           << pct(rel(r.unemployment_observed, r.unemployment_target)) << ")  wage_scale "
           << format_double(r.wage_scale) << '\n';
    }
    os << "steady state: "
       << (steady_state_at >= 0 ? "month " + std::to_string(steady_state_at) : "not reached")
       << '\n';
    os << "final indicators: output_error " << format_double(final_indicators.sectoral_output_error)
       << "  unemployment " << format_double(final_indicators.unemployment) << "  firms "
       << final_indicators.firm_count << "  gini " << format_double(final_indicators.gini)
       << "  births/year " << format_double(final_indicators.births_annualized) << '\n';
    os << "seed dispersion (seeds " << dispersion_seeds[0] << '/' << dispersion_seeds[1] << '/'
       << dispersion_seeds[2] << ", final-120-month means):\n";
    for (const auto& row : dispersion) {
        os << "  " << row.name << ' ' << format_double(row.by_seed[0]) << ' '
           << format_double(row.by_seed[1]) << ' ' << format_double(row.by_seed[2])
           << "  spread " << pct(row.spread);
        if (!row.gated) os << "  (reported only: small-count observable at desk scale)";
        os << '\n';
    }
    os << "dispersion gate: " << (dispersion_ok ? "PASS" : "FAIL") << " (tolerance "
       << format_double(dispersion_tolerance) << ")\n";
    return os.str();
}

} // namespace samsim
