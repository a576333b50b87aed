#pragma once

// Flat key=value run configuration, shared by the CLI and the test suites.
// Unknown keys are rejected so typos fail fast.

#include <cstdint>
#include <iosfwd>
#include <stdexcept>
#include <string>

namespace samsim {

struct ConfigError : std::runtime_error {
    ConfigError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg) {}
};

struct SimConfig {
    std::string sam_path;

    // population and scale
    double active_population = 5.0e6;
    double workers_per_million_per_sector = 10.0;
    int workers = 0; // 0: derive from the population rule
    double unemployment_target = 0.044;
    double wealth_target = 1.5e9;          // same currency unit as the SAM file
    double firm_births_per_year = 36000.0; // population scale, before the sim scale factor

    // behavior
    double propensity = 0.55; // initial kappa of the consumption rule
    double phi = 6.0;
    double price_k = 0.002;
    double inventory_multiple = 2.0;
    double startup_probability = 0.007; // per household per month
    double startup_wealth_fraction = 0.5;

    // institutions
    double gfcf_surplus_fraction = 0.3;
    double gfcf_grant_share = 0.0;       // government co-funding of the investment pool
    double dividend_payout_rate = 0.5;
    double dividend_buffer_months = 3.0;
    double unemployment_benefit_ratio = 0.5;
    int benefit_vesting_months = 12; // work record needed before benefits
    double household_transfer_rate = 0.0; // universal transfer, fraction of mean wage
    double charter_capital_months = 3.0; // budget seed for chartered public providers
    double fiscal_room_slack = 0.5; // bond-financed spending allowed past last month's inflows
    double money_target = 0.0; // source units; tapers the slack off as total money approaches it
    double initial_wealth_fraction = 1.0; // share of the wealth target paid out at start; with a
                                          // money target set, the rest enters as deployment credit
    int insolvency_months_to_exit = 3;
    int idle_months_to_exit = 12;
    int hire_cap_per_month = 2;
    int fire_cap_per_month = 1000000;  // layoffs per firm per month; default unconstrained
    int entry_rivals_cap = 1000000; // skip founding amid this many same-sector rivals; default off

    // windows and space
    int income_window = 12;
    int demand_window = 3;
    double neighborhood_size_target = 50.0;
    std::string basket = "auto"; // auto|table|residual|uniform

    // run
    std::uint64_t seed = 42;
    int months = 600;
    double wage_scale = 1.0; // calibration lever on all wages

    void validate() const; // throws ConfigError when a field is out of range
};

SimConfig parse_config(std::istream& in, std::string_view source = "<stream>");
SimConfig load_config(const std::string& path);
// apply one "key" + value pair (used for CLI overrides); throws on unknown key
void set_config_key(SimConfig& cfg, const std::string& key, const std::string& value);
std::string config_to_text(const SimConfig& cfg);
void save_config(const SimConfig& cfg, const std::string& path);

struct CalibrationTargets {
    double unemployment_rate = 0.044;
    double wealth_target = 0.0;        // 0: take from config
    double firm_births_per_year = 0.0; // 0: take from config
};

struct CalibrationSchedule {
    int horizon_months = 600;
    double adjustment_gain = 0.1;
    int review_interval = 12;
    double tolerance = 0.05;
};

struct TargetsFile {
    CalibrationTargets targets;
    CalibrationSchedule schedule;
};

TargetsFile parse_targets(std::istream& in, std::string_view source = "<stream>");
TargetsFile load_targets(const std::string& path);

} // namespace samsim
