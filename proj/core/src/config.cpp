#include "samsim/config.hpp"
#include "samsim/text.hpp"

#include <fstream>
#include <functional>
#include <istream>
#include <map>
#include <sstream>

namespace samsim {

namespace {

double parse_num(const std::string& key, const std::string& value) {
    double v;
    if (!parse_double(value, v)) throw ConfigError("key '" + key + "': '" + value + "' is not a number");
    return v;
}

long long parse_int(const std::string& key, const std::string& value) {
    long long v;
    if (!parse_long(value, v)) throw ConfigError("key '" + key + "': '" + value + "' is not an integer");
    return v;
}

} // namespace

void set_config_key(SimConfig& c, const std::string& key, const std::string& value) {
    if (key == "sam") c.sam_path = value;
    else if (key == "active_population") c.active_population = parse_num(key, value);
    else if (key == "workers_per_million_per_sector") c.workers_per_million_per_sector = parse_num(key, value);
    else if (key == "workers") c.workers = static_cast<int>(parse_int(key, value));
    else if (key == "unemployment_target") c.unemployment_target = parse_num(key, value);
    else if (key == "wealth_target") c.wealth_target = parse_num(key, value);
    else if (key == "firm_births_per_year") c.firm_births_per_year = parse_num(key, value);
    else if (key == "propensity") c.propensity = parse_num(key, value);
    else if (key == "phi") c.phi = parse_num(key, value);
    else if (key == "price_k") c.price_k = parse_num(key, value);
    else if (key == "inventory_multiple") c.inventory_multiple = parse_num(key, value);
    else if (key == "startup_probability") c.startup_probability = parse_num(key, value);
    else if (key == "startup_wealth_fraction") c.startup_wealth_fraction = parse_num(key, value);
    else if (key == "gfcf_surplus_fraction") c.gfcf_surplus_fraction = parse_num(key, value);
    else if (key == "gfcf_grant_share") c.gfcf_grant_share = parse_num(key, value);
    else if (key == "dividend_payout_rate") c.dividend_payout_rate = parse_num(key, value);
    else if (key == "dividend_buffer_months") c.dividend_buffer_months = parse_num(key, value);
    else if (key == "unemployment_benefit_ratio") c.unemployment_benefit_ratio = parse_num(key, value);
    else if (key == "benefit_vesting_months") c.benefit_vesting_months = static_cast<int>(parse_int(key, value));
    else if (key == "household_transfer_rate") c.household_transfer_rate = parse_num(key, value);
    else if (key == "charter_capital_months") c.charter_capital_months = parse_num(key, value);
    else if (key == "fiscal_room_slack") c.fiscal_room_slack = parse_num(key, value);
    else if (key == "money_target") c.money_target = parse_num(key, value);
    else if (key == "initial_wealth_fraction") c.initial_wealth_fraction = parse_num(key, value);
    else if (key == "insolvency_months_to_exit") c.insolvency_months_to_exit = static_cast<int>(parse_int(key, value));
    else if (key == "idle_months_to_exit") c.idle_months_to_exit = static_cast<int>(parse_int(key, value));
    else if (key == "hire_cap_per_month") c.hire_cap_per_month = static_cast<int>(parse_int(key, value));
    else if (key == "fire_cap_per_month") c.fire_cap_per_month = static_cast<int>(parse_int(key, value));
    else if (key == "entry_rivals_cap") c.entry_rivals_cap = static_cast<int>(parse_int(key, value));
    else if (key == "income_window") c.income_window = static_cast<int>(parse_int(key, value));
    else if (key == "demand_window") c.demand_window = static_cast<int>(parse_int(key, value));
    else if (key == "neighborhood_size_target") c.neighborhood_size_target = parse_num(key, value);
    else if (key == "basket") c.basket = value;
    else if (key == "seed") c.seed = static_cast<std::uint64_t>(parse_int(key, value));
    else if (key == "months") c.months = static_cast<int>(parse_int(key, value));
    else if (key == "wage_scale") c.wage_scale = parse_num(key, value);
    else throw ConfigError("unknown config key '" + key + "'");
}

void SimConfig::validate() const {
    auto fail = [](const std::string& msg) { throw ConfigError(msg); };
    if (active_population <= 0) fail("active_population must be positive");
    if (workers < 0) fail("workers must be >= 0");
    if (workers_per_million_per_sector <= 0) fail("workers_per_million_per_sector must be positive");
    if (unemployment_target < 0 || unemployment_target >= 1) fail("unemployment_target must be in [0,1)");
    if (wealth_target < 0) fail("wealth_target must be >= 0");
    if (firm_births_per_year < 0) fail("firm_births_per_year must be >= 0");
    if (propensity < 0 || propensity > 1) fail("propensity must be in [0,1]");
    if (phi < 0) fail("phi must be >= 0");
    if (price_k < 0 || price_k >= 1) fail("price_k must be in [0,1)");
    if (inventory_multiple <= 0) fail("inventory_multiple must be positive");
    if (startup_probability < 0 || startup_probability > 1) fail("startup_probability must be in [0,1]");
    if (startup_wealth_fraction < 0 || startup_wealth_fraction > 1) fail("startup_wealth_fraction must be in [0,1]");
    if (gfcf_surplus_fraction < 0 || gfcf_surplus_fraction > 1) fail("gfcf_surplus_fraction must be in [0,1]");
    if (gfcf_grant_share < 0 || gfcf_grant_share > 0.95) fail("gfcf_grant_share must be in [0,0.95]");
    if (dividend_payout_rate < 0 || dividend_payout_rate > 1) fail("dividend_payout_rate must be in [0,1]");
    if (dividend_buffer_months < 0) fail("dividend_buffer_months must be >= 0");
    if (unemployment_benefit_ratio < 0 || unemployment_benefit_ratio > 1) fail("unemployment_benefit_ratio must be in [0,1]");
    if (benefit_vesting_months < 0) fail("benefit_vesting_months must be >= 0");
    if (household_transfer_rate < 0 || household_transfer_rate > 5) fail("household_transfer_rate must be in [0,5]");
    if (charter_capital_months < 0) fail("charter_capital_months must be >= 0");
    if (fiscal_room_slack < 0) fail("fiscal_room_slack must be >= 0");
    if (money_target < 0) fail("money_target must be >= 0");
    if (initial_wealth_fraction < 0 || initial_wealth_fraction > 1)
        fail("initial_wealth_fraction must be in [0,1]");
    if (insolvency_months_to_exit < 1) fail("insolvency_months_to_exit must be >= 1");
    if (idle_months_to_exit < 1) fail("idle_months_to_exit must be >= 1");
    if (hire_cap_per_month < 1) fail("hire_cap_per_month must be >= 1");
    if (fire_cap_per_month < 1) fail("fire_cap_per_month must be >= 1");
    if (entry_rivals_cap < 1) fail("entry_rivals_cap must be >= 1");
    if (income_window < 1) fail("income_window must be >= 1");
    if (demand_window < 1) fail("demand_window must be >= 1");
    if (neighborhood_size_target <= 0) fail("neighborhood_size_target must be positive");
    if (basket != "auto" && basket != "table" && basket != "residual" && basket != "uniform")
        fail("basket must be one of auto|table|residual|uniform");
    if (months < 0) fail("months must be >= 0");
    if (wage_scale <= 0) fail("wage_scale must be positive");
}

namespace {

// shared key=value reader: calls sink(key, value, line)
void read_kv(std::istream& in, std::string_view source,
             const std::function<void(const std::string&, const std::string&, int)>& sink) {
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        auto eq = s.find('=');
        if (eq == std::string_view::npos)
            throw ConfigError(std::string(source) + ": expected 'key = value'", line_no);
        std::string key(trim(s.substr(0, eq)));
        std::string value(trim(s.substr(eq + 1)));
        if (key.empty()) throw ConfigError(std::string(source) + ": empty key", line_no);
        sink(key, value, line_no);
    }
}

} // namespace

SimConfig parse_config(std::istream& in, std::string_view source) {
    SimConfig cfg;
    read_kv(in, source, [&](const std::string& k, const std::string& v, int line) {
        try {
            set_config_key(cfg, k, v);
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(source) + ": " + e.what(), line);
        }
    });
    return cfg;
}

SimConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return parse_config(in, path);
}

std::string config_to_text(const SimConfig& c) {
    std::ostringstream os;
    os << "sam = " << c.sam_path << '\n';
    os << "active_population = " << format_double(c.active_population) << '\n';
    os << "workers_per_million_per_sector = " << format_double(c.workers_per_million_per_sector) << '\n';
    os << "workers = " << c.workers << '\n';
    os << "unemployment_target = " << format_double(c.unemployment_target) << '\n';
    os << "wealth_target = " << format_double(c.wealth_target) << '\n';
    os << "firm_births_per_year = " << format_double(c.firm_births_per_year) << '\n';
    os << "propensity = " << format_double(c.propensity) << '\n';
    os << "phi = " << format_double(c.phi) << '\n';
    os << "price_k = " << format_double(c.price_k) << '\n';
    os << "inventory_multiple = " << format_double(c.inventory_multiple) << '\n';
    os << "startup_probability = " << format_double(c.startup_probability) << '\n';
    os << "startup_wealth_fraction = " << format_double(c.startup_wealth_fraction) << '\n';
    os << "gfcf_surplus_fraction = " << format_double(c.gfcf_surplus_fraction) << '\n';
    os << "gfcf_grant_share = " << format_double(c.gfcf_grant_share) << '\n';
    os << "dividend_payout_rate = " << format_double(c.dividend_payout_rate) << '\n';
    os << "dividend_buffer_months = " << format_double(c.dividend_buffer_months) << '\n';
    os << "unemployment_benefit_ratio = " << format_double(c.unemployment_benefit_ratio) << '\n';
    os << "benefit_vesting_months = " << c.benefit_vesting_months << '\n';
    os << "household_transfer_rate = " << format_double(c.household_transfer_rate) << '\n';
    os << "charter_capital_months = " << format_double(c.charter_capital_months) << '\n';
    os << "fiscal_room_slack = " << format_double(c.fiscal_room_slack) << '\n';
    os << "money_target = " << format_double(c.money_target) << '\n';
    os << "initial_wealth_fraction = " << format_double(c.initial_wealth_fraction) << '\n';
    os << "insolvency_months_to_exit = " << c.insolvency_months_to_exit << '\n';
    os << "idle_months_to_exit = " << c.idle_months_to_exit << '\n';
    os << "hire_cap_per_month = " << c.hire_cap_per_month << '\n';
    os << "fire_cap_per_month = " << c.fire_cap_per_month << '\n';
    os << "entry_rivals_cap = " << c.entry_rivals_cap << '\n';
    os << "income_window = " << c.income_window << '\n';
    os << "demand_window = " << c.demand_window << '\n';
    os << "neighborhood_size_target = " << format_double(c.neighborhood_size_target) << '\n';
    os << "basket = " << c.basket << '\n';
    os << "seed = " << c.seed << '\n';
    os << "months = " << c.months << '\n';
    os << "wage_scale = " << format_double(c.wage_scale) << '\n';
    return os.str();
}

void save_config(const SimConfig& cfg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write '" + path + "'");
    out << config_to_text(cfg);
}

TargetsFile parse_targets(std::istream& in, std::string_view source) {
    TargetsFile t;
    read_kv(in, source, [&](const std::string& k, const std::string& v, int line) {
        try {
            if (k == "unemployment_rate") t.targets.unemployment_rate = parse_num(k, v);
            else if (k == "wealth_target") t.targets.wealth_target = parse_num(k, v);
            else if (k == "firm_births_per_year") t.targets.firm_births_per_year = parse_num(k, v);
            else if (k == "horizon_months") t.schedule.horizon_months = static_cast<int>(parse_int(k, v));
            else if (k == "adjustment_gain") t.schedule.adjustment_gain = parse_num(k, v);
            else if (k == "review_interval") t.schedule.review_interval = static_cast<int>(parse_int(k, v));
            else if (k == "tolerance") t.schedule.tolerance = parse_num(k, v);
            else throw ConfigError("unknown targets key '" + k + "'");
        } catch (const ConfigError& e) {
            throw ConfigError(std::string(source) + ": " + e.what(), line);
        }
    });
    if (t.targets.unemployment_rate < 0 || t.targets.unemployment_rate >= 1)
        throw ConfigError("unemployment_rate must be in [0,1)");
    // gain 0 is accepted as the degenerate "no adjustment" schedule
    if (t.schedule.adjustment_gain < 0 || t.schedule.adjustment_gain > 1)
        throw ConfigError("adjustment_gain must be in [0,1]");
    if (t.schedule.review_interval < 1) throw ConfigError("review_interval must be >= 1");
    if (t.schedule.horizon_months < 2 * t.schedule.review_interval)
        throw ConfigError("horizon_months must be >= 2 * review_interval");
    if (t.schedule.tolerance <= 0) throw ConfigError("tolerance must be positive");
    return t;
}

TargetsFile load_targets(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open '" + path + "'");
    return parse_targets(in, path);
}

} // namespace samsim
