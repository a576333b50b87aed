#include "samsim/engine.hpp"
#include "samsim/text.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <numbers>
#include <ostream>
#include <sstream>

namespace samsim {

double SimState::total_money() const {
    double m = 0.0;
    for (const Household& h : households) m += h.wealth;
    for (const Firm& f : firms)
        if (f.alive) m += f.cash;
    m += institutions.government_cash;
    m += institutions.gfcf_pool;
    return m;
}

int SimState::employed_count() const {
    int n = 0;
    for (const Household& h : households)
        if (h.employer) ++n;
    return n;
}

double SimState::unemployment_rate() const {
    if (households.empty()) return 0.0;
    return 1.0 - static_cast<double>(employed_count()) / households.size();
}

// --- policy ---

std::vector<PolicyEvent> parse_policy(std::istream& in, std::string_view source) {
    std::vector<PolicyEvent> out;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        auto s = trim(line);
        if (s.empty() || s.front() == '#') continue;
        if (line_no == 1 && s == "month,kind,value") continue;
        auto cells = split_csv_line(s);
        if (cells.size() != 3)
            throw EngineError(std::string(source) + " line " + std::to_string(line_no) +
                              ": expected month,kind,value");
        PolicyEvent e;
        long long m;
        if (!parse_long(cells[0], m))
            throw EngineError(std::string(source) + " line " + std::to_string(line_no) +
                              ": bad month '" + cells[0] + "'");
        e.month = static_cast<int>(m);
        e.kind = cells[1];
        if (!parse_double(cells[2], e.value))
            throw EngineError(std::string(source) + " line " + std::to_string(line_no) +
                              ": bad value '" + cells[2] + "'");
        out.push_back(std::move(e));
    }
    return out;
}

std::vector<PolicyEvent> load_policy(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw EngineError("cannot open '" + path + "'");
    return parse_policy(in, path);
}

namespace {

int find_product_tax_account(const SamTable& sam) {
    for (const auto& a : sam.accounts)
        if (a.kind == AccountKind::Tax && a.code.find("TaxProducts") != std::string::npos)
            return a.id;
    return -1;
}

// Shift the product-tax share of every producing sector by value, taking the
// offset out of the surplus share, and keep the raw column consistent.
void apply_policy_now(SimState& s, const PolicyEvent& p) {
    int tax_acc = find_product_tax_account(s.sam);
    for (auto& sp : s.sectors) {
        TechProfile& prof = sp.profile;
        prof.tax_shares[tax_acc] += p.value;
        prof.surplus_share -= p.value;
        prof.column[tax_acc] += p.value * prof.col_sum;
        // mirror the offset in the largest surplus row cell
        int k_row = -1;
        double k_best = -1.0;
        for (const auto& a : s.sam.accounts)
            if (a.kind == AccountKind::Surplus && std::abs(prof.column[a.id]) > k_best) {
                k_best = std::abs(prof.column[a.id]);
                k_row = a.id;
            }
        if (k_row >= 0) prof.column[k_row] -= p.value * prof.col_sum;
    }
}

} // namespace

void apply_policy(SimState& s, const PolicyEvent& p) {
    if (p.kind != "TaxProductsRateDelta")
        throw EngineError("unknown policy kind '" + p.kind + "'");
    if (p.month <= s.month)
        throw EngineError("policy month " + std::to_string(p.month) +
                          " is not after current month " + std::to_string(s.month));
    int tax_acc = find_product_tax_account(s.sam);
    if (tax_acc < 0) throw EngineError("SAM has no product-tax account");

    for (const auto& sp : s.sectors) {
        double tax_share = 0.0;
        auto it = sp.profile.tax_shares.find(tax_acc);
        if (it != sp.profile.tax_shares.end()) tax_share = it->second;
        double surplus = sp.profile.surplus_share;
        // include already queued interventions
        for (const auto& q : s.pending_policies) {
            tax_share += q.value;
            surplus -= q.value;
        }
        tax_share += p.value;
        surplus -= p.value;
        if (tax_share < -0.5 || tax_share > 0.9 || surplus < -0.5 || surplus > 0.9)
            throw EngineError("policy rejected: resulting share out of [-0.5, 0.9] in sector " +
                              sp.code);
    }
    s.pending_policies.push_back(p);
}

// --- deploy ---

SimState deploy(const SimConfig& config) { return deploy(config, load_sam(config.sam_path)); }

SimState deploy(const SimConfig& config, SamTable sam) {
    config.validate();
    auto report = validate_sam(sam);
    if (report.has_errors())
        throw EngineError("SAM validation failed:\n" + report.to_text());

    auto producing = sam.producing_sectors();
    if (producing.empty()) throw EngineError("SAM has no producing sectors");

    int workers = config.workers;
    if (workers == 0)
        workers = static_cast<int>(std::lround(config.active_population / 1e6 *
                                               config.workers_per_million_per_sector *
                                               static_cast<double>(producing.size())));
    if (workers < 1) throw EngineError("worker count must be >= 1");

    SimState s;
    s.config = config;
    s.sam = std::move(sam);
    s.scale = config.active_population / workers;
    s.radius = std::sqrt(config.neighborhood_size_target / (std::numbers::pi * workers));
    if (s.radius > 0.5) s.radius = 0.5; // torus diameter bound
    s.rng = Rng(config.seed);

    BasketMode mode = BasketMode::Auto;
    if (config.basket == "table") mode = BasketMode::Table;
    else if (config.basket == "residual") mode = BasketMode::Residual;
    else if (config.basket == "uniform") mode = BasketMode::Uniform;
    auto basket = consumption_basket(s.sam, mode);

    int n_sectors = static_cast<int>(producing.size());
    double employment_target = (1.0 - config.unemployment_target) * workers / n_sectors;
    if (!(employment_target > 0.0)) throw EngineError("employment target must be positive");

    s.sector_index.assign(s.sam.size(), -1);
    double wage_weighted = 0.0;
    double goods_monthly_total = 0.0;
    double tax_monthly_total = 0.0;
    for (int acc : producing) {
        SectorParams sp;
        sp.account = acc;
        sp.code = s.sam.accounts[acc].code;
        sp.market = s.sam.accounts[acc].kind == AccountKind::MarketSector;
        sp.profile = tech_profile(s.sam, acc);
        sp.monthly_output = s.sam.col_sums[acc] / s.scale / 12.0;
        sp.employment_target = employment_target;
        sp.output_per_worker = sp.monthly_output / employment_target;

        double wage_bill = 0.0;
        for (const auto& a : s.sam.accounts)
            if (a.kind == AccountKind::Labor) wage_bill += s.sam.at(a.id, acc);
        sp.wage = wage_bill / s.scale / 12.0 / employment_target;
        wage_weighted += sp.wage * employment_target;

        auto it = basket.find(acc);
        sp.basket_share = it != basket.end() ? it->second : 0.0;

        for (const auto& a : s.sam.accounts) {
            if (a.kind == AccountKind::External)
                sp.export_monthly += s.sam.at(acc, a.id) / s.scale / 12.0;
            if (a.kind == AccountKind::CapitalFormation)
                sp.gfcf_goods_monthly += s.sam.at(acc, a.id) / s.scale / 12.0;
        }
        goods_monthly_total += sp.gfcf_goods_monthly;

        s.sector_index[acc] = static_cast<int>(s.sectors.size());
        s.sectors.push_back(std::move(sp));
        s.sector_codes.push_back(s.sam.accounts[acc].code);
    }
    s.mean_wage = wage_weighted / (employment_target * n_sectors);

    for (const auto& a : s.sam.accounts) {
        if (a.kind != AccountKind::CapitalFormation) continue;
        s.gfcf_monthly += s.sam.col_sums[a.id] / s.scale / 12.0;
        for (const auto& t : s.sam.accounts)
            if (t.kind == AccountKind::Tax) tax_monthly_total += s.sam.at(t.id, a.id) / s.scale / 12.0;
    }
    s.gfcf_tax_per_goods = goods_monthly_total > 0.0 ? tax_monthly_total / goods_monthly_total : 0.0;

    s.household_index = NeighborhoodIndex(s.radius);
    s.firm_index = NeighborhoodIndex(s.radius);

    // the first budget covers one month of public-sector output so providers
    // can sell from month one; afterwards the room tracks actual inflows
    for (const auto& sp : s.sectors)
        if (!sp.market) s.institutions.fiscal_room += sp.monthly_output;

    double wealth_each =
        config.initial_wealth_fraction * config.wealth_target / s.scale / workers;
    auto positions = random_positions(workers, s.rng);
    s.households.reserve(workers);
    for (int i = 0; i < workers; ++i) {
        Household h;
        h.id = i;
        h.position = positions[i];
        h.wealth = wealth_each;
        h.income_history = History(config.income_window);
        h.reservation.assign(s.sam.size(), 1.0);
        s.household_index.insert(i, h.position);
        s.households.push_back(std::move(h));
    }
    return s;
}

// --- entry and exit ---

std::vector<FirmId> entrepreneurial_entry(SimState& s) {
    std::vector<FirmId> born;
    double p = s.config.startup_probability;
    if (p <= 0.0) return born;

    // entrepreneurs enter market sectors only; non-market providers are
    // chartered by the government inside step()
    std::vector<size_t> open;
    for (size_t i = 0; i < s.sectors.size(); ++i)
        if (s.sectors[i].market) open.push_back(i);
    if (open.empty()) return born;

    for (Household& h : s.households) {
        if (!h.owned_firms.empty()) continue;
        if (!s.rng.bernoulli(p)) continue;

        auto visible = s.signals.visible_demand(h.position, s.radius);
        std::vector<double> weights(open.size(), 0.0);
        double total = 0.0;
        for (size_t i = 0; i < open.size(); ++i) {
            auto it = visible.find(s.sectors[open[i]].account);
            if (it != visible.end()) {
                weights[i] = it->second;
                total += it->second;
            }
        }
        // no visible unmet demand: any sector looks as good as another
        if (!(total > 0.0)) weights.assign(open.size(), 1.0);
        size_t pick = open[s.rng.weighted(weights)];
        const SectorParams& sp = s.sectors[pick];

        // scout the local competition: a crowded market is not worth entering
        int rivals = 0;
        for (int fid : s.firm_index.neighbors_within(h.position, s.radius))
            if (s.firms[fid].alive && s.firms[fid].sector == sp.account) ++rivals;
        if (rivals >= s.config.entry_rivals_cap) continue;

        double expected_firms = std::max(1.0, sp.employment_target / 8.0);
        double capital =
            std::min(h.wealth * s.config.startup_wealth_fraction,
                     12.0 * sp.monthly_output / expected_firms);
        if (!(capital > 0.0)) continue;

        Firm f;
        f.id = static_cast<FirmId>(s.firms.size());
        f.sector = sp.account;
        f.position = h.position;
        f.fixed_price = !sp.market;
        f.cash = capital;
        f.owner = h.id;
        f.demand_history = History(s.config.demand_window);
        h.wealth -= capital;
        h.ever_employed = true; // the founder works in the firm
        h.owned_firms.push_back(f.id);
        s.firm_index.insert(f.id, f.position);
        born.push_back(f.id);
        s.firms.push_back(std::move(f));
        ++s.births_this_month;
    }
    return born;
}

std::vector<FirmId> exit_check(SimState& s) {
    std::vector<FirmId> removed;
    for (Firm& f : s.firms) {
        if (!f.alive) continue;
        double one_wage = s.sector_of(f).wage * s.config.wage_scale;
        double wage_bill = static_cast<double>(f.employees.size()) * one_wage;
        if (f.cash < wage_bill) ++f.months_insolvent;
        else f.months_insolvent = 0;
        // a firm that has employed nobody for a year is closed; trickle sales
        // from leftover inventory do not keep it open
        if (!f.employees.empty()) f.months_idle = 0;
        else ++f.months_idle;

        bool insolvent = f.months_insolvent >= s.config.insolvency_months_to_exit;
        bool idle = f.months_idle >= s.config.idle_months_to_exit;
        if (!insolvent && !idle) continue;

        for (HouseholdId hid : f.employees) s.households[hid].employer.reset();
        f.employees.clear();
        // remaining cash goes back to the owner; inventory is written off
        if (f.owner >= 0) {
            Household& owner = s.households[f.owner];
            owner.wealth += f.cash;
            std::erase(owner.owned_firms, f.id);
        } else {
            s.institutions.government_cash += f.cash;
            s.flows.gov_revenue += f.cash;
        }
        f.cash = 0.0;
        f.inventory = 0.0;
        f.alive = false;
        s.firm_index.remove(f.id);
        removed.push_back(f.id);
        ++s.deaths_this_month;
    }
    return removed;
}

// --- the monthly step ---

void step(SimState& s) {
    const int month = s.month + 1;
    const double money_start = s.total_money();
    const double k = s.config.price_k;
    InstitutionalAccounts& inst = s.institutions;
    s.flows = MonthFlows{};
    s.signals.clear();
    s.births_this_month = 0;
    s.deaths_this_month = 0;

    int policy_marks = 0;
    for (const auto& p : s.pending_policies)
        if (p.month == month) {
            apply_policy_now(s, p);
            if (p.value != 0.0) ++policy_marks;
        }

    MarketContext ctx{s.firms, s.firm_index, s.signals, s.radius, k, month, s.tx_log};

    for (Household& h : s.households) h.income_this_month = 0.0;

    // (1) wages, roster order, only while cash covers the next pay
    for (Firm& f : s.firms) {
        if (!f.alive) continue;
        double w = s.sector_of(f).wage * s.config.wage_scale;
        for (HouseholdId hid : f.employees) {
            if (f.cash < w) break;
            f.cash -= w;
            s.households[hid].wealth += w;
            s.households[hid].income_this_month += w;
        }
    }

    // (2) government: taxes on last month's revenue, transfers, procurement.
    // Current spending is rationed by the fiscal room set aside last month
    // plus a bond-financed slack; a shortfall scales every payment down
    // instead of dropping recipients. The slack is the deployment credit
    // line: it stays fully open while the economy builds out, and once the
    // credit is retired it becomes a mild correction that holds the money
    // stock at its target.
    double slack = s.config.fiscal_room_slack;
    if (s.config.money_target > 0.0) {
        double m_target = s.config.money_target / s.scale;
        slack *= std::clamp((m_target - money_start) / (0.2 * m_target), -1.0, 1.0);
    }
    double room = std::max(0.0, inst.fiscal_room) + slack;
    double pool_contrib = 0.0;
    for (Firm& f : s.firms) {
        if (!f.alive || !(f.last_revenue > 0.0)) continue;
        const TechProfile& prof = s.sector_of(f).profile;
        double tax_due = 0.0;
        for (const auto& [acc, share] : prof.tax_shares) tax_due += share * f.last_revenue;
        if (tax_due >= 0.0) {
            double pay = std::min(f.cash, tax_due);
            f.cash -= pay;
            inst.government_cash += pay;
            s.flows.gov_revenue += pay;
        } else {
            double subsidy = std::min(-tax_due, room);
            if (subsidy > 0.0) {
                f.cash += subsidy;
                inst.government_cash -= subsidy;
                s.flows.gov_spending += subsidy;
                room -= subsidy;
            }
        }
        double contrib = s.config.gfcf_surplus_fraction * prof.surplus_share * f.last_revenue;
        if (contrib > 0.0) {
            double pay = std::min(f.cash, contrib);
            f.cash -= pay;
            inst.gfcf_pool += pay;
            pool_contrib += pay;
        }
    }
    // once the labor market has cleared, retire the deployment credit with a
    // one-time proportional balance adjustment: household holdings scale back
    // to the wealth target and the proceeds redeem outstanding bonds. Scaling
    // every balance by the same factor leaves relative positions untouched.
    if (s.config.money_target > 0.0 && !inst.levy_done && month >= 36 &&
        s.frames.size() >= 12) {
        double recent_u = 0.0;
        for (size_t i = s.frames.size() - 12; i < s.frames.size(); ++i)
            recent_u += s.frames[i].unemployment_rate;
        recent_u /= 12.0;
        if (recent_u <= 2.0 * s.config.unemployment_target) {
            double held = 0.0;
            for (const Household& h : s.households) held += h.wealth;
            double target_held = s.config.wealth_target / s.scale;
            if (held > target_held) {
                double rate = 1.0 - target_held / held;
                for (Household& h : s.households) {
                    double take = rate * h.wealth;
                    h.wealth -= take;
                    inst.government_cash += take;
                    s.flows.levy += take;
                }
                s.flows.gov_revenue += s.flows.levy;
            }
            inst.levy_done = true;
        }
    }
    double benefit = s.config.unemployment_benefit_ratio * s.mean_wage * s.config.wage_scale;
    double transfer = s.config.household_transfer_rate * s.mean_wage * s.config.wage_scale;
    int n_transfer = 0, n_benefit = 0;
    for (Household& h : s.households) {
        if (h.employer) ++h.months_employed;
        if (!h.ever_employed) continue; // transfers require a work record
        ++n_transfer;
        // benefits vest after a year of contributions
        if (!h.employer && h.owned_firms.empty() &&
            h.months_employed >= s.config.benefit_vesting_months)
            ++n_benefit;
    }
    double social_desired = n_transfer * transfer + n_benefit * benefit;
    double social_scale = social_desired > room ? room / social_desired : 1.0;
    if (social_desired > 0.0 && social_scale > 0.0) {
        for (Household& h : s.households) {
            if (!h.ever_employed) continue;
            bool jobless = !h.employer && h.owned_firms.empty();
            bool vested = h.months_employed >= s.config.benefit_vesting_months;
            double paid = (transfer + (jobless && vested ? benefit : 0.0)) * social_scale;
            if (!(paid > 0.0)) continue;
            inst.government_cash -= paid;
            h.wealth += paid;
            h.income_this_month += paid;
            s.flows.gov_spending += paid;
            room -= paid;
        }
        if (room < 0.0) room = 0.0;
    }
    for (const auto& sp : s.sectors) {
        if (sp.market) continue;
        // the government runs one provider per non-market sector; charter a
        // new one, capitalized from the budget, whenever the slot is empty
        bool alive = false;
        for (const Firm& f : s.firms)
            if (f.alive && f.sector == sp.account) alive = true;
        if (!alive) {
            Firm f;
            f.id = static_cast<FirmId>(s.firms.size());
            f.sector = sp.account;
            f.position = random_positions(1, s.rng)[0];
            f.fixed_price = true;
            f.owner = -1;
            f.cash = s.config.charter_capital_months * sp.wage * s.config.wage_scale *
                     sp.employment_target;
            f.demand_history = History(s.config.demand_window);
            inst.government_cash -= f.cash;
            s.flows.gov_spending += f.cash;
            s.firm_index.insert(f.id, f.position);
            s.firms.push_back(std::move(f));
            ++s.births_this_month;
        }
        // public services are a protected budget line: delivered in full even
        // when the month's room falls short, with bonds covering the gap, so
        // public employment steadies the cycle instead of following it
        auto out = institutional_purchase(ctx, BuyerKind::Government, -1, sp.account,
                                          sp.monthly_output, nullptr);
        inst.government_cash -= out.spent;
        s.flows.gov_spending += out.spent;
        room = std::max(0.0, room - out.spent);
    }

    // (3) household consumption
    ConsumptionParams cp{s.config.propensity, s.config.phi};
    std::vector<double> consumption_by_sector(s.sectors.size(), 0.0);
    for (Household& h : s.households) {
        double target = consumption_target(h.income_history.mean(), h.wealth, cp);
        if (!(target > 0.0)) continue;
        for (size_t i = 0; i < s.sectors.size(); ++i) {
            const SectorParams& sp = s.sectors[i];
            if (!(sp.basket_share > 0.0)) continue;
            double budget = std::min(target * sp.basket_share, h.wealth);
            auto out = household_purchase(ctx, h, sp.account, budget);
            consumption_by_sector[i] += out.spent;
        }
    }

    // (4) exogenous demand: exports, then investment spending from the pool
    for (const auto& sp : s.sectors) {
        if (!(sp.export_monthly > 0.0)) continue;
        auto out = institutional_purchase(ctx, BuyerKind::External, -1, sp.account,
                                          sp.export_monthly, nullptr);
        inst.external_balance -= out.spent;
        s.flows.exports += out.spent;
    }
    if (s.config.gfcf_grant_share > 0.0 && pool_contrib > 0.0) {
        // government co-funds investment so its share of pool inflow is
        // gfcf_grant_share; the line is honored even when the room falls
        // short, but never past a year's buffer in the pool, so investment
        // stays steady without the grants compounding
        double g = s.config.gfcf_grant_share;
        double grant = std::min(g / (1.0 - g) * pool_contrib,
                                std::max(0.0, 12.0 * s.gfcf_monthly - inst.gfcf_pool));
        if (grant > 0.0) {
            inst.government_cash -= grant;
            inst.gfcf_pool += grant;
            s.flows.gov_spending += grant;
            room = std::max(0.0, room - grant);
        }
    }
    if (s.gfcf_monthly > 0.0 && inst.gfcf_pool > 0.0) {
        // spend at the reference rate at most; the pool carries boom-time
        // contributions over to leaner months
        double plan = std::min(inst.gfcf_pool, s.gfcf_monthly);
        double lambda = plan / s.gfcf_monthly;
        double goods_spent = 0.0;
        for (const auto& sp : s.sectors) {
            if (!(sp.gfcf_goods_monthly > 0.0)) continue;
            auto out = institutional_purchase(ctx, BuyerKind::Investment, -1, sp.account,
                                              lambda * sp.gfcf_goods_monthly, &inst.gfcf_pool);
            goods_spent += out.spent;
        }
        double tax = std::min(inst.gfcf_pool, goods_spent * s.gfcf_tax_per_goods);
        if (tax > 0.0) {
            inst.gfcf_pool -= tax;
            inst.government_cash += tax;
            s.flows.gov_revenue += tax;
        }
    }

    // (5) firms: pay for inputs in proportion to last month's sales, then
    // produce what the workforce allows. The input bill is spent in full:
    // what local suppliers cannot fill is sourced abroad at the same cost,
    // so thin supply chains drain margins abroad instead of padding them.
    for (Firm& f : s.firms) {
        if (!f.alive) continue;
        const SectorParams& sp = s.sector_of(f);
        const TechProfile& prof = sp.profile;

        double input_rate = prof.import_share;
        for (const auto& [acc, share] : prof.input_shares) input_rate += share;
        if (input_rate > 0.0 && f.last_revenue > 0.0) {
            double need = input_rate * f.last_revenue;
            double ratio = need > f.cash ? f.cash / need : 1.0;
            double spent = 0.0;
            for (const auto& [acc, share] : prof.input_shares) {
                double budget = share * f.last_revenue * ratio;
                auto out = firm_purchase(ctx, f, acc, budget);
                spent += out.spent;
            }
            double abroad = need * ratio - spent;
            if (abroad > 0.0) {
                f.cash -= abroad;
                inst.external_balance += abroad;
                s.flows.imports += abroad;
            }
        }

        double target = target_inventory(f.demand_history, s.config.inventory_multiple);
        double expected = f.demand_history.empty() ? 0.0 : f.demand_history.mean();
        double planned = std::max(0.0, expected + (target - f.inventory));
        double capacity = static_cast<double>(f.employees.size()) * sp.output_per_worker;
        planned = std::min(planned, capacity);
        f.inventory += planned;

        double next_planned = std::max(0.0, expected + (target - f.inventory));
        int needed = planned_headcount(next_planned, sp.output_per_worker);
        int current = static_cast<int>(f.employees.size());
        if (needed > current) {
            int slots = std::min(s.config.hire_cap_per_month, needed - current);
            auto try_hire = [&](int hid) {
                Household& cand = s.households[hid];
                if (cand.employer) return;
                cand.employer = f.id;
                cand.ever_employed = true;
                f.employees.push_back(hid);
                --slots;
            };
            if (sp.market) {
                for (int hid : s.household_index.neighbors_within(f.position, s.radius)) {
                    if (slots == 0) break;
                    try_hire(hid);
                }
            } else {
                // public providers recruit nationwide, not just nearby
                for (size_t hid = 0; hid < s.households.size() && slots > 0; ++hid)
                    try_hire(static_cast<int>(hid));
            }
        } else {
            int cut = std::min(s.config.fire_cap_per_month, current - needed);
            while (cut > 0) {
                s.households[f.employees.back()].employer.reset();
                f.employees.pop_back();
                --cut;
            }
        }
    }

    // (6) entry, (7) exit, (8) dividends
    entrepreneurial_entry(s);
    exit_check(s);
    for (Firm& f : s.firms) {
        if (!f.alive) continue;
        double wage_bill =
            static_cast<double>(f.employees.size()) * s.sector_of(f).wage * s.config.wage_scale;
        double excess = f.cash - s.config.dividend_buffer_months * wage_bill;
        if (!(excess > 0.0)) continue;
        if (f.owner >= 0) {
            double payout = s.config.dividend_payout_rate * excess;
            f.cash -= payout;
            Household& owner = s.households[f.owner];
            owner.wealth += payout;
            owner.income_this_month += payout;
        } else {
            // public providers sell at cost: surplus above the working-capital
            // buffer returns to the budget
            f.cash -= excess;
            inst.government_cash += excess;
            s.flows.gov_revenue += excess;
        }
    }

    // budget the coming month from what actually came in plus the external
    // drain; the one-time adjustment is excluded so it cannot fund a spree
    inst.fiscal_room = s.flows.gov_revenue - s.flows.levy + s.flows.imports;

    // bond settlement: issuance covers the deficit exactly, surpluses redeem
    if (inst.government_cash < 0.0) {
        s.flows.bond_issued = -inst.government_cash;
        inst.bonds_outstanding += s.flows.bond_issued;
        inst.government_cash = 0.0;
    } else if (inst.government_cash > 0.0 && inst.bonds_outstanding > 0.0) {
        s.flows.bond_redeemed = std::min(inst.government_cash, inst.bonds_outstanding);
        inst.bonds_outstanding -= s.flows.bond_redeemed;
        inst.government_cash -= s.flows.bond_redeemed;
    }

    // (9) monthly price adaptation, roll tallies, snapshot metrics
    std::vector<double> output_by_sector(s.sectors.size(), 0.0);
    std::vector<int> firms_by_sector(s.sectors.size(), 0);
    for (Firm& f : s.firms) {
        if (!f.alive) continue;
        int idx = s.sector_index[f.sector];
        output_by_sector[idx] += f.revenue_this_month;
        ++firms_by_sector[idx];
        double sold = f.revenue_this_month / f.price;
        double unserved = f.demand_this_month - sold;
        // the 1-unit bootstrap target holds until the firm first faces demand
        if (!(f.demand_this_month == 0.0 && f.demand_history.empty()))
            f.demand_history.push(f.demand_this_month);
        if (!f.fixed_price) {
            // one price step per month, symmetric around the planned buffer:
            // raise when demand went unserved or ate into the buffer, cut
            // when stock sits above it, hold otherwise
            double planned = target_inventory(f.demand_history, s.config.inventory_multiple);
            if (unserved > 1e-9 || (f.demand_this_month > 0.0 && f.inventory < planned))
                f.price = price_update(f.price, k, MarketOutcome::SellerSold);
            else if (f.inventory > planned)
                f.price = price_update(f.price, k, MarketOutcome::SellerFailed);
        }
        f.last_revenue = f.revenue_this_month;
        f.demand_this_month = 0.0;
        f.revenue_this_month = 0.0;
    }
    for (Household& h : s.households) {
        h.income_history.push(h.income_this_month);
        if (h.wealth < 0.0) throw EngineError("negative household wealth at month boundary");
    }

    SeriesFrame frame;
    frame.month = month;
    frame.unemployment_rate = s.unemployment_rate();
    frame.births = s.births_this_month;
    frame.deaths = s.deaths_this_month;
    frame.policy_marks = policy_marks;
    std::vector<double> wealth;
    wealth.reserve(s.households.size());
    for (const Household& h : s.households) wealth.push_back(h.wealth);
    if (auto ws = wealth_stats(wealth)) {
        frame.total_wealth = ws->total;
        frame.gini_wealth = ws->gini;
        frame.top_decile_share = ws->top_decile_share;
        frame.top_percentile_share = ws->top_percentile_share;
    }
    if (auto fd = firm_size_distribution(s.firms)) {
        frame.firm_count = fd->firm_count;
        frame.size_firm_share = fd->firm_share;
        frame.size_employment_share = fd->employment_share;
    }
    for (double v : output_by_sector) frame.total_output += v;
    for (double v : consumption_by_sector) frame.total_consumption += v;
    frame.output_by_sector = std::move(output_by_sector);
    frame.consumption_by_sector = std::move(consumption_by_sector);
    frame.firms_by_sector = std::move(firms_by_sector);
    s.frames.push_back(std::move(frame));

    s.month = month;

    const double money_end = s.total_money();
    const double expected = money_start + s.flows.bond_issued - s.flows.bond_redeemed +
                            s.flows.exports - s.flows.imports;
    if (std::abs(money_end - expected) > 1e-6 * std::max(1.0, std::abs(money_end))) {
        std::ostringstream os;
        os << "money conservation violated at month " << month << ":\n"
           << "  start " << format_double(money_start) << " end " << format_double(money_end)
           << " expected " << format_double(expected) << "\n"
           << "  bond_issued " << format_double(s.flows.bond_issued) << " bond_redeemed "
           << format_double(s.flows.bond_redeemed) << "\n"
           << "  exports " << format_double(s.flows.exports) << " imports "
           << format_double(s.flows.imports) << "\n"
           << "  government " << format_double(inst.government_cash) << " pool "
           << format_double(inst.gfcf_pool) << " bonds "
           << format_double(inst.bonds_outstanding);
        throw ConservationError(os.str());
    }
}

// --- checkpoint ---

namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint format assumes little-endian doubles");

constexpr char kMagic[8] = {'S', 'A', 'M', 'S', 'I', 'M', 'C', '1'};

struct Writer {
    std::ostream& out;
    void bytes(const void* p, size_t n) { out.write(static_cast<const char*>(p), n); }
    void u8(std::uint8_t v) { bytes(&v, 1); }
    void i32(std::int32_t v) { bytes(&v, 4); }
    void u64(std::uint64_t v) { bytes(&v, 8); }
    void f64(double v) { bytes(&v, 8); }
    void str(const std::string& v) {
        u64(v.size());
        bytes(v.data(), v.size());
    }
    void f64v(const std::vector<double>& v) {
        u64(v.size());
        for (double x : v) f64(x);
    }
    void i32v(const std::vector<int>& v) {
        u64(v.size());
        for (int x : v) i32(x);
    }
};

struct Reader {
    std::istream& in;
    void bytes(void* p, size_t n) {
        in.read(static_cast<char*>(p), n);
        if (!in) throw EngineError("checkpoint truncated");
    }
    std::uint8_t u8() {
        std::uint8_t v;
        bytes(&v, 1);
        return v;
    }
    std::int32_t i32() {
        std::int32_t v;
        bytes(&v, 4);
        return v;
    }
    std::uint64_t u64() {
        std::uint64_t v;
        bytes(&v, 8);
        return v;
    }
    double f64() {
        double v;
        bytes(&v, 8);
        return v;
    }
    std::string str() {
        auto n = u64();
        if (n > (1ull << 32)) throw EngineError("checkpoint string too large");
        std::string v(n, '\0');
        if (n) bytes(v.data(), n);
        return v;
    }
    std::vector<double> f64v() {
        auto n = u64();
        std::vector<double> v(n);
        for (auto& x : v) x = f64();
        return v;
    }
    std::vector<int> i32v() {
        auto n = u64();
        std::vector<int> v(n);
        for (auto& x : v) x = i32();
        return v;
    }
};

void write_history(Writer& w, const History& h) {
    w.i32(h.window());
    w.f64v(h.ordered_values());
}

History read_history(Reader& r) {
    int window = r.i32();
    History h(window);
    for (double v : r.f64v()) h.push(v);
    return h;
}

void write_profile(Writer& w, const TechProfile& p) {
    w.i32(p.sector);
    w.f64(p.col_sum);
    w.f64v(p.column);
    w.u64(p.input_shares.size());
    for (const auto& [acc, v] : p.input_shares) {
        w.i32(acc);
        w.f64(v);
    }
    w.u64(p.tax_shares.size());
    for (const auto& [acc, v] : p.tax_shares) {
        w.i32(acc);
        w.f64(v);
    }
    w.f64(p.wage_share);
    w.f64(p.surplus_share);
    w.f64(p.import_share);
    w.f64(p.other_share);
}

TechProfile read_profile(Reader& r) {
    TechProfile p;
    p.sector = r.i32();
    p.col_sum = r.f64();
    p.column = r.f64v();
    auto ni = r.u64();
    for (std::uint64_t i = 0; i < ni; ++i) {
        int acc = r.i32();
        p.input_shares[acc] = r.f64();
    }
    auto nt = r.u64();
    for (std::uint64_t i = 0; i < nt; ++i) {
        int acc = r.i32();
        p.tax_shares[acc] = r.f64();
    }
    p.wage_share = r.f64();
    p.surplus_share = r.f64();
    p.import_share = r.f64();
    p.other_share = r.f64();
    return p;
}

void write_frame(Writer& w, const SeriesFrame& f) {
    w.i32(f.month);
    w.f64(f.unemployment_rate);
    w.f64(f.total_wealth);
    w.f64(f.gini_wealth);
    w.f64(f.top_decile_share);
    w.f64(f.top_percentile_share);
    w.i32(f.firm_count);
    w.i32(f.births);
    w.i32(f.deaths);
    w.i32(f.policy_marks);
    w.f64(f.total_output);
    w.f64(f.total_consumption);
    for (double v : f.size_firm_share) w.f64(v);
    for (double v : f.size_employment_share) w.f64(v);
    w.f64v(f.output_by_sector);
    w.f64v(f.consumption_by_sector);
    w.i32v(f.firms_by_sector);
}

SeriesFrame read_frame(Reader& r) {
    SeriesFrame f;
    f.month = r.i32();
    f.unemployment_rate = r.f64();
    f.total_wealth = r.f64();
    f.gini_wealth = r.f64();
    f.top_decile_share = r.f64();
    f.top_percentile_share = r.f64();
    f.firm_count = r.i32();
    f.births = r.i32();
    f.deaths = r.i32();
    f.policy_marks = r.i32();
    f.total_output = r.f64();
    f.total_consumption = r.f64();
    for (double& v : f.size_firm_share) v = r.f64();
    for (double& v : f.size_employment_share) v = r.f64();
    f.output_by_sector = r.f64v();
    f.consumption_by_sector = r.f64v();
    f.firms_by_sector = r.i32v();
    return f;
}

} // namespace

void save_checkpoint(const SimState& s, std::ostream& out) {
    Writer w{out};
    w.bytes(kMagic, 8);
    w.str(config_to_text(s.config));
    w.str(s.sam.source);
    w.str(sam_to_csv(s.sam));
    w.f64(s.scale);
    w.f64(s.radius);
    w.f64(s.mean_wage);
    w.f64(s.gfcf_monthly);
    w.f64(s.gfcf_tax_per_goods);
    w.i32(s.month);
    w.i32(s.births_this_month);
    w.i32(s.deaths_this_month);
    w.f64(s.institutions.government_cash);
    w.f64(s.institutions.bonds_outstanding);
    w.f64(s.institutions.gfcf_pool);
    w.f64(s.institutions.external_balance);
    w.f64(s.institutions.fiscal_room);
    w.u8(s.institutions.levy_done ? 1 : 0);
    w.f64(s.flows.bond_issued);
    w.f64(s.flows.bond_redeemed);
    w.f64(s.flows.imports);
    w.f64(s.flows.exports);
    w.f64(s.flows.gov_revenue);
    w.f64(s.flows.gov_spending);
    w.f64(s.flows.levy);
    w.str(s.rng.save());

    w.u64(s.sectors.size());
    for (const auto& sp : s.sectors) {
        w.i32(sp.account);
        w.str(sp.code);
        w.u8(sp.market ? 1 : 0);
        write_profile(w, sp.profile);
        w.f64(sp.monthly_output);
        w.f64(sp.employment_target);
        w.f64(sp.output_per_worker);
        w.f64(sp.wage);
        w.f64(sp.basket_share);
        w.f64(sp.export_monthly);
        w.f64(sp.gfcf_goods_monthly);
    }

    w.u64(s.households.size());
    for (const auto& h : s.households) {
        w.i32(h.id);
        w.f64(h.position.x);
        w.f64(h.position.y);
        w.f64(h.wealth);
        w.f64(h.income_this_month);
        w.i32(h.employer ? *h.employer : -1);
        w.u8(h.ever_employed ? 1 : 0);
        w.i32(h.months_employed);
        w.i32v(h.owned_firms);
        w.f64v(h.reservation);
        write_history(w, h.income_history);
    }

    w.u64(s.firms.size());
    for (const auto& f : s.firms) {
        w.i32(f.id);
        w.i32(f.sector);
        w.f64(f.position.x);
        w.f64(f.position.y);
        w.u8(f.alive ? 1 : 0);
        w.u8(f.fixed_price ? 1 : 0);
        w.f64(f.price);
        w.f64(f.inventory);
        w.f64(f.cash);
        w.i32(f.owner);
        w.i32v(f.employees);
        write_history(w, f.demand_history);
        w.f64(f.demand_this_month);
        w.f64(f.revenue_this_month);
        w.f64(f.last_revenue);
        w.i32(f.months_insolvent);
        w.i32(f.months_idle);
    }

    w.u64(s.pending_policies.size());
    for (const auto& p : s.pending_policies) {
        w.i32(p.month);
        w.str(p.kind);
        w.f64(p.value);
    }

    w.u64(s.frames.size());
    for (const auto& f : s.frames) write_frame(w, f);
}

void save_checkpoint_file(const SimState& s, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw EngineError("cannot write '" + path + "'");
    save_checkpoint(s, out);
    if (!out) throw EngineError("write failed for '" + path + "'");
}

SimState load_checkpoint(std::istream& in) {
    Reader r{in};
    char magic[8];
    r.bytes(magic, 8);
    if (std::memcmp(magic, kMagic, 8) != 0) throw EngineError("not a checkpoint file");

    SimState s;
    {
        std::istringstream cfg(r.str());
        s.config = parse_config(cfg, "<checkpoint>");
    }
    std::string sam_source = r.str();
    {
        std::istringstream sam(r.str());
        s.sam = parse_sam(sam, sam_source);
    }
    s.scale = r.f64();
    s.radius = r.f64();
    s.mean_wage = r.f64();
    s.gfcf_monthly = r.f64();
    s.gfcf_tax_per_goods = r.f64();
    s.month = r.i32();
    s.births_this_month = r.i32();
    s.deaths_this_month = r.i32();
    s.institutions.government_cash = r.f64();
    s.institutions.bonds_outstanding = r.f64();
    s.institutions.gfcf_pool = r.f64();
    s.institutions.external_balance = r.f64();
    s.institutions.fiscal_room = r.f64();
    s.institutions.levy_done = r.u8() != 0;
    s.flows.bond_issued = r.f64();
    s.flows.bond_redeemed = r.f64();
    s.flows.imports = r.f64();
    s.flows.exports = r.f64();
    s.flows.gov_revenue = r.f64();
    s.flows.gov_spending = r.f64();
    s.flows.levy = r.f64();
    s.rng.restore(r.str());

    auto n_sectors = r.u64();
    s.sector_index.assign(s.sam.size(), -1);
    for (std::uint64_t i = 0; i < n_sectors; ++i) {
        SectorParams sp;
        sp.account = r.i32();
        sp.code = r.str();
        sp.market = r.u8() != 0;
        sp.profile = read_profile(r);
        sp.monthly_output = r.f64();
        sp.employment_target = r.f64();
        sp.output_per_worker = r.f64();
        sp.wage = r.f64();
        sp.basket_share = r.f64();
        sp.export_monthly = r.f64();
        sp.gfcf_goods_monthly = r.f64();
        s.sector_index[sp.account] = static_cast<int>(s.sectors.size());
        s.sector_codes.push_back(sp.code);
        s.sectors.push_back(std::move(sp));
    }

    s.household_index = NeighborhoodIndex(s.radius);
    s.firm_index = NeighborhoodIndex(s.radius);

    auto n_households = r.u64();
    for (std::uint64_t i = 0; i < n_households; ++i) {
        Household h;
        h.id = r.i32();
        h.position.x = r.f64();
        h.position.y = r.f64();
        h.wealth = r.f64();
        h.income_this_month = r.f64();
        int employer = r.i32();
        if (employer >= 0) h.employer = employer;
        h.ever_employed = r.u8() != 0;
        h.months_employed = r.i32();
        h.owned_firms = r.i32v();
        h.reservation = r.f64v();
        h.income_history = read_history(r);
        s.household_index.insert(h.id, h.position);
        s.households.push_back(std::move(h));
    }

    auto n_firms = r.u64();
    for (std::uint64_t i = 0; i < n_firms; ++i) {
        Firm f;
        f.id = r.i32();
        f.sector = r.i32();
        f.position.x = r.f64();
        f.position.y = r.f64();
        f.alive = r.u8() != 0;
        f.fixed_price = r.u8() != 0;
        f.price = r.f64();
        f.inventory = r.f64();
        f.cash = r.f64();
        f.owner = r.i32();
        f.employees = r.i32v();
        f.demand_history = read_history(r);
        f.demand_this_month = r.f64();
        f.revenue_this_month = r.f64();
        f.last_revenue = r.f64();
        f.months_insolvent = r.i32();
        f.months_idle = r.i32();
        if (f.alive) s.firm_index.insert(f.id, f.position);
        s.firms.push_back(std::move(f));
    }

    auto n_policies = r.u64();
    for (std::uint64_t i = 0; i < n_policies; ++i) {
        PolicyEvent p;
        p.month = r.i32();
        p.kind = r.str();
        p.value = r.f64();
        s.pending_policies.push_back(std::move(p));
    }

    auto n_frames = r.u64();
    for (std::uint64_t i = 0; i < n_frames; ++i) s.frames.push_back(read_frame(r));
    return s;
}

SimState load_checkpoint_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw EngineError("cannot open '" + path + "'");
    return load_checkpoint(in);
}

} // namespace samsim
