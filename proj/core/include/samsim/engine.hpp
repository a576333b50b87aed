#pragma once

// Simulation state and the monthly step. deploy() builds an economy of
// workers and zero firms from a SAM plus a config; step() advances one month
// through a fixed sub-step order (wages, government, consumption, external
// demand, firm operations, entry, exit, dividends, metrics) with every agent
// loop in ascending id order, so runs are deterministic for a given seed.
//
// Money conservation is checked at every month boundary: total money may
// change only by bond issuance - redemption + exports - imports.

#include "samsim/agents.hpp"
#include "samsim/config.hpp"
#include "samsim/market.hpp"
#include "samsim/metrics.hpp"
#include "samsim/rng.hpp"
#include "samsim/sam.hpp"
#include "samsim/spatial.hpp"

#include <iosfwd>
#include <stdexcept>
#include <string>
#include <vector>

namespace samsim {

struct EngineError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct ConservationError : EngineError {
    using EngineError::EngineError;
};

struct PolicyEvent {
    int month = 0;
    std::string kind; // "TaxProductsRateDelta"
    double value = 0.0;
};

std::vector<PolicyEvent> parse_policy(std::istream& in, std::string_view source = "<stream>");
std::vector<PolicyEvent> load_policy(const std::string& path);

// Per-sector quantities derived at deploy time. The profile is mutable state:
// policy interventions shift its tax/surplus shares.
struct SectorParams {
    int account = -1;
    std::string code;
    bool market = true; // market sector vs government-procured
    TechProfile profile;
    double monthly_output = 0.0;     // scaled column total / 12
    double employment_target = 0.0;  // (1 - u_target) * workers / sector count
    double output_per_worker = 0.0;  // units per worker-month
    double wage = 0.0;               // per worker-month before wage_scale
    double basket_share = 0.0;       // household budget share (market sectors)
    double export_monthly = 0.0;     // scaled external-column sales / 12
    double gfcf_goods_monthly = 0.0; // scaled capital-formation purchases / 12
};

struct MonthFlows {
    double bond_issued = 0.0;
    double bond_redeemed = 0.0;
    double imports = 0.0; // money paid out to the external sector
    double exports = 0.0; // money received from the external sector
    double gov_revenue = 0.0;
    double gov_spending = 0.0;
    double levy = 0.0; // one-time balance adjustment collected this month
};

struct SimState {
    SimConfig config;
    SamTable sam;
    double scale = 1.0;  // population persons per simulated worker
    double radius = 0.25;
    double mean_wage = 0.0;          // economy mean wage, base for transfers
    double gfcf_monthly = 0.0;       // scaled capital-formation column total / 12
    double gfcf_tax_per_goods = 0.0; // product tax per unit of investment goods spending

    std::vector<SectorParams> sectors;  // producing sectors, ascending account id
    std::vector<int> sector_index;      // account id -> index into sectors, or -1

    std::vector<Household> households;
    std::vector<Firm> firms; // index == id; dead firms keep their slot
    InstitutionalAccounts institutions;
    NeighborhoodIndex household_index{0.25};
    NeighborhoodIndex firm_index{0.25};
    SignalBoard signals;
    Rng rng;

    int month = 0;
    std::vector<PolicyEvent> pending_policies; // queued, applied at their month
    MonthFlows flows;                          // last completed month
    std::vector<SeriesFrame> frames;
    std::vector<std::string> sector_codes;
    std::vector<Transaction>* tx_log = nullptr; // optional, owned by caller

    int births_this_month = 0;
    int deaths_this_month = 0;

    double total_money() const; // households + live firm cash + government + investment pool
    int employed_count() const;
    double unemployment_rate() const;
    const SectorParams& sector_of(const Firm& f) const { return sectors[sector_index[f.sector]]; }
};

// Validates the SAM (zero errors required), derives sector parameters, and
// creates the worker households with equal wealth. No firms exist yet.
SimState deploy(const SimConfig& config);
SimState deploy(const SimConfig& config, SamTable sam);

// Advance one month. Throws ConservationError with a diagnostic dump when the
// money identity breaks.
void step(SimState& state);

// Sub-steps exposed for focused tests; step() calls them in order.
std::vector<FirmId> entrepreneurial_entry(SimState& state);
std::vector<FirmId> exit_check(SimState& state);

// Queue a policy intervention. Validates the kind and that the resulting
// shares stay within [-0.5, 0.9] for every sector; throws EngineError otherwise.
void apply_policy(SimState& state, const PolicyEvent& policy);

void save_checkpoint(const SimState& state, std::ostream& out);
void save_checkpoint_file(const SimState& state, const std::string& path);
SimState load_checkpoint(std::istream& in);
SimState load_checkpoint_file(const std::string& path);

} // namespace samsim
