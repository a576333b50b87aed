#pragma once

// Agent state types and the pure behavioral rules that drive them. The rules
// are free functions over plain values so they can be tested in isolation;
// the engine wires them to agent state each month.

#include "samsim/sam.hpp"
#include "samsim/spatial.hpp"

#include <map>
#include <optional>
#include <vector>

namespace samsim {

using HouseholdId = int;
using FirmId = int;

// Fixed-window history of monthly observations. Means are accumulated in
// oldest-to-newest order so that a state rebuilt by replaying the same
// observations computes bit-identical means.
class History {
public:
    explicit History(int window);
    void push(double v);
    double mean() const; // 0.0 while empty
    bool empty() const { return count_ == 0; }
    int count() const { return count_; }
    int window() const { return static_cast<int>(buf_.size()); }
    std::vector<double> ordered_values() const; // oldest first

private:
    std::vector<double> buf_;
    int head_ = 0;  // next write slot
    int count_ = 0; // filled entries
};

struct ConsumptionParams {
    double kappa = 0.55; // wealth adjustment speed
    double phi = 6.0;    // desired wealth in months of mean income
};

struct Household {
    HouseholdId id = -1;
    Position position;
    double wealth = 0.0;
    History income_history{12};
    double income_this_month = 0.0;
    std::optional<FirmId> employer;
    bool ever_employed = false;   // gates the universal transfer
    int months_employed = 0; // lifetime work record; unemployment benefits vest at 12
    std::vector<FirmId> owned_firms;
    std::vector<double> reservation; // accepted price cap per account id
};

struct Firm {
    FirmId id = -1;
    int sector = -1; // account id in the SAM
    Position position;
    bool alive = true;
    bool fixed_price = false; // non-market sectors sell at cost, price never adapts
    double price = 1.0;
    double inventory = 0.0; // units
    double cash = 0.0;
    HouseholdId owner = -1;
    std::vector<HouseholdId> employees; // hire order
    History demand_history{3};          // units asked of this firm per month
    double demand_this_month = 0.0;
    double revenue_this_month = 0.0;
    double last_revenue = 0.0;
    int months_insolvent = 0;
    int months_idle = 0; // consecutive months with zero revenue
};

struct InstitutionalAccounts {
    double government_cash = 0.0;
    double bonds_outstanding = 0.0;
    double gfcf_pool = 0.0;      // accumulated investment funds
    double external_balance = 0.0; // cumulative net payments to the external sector
    // current-spending allowance for the coming month: last month's revenue
    // plus the import outflow, so the deficit never outruns the external drain
    double fiscal_room = 0.0;
    bool levy_done = false; // deployment credit already retired
};

// --- behavioral rules ---

// Desired spending this month: mean income plus kappa times the gap between
// wealth and the phi-months-of-income buffer. Clamped to [0, wealth].
double consumption_target(double income_mean, double wealth, const ConsumptionParams& params);

enum class MarketOutcome { SellerSold, SellerFailed, BuyerBought, BuyerFailed };

// Multiplicative one-step adjustment: up by (1+k) after SellerSold or
// BuyerFailed, down by (1-k) after SellerFailed or BuyerBought, floored at 1e-6.
double price_update(double price, double k, MarketOutcome outcome);

// Split revenue over the sector's SAM column: cell * revenue / col_sum per
// nonzero cell. Reproduces the column exactly when revenue == col_sum.
std::map<int, double> revenue_allocation(double revenue, const TechProfile& profile);

// Stock the firm wants on hand: multiple * mean demand, or 1 unit before any
// demand has been observed.
double target_inventory(const History& demand_history, double inventory_multiple);

// Workers needed to produce the given monthly output.
int planned_headcount(double planned_units, double output_per_worker);

} // namespace samsim
