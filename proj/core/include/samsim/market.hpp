#pragma once

// Decentralized goods market. Buyers pick the cheapest stocked seller in
// their neighborhood (institutions sweep the whole sector price-ordered),
// money and inventory move per trade, and both sides adjust their price or
// reservation one multiplicative step per outcome. Unmet demand lands on a
// signal board that prospective founders read when choosing a sector.

#include "samsim/agents.hpp"
#include "samsim/spatial.hpp"

#include <map>
#include <optional>
#include <vector>

namespace samsim {

enum class BuyerKind { Household, Firm, Government, Investment, External };

struct Transaction {
    int month = 0;
    BuyerKind buyer_kind = BuyerKind::Household;
    int buyer_id = -1;
    FirmId seller = -1;
    int sector = -1;
    double units = 0.0;
    double unit_price = 0.0;
    double total = 0.0;
};

struct DemandSignal {
    int sector = -1;
    Position position;
    double amount = 0.0; // unspent currency
};

struct SignalBoard {
    std::vector<DemandSignal> local;
    std::map<int, double> global_amount; // sector -> unmet institutional demand
    void clear();
    void add_local(int sector, Position pos, double amount);
    void add_global(int sector, double amount);
    // local amounts within radius of pos plus all global amounts, keyed by sector
    std::map<int, double> visible_demand(Position pos, double radius) const;
};

struct MarketContext {
    std::vector<Firm>& firms; // indexed by firm id
    const NeighborhoodIndex& firm_index;
    SignalBoard& signals;
    double radius = 0.25;
    double price_k = 0.002;
    int month = 0;
    std::vector<Transaction>* log = nullptr;
};

// Cheapest live firm of the sector with stock within radius; ties break to
// the lower id. exclude_id skips the buyer itself.
std::optional<FirmId> select_seller(const std::vector<Firm>& firms,
                                    const NeighborhoodIndex& firm_index, Position pos,
                                    int sector, double radius, FirmId exclude_id = -1);

struct PurchaseOutcome {
    double spent = 0.0;
    double units = 0.0;
    bool any_seller = false; // a candidate existed
    bool rejected = false;   // candidate found but price above reservation
};

// One household attempt in a sector: reservation-capped; failure bumps the
// reservation up, emits a local signal, and marks the candidate's lost sale.
PurchaseOutcome household_purchase(MarketContext& ctx, Household& h, int sector, double budget);

// Firm input purchase: no reservation, buys whatever the cheapest neighbor
// offers; shortfall emits a local signal at the buyer's position.
PurchaseOutcome firm_purchase(MarketContext& ctx, Firm& buyer, int sector, double budget);

// Price-ordered sweep over every live firm of the sector. `funds` caps
// spending when non-null and is debited. fixed_price suppresses seller price
// adjustment (non-market sectors sell at cost). Shortfall goes to the global
// signal board and to the first-swept seller's demand tally.
PurchaseOutcome institutional_purchase(MarketContext& ctx, BuyerKind kind, int buyer_id,
                                       int sector, double amount, double* funds);

} // namespace samsim
