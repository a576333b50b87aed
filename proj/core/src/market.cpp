#include "samsim/market.hpp"

#include <algorithm>
#include <cmath>

namespace samsim {

void SignalBoard::clear() {
    local.clear();
    global_amount.clear();
}

void SignalBoard::add_local(int sector, Position pos, double amount) {
    if (amount > 0.0) local.push_back({sector, pos, amount});
}

void SignalBoard::add_global(int sector, double amount) {
    if (amount > 0.0) global_amount[sector] += amount;
}

std::map<int, double> SignalBoard::visible_demand(Position pos, double radius) const {
    std::map<int, double> out;
    double r2 = radius * radius;
    for (const auto& s : local)
        if (torus_distance2(s.position, pos) <= r2) out[s.sector] += s.amount;
    for (const auto& [sector, amount] : global_amount) out[sector] += amount;
    return out;
}

std::optional<FirmId> select_seller(const std::vector<Firm>& firms,
                                    const NeighborhoodIndex& firm_index, Position pos,
                                    int sector, double radius, FirmId exclude_id) {
    std::optional<FirmId> best;
    double best_price = 0.0;
    for (int id : firm_index.neighbors_within(pos, radius)) {
        const Firm& f = firms[id];
        if (!f.alive || f.sector != sector || f.id == exclude_id) continue;
        if (!(f.inventory > 0.0)) continue;
        if (!best || f.price < best_price) {
            best = f.id;
            best_price = f.price;
        }
    }
    return best;
}

namespace {

void log_trade(MarketContext& ctx, BuyerKind kind, int buyer_id, const Firm& seller,
               double units, double money) {
    if (ctx.log)
        ctx.log->push_back({ctx.month, kind, buyer_id, seller.id, seller.sector, units,
                            seller.price, money});
}

// Move money and stock for one trade and update the seller's tallies.
double settle_trade(MarketContext&, Firm& seller, double requested_units, double budget) {
    double units = std::min(requested_units, seller.inventory);
    double money = std::min(units * seller.price, budget);
    seller.inventory -= units;
    seller.cash += money;
    seller.revenue_this_month += money;
    seller.demand_this_month += requested_units;
    return units;
}

} // namespace

PurchaseOutcome household_purchase(MarketContext& ctx, Household& h, int sector, double budget) {
    PurchaseOutcome out;
    if (!(budget > 0.0)) return out;

    auto seller_id = select_seller(ctx.firms, ctx.firm_index, h.position, sector, ctx.radius);
    double& reservation = h.reservation[sector];
    if (!seller_id) {
        reservation = price_update(reservation, ctx.price_k, MarketOutcome::BuyerFailed);
        ctx.signals.add_local(sector, h.position, budget);
        return out;
    }

    out.any_seller = true;
    Firm& s = ctx.firms[*seller_id];
    if (s.price > reservation) {
        out.rejected = true;
        reservation = price_update(reservation, ctx.price_k, MarketOutcome::BuyerFailed);
        ctx.signals.add_local(sector, h.position, budget);
        return out;
    }

    double requested = budget / s.price;
    double units = settle_trade(ctx, s, requested, budget);
    double money = std::min(units * s.price, budget);
    h.wealth -= money;
    log_trade(ctx, BuyerKind::Household, h.id, s, units, money);
    reservation = price_update(reservation, ctx.price_k, MarketOutcome::BuyerBought);
    out.spent = money;
    out.units = units;
    return out;
}

PurchaseOutcome firm_purchase(MarketContext& ctx, Firm& buyer, int sector, double budget) {
    PurchaseOutcome out;
    if (!(budget > 0.0)) return out;

    double remaining = budget;

    // the neighborhood supplier gets first refusal
    auto seller_id =
        select_seller(ctx.firms, ctx.firm_index, buyer.position, sector, ctx.radius, buyer.id);
    if (seller_id) {
        out.any_seller = true;
        Firm& s = ctx.firms[*seller_id];
        double requested = remaining / s.price;
        double units = settle_trade(ctx, s, requested, remaining);
        double money = std::min(units * s.price, remaining);
        buyer.cash -= money;
        log_trade(ctx, BuyerKind::Firm, buyer.id, s, units, money);
        out.spent += money;
        out.units += units;
        remaining = std::max(0.0, remaining - money);
    }

    // procurement is not a walk to the shop: what the neighborhood cannot
    // fill is ordered from the cheapest producers anywhere
    if (remaining > 1e-12 * budget) {
        std::vector<FirmId> candidates;
        for (const Firm& f : ctx.firms)
            if (f.alive && f.sector == sector && f.id != buyer.id && f.inventory > 0.0)
                candidates.push_back(f.id);
        std::sort(candidates.begin(), candidates.end(), [&](FirmId a, FirmId b) {
            if (ctx.firms[a].price != ctx.firms[b].price)
                return ctx.firms[a].price < ctx.firms[b].price;
            return a < b;
        });
        for (FirmId id : candidates) {
            if (!(remaining > 1e-12 * budget)) break;
            Firm& s = ctx.firms[id];
            if (!(s.inventory > 0.0)) continue;
            out.any_seller = true;
            double requested = remaining / s.price;
            double units = settle_trade(ctx, s, requested, remaining);
            double money = std::min(units * s.price, remaining);
            buyer.cash -= money;
            log_trade(ctx, BuyerKind::Firm, buyer.id, s, units, money);
            out.spent += money;
            out.units += units;
            remaining = std::max(0.0, remaining - money);
        }
    }

    if (remaining > 1e-12 * budget)
        ctx.signals.add_local(sector, buyer.position, remaining);
    return out;
}

PurchaseOutcome institutional_purchase(MarketContext& ctx, BuyerKind kind, int buyer_id,
                                       int sector, double amount, double* funds) {
    PurchaseOutcome out;
    if (funds) amount = std::min(amount, *funds);
    if (!(amount > 0.0)) return out;

    // all live sector firms, cheapest first, ties to the older (lower) id
    std::vector<FirmId> candidates;
    for (const Firm& f : ctx.firms)
        if (f.alive && f.sector == sector) candidates.push_back(f.id);
    std::sort(candidates.begin(), candidates.end(), [&](FirmId a, FirmId b) {
        if (ctx.firms[a].price != ctx.firms[b].price)
            return ctx.firms[a].price < ctx.firms[b].price;
        return a < b;
    });

    double remaining = amount;
    for (FirmId id : candidates) {
        if (!(remaining > 1e-12 * amount)) break;
        Firm& s = ctx.firms[id];
        if (!(s.inventory > 0.0)) continue;
        out.any_seller = true;
        double requested = remaining / s.price;
        double units = settle_trade(ctx, s, requested, remaining);
        double money = std::min(units * s.price, remaining);
        if (funds) *funds -= money;
        log_trade(ctx, kind, buyer_id, s, units, money);
        out.spent += money;
        out.units += units;
        remaining = std::max(0.0, remaining - money);
    }

    if (remaining > 1e-12 * amount) {
        ctx.signals.add_global(sector, remaining);
        // fully stocked-out sector: let the cheapest firm still see the ask
        if (!out.any_seller && !candidates.empty()) {
            Firm& first = ctx.firms[candidates.front()];
            first.demand_this_month += remaining / first.price;
        }
    }
    return out;
}

} // namespace samsim
