#include "samsim/agents.hpp"

#include <cmath>
#include <stdexcept>

namespace samsim {

History::History(int window) {
    if (window < 1) throw std::invalid_argument("History: window must be >= 1");
    buf_.assign(window, 0.0);
}

void History::push(double v) {
    buf_[head_] = v;
    head_ = (head_ + 1) % static_cast<int>(buf_.size());
    if (count_ < static_cast<int>(buf_.size())) ++count_;
}

double History::mean() const {
    if (count_ == 0) return 0.0;
    int n = static_cast<int>(buf_.size());
    int start = (head_ - count_ + n) % n;
    double sum = 0.0;
    for (int i = 0; i < count_; ++i) sum += buf_[(start + i) % n];
    return sum / count_;
}

std::vector<double> History::ordered_values() const {
    std::vector<double> out;
    out.reserve(count_);
    int n = static_cast<int>(buf_.size());
    int start = (head_ - count_ + n) % n;
    for (int i = 0; i < count_; ++i) out.push_back(buf_[(start + i) % n]);
    return out;
}

double consumption_target(double income_mean, double wealth, const ConsumptionParams& params) {
    double target = income_mean + params.kappa * (wealth - params.phi * income_mean);
    if (target < 0.0) return 0.0;
    if (target > wealth) return wealth;
    return target;
}

double price_update(double price, double k, MarketOutcome outcome) {
    bool up = outcome == MarketOutcome::SellerSold || outcome == MarketOutcome::BuyerFailed;
    double next = up ? price * (1.0 + k) : price * (1.0 - k);
    return std::max(next, 1e-6);
}

std::map<int, double> revenue_allocation(double revenue, const TechProfile& profile) {
    std::map<int, double> out;
    for (int r = 0; r < static_cast<int>(profile.column.size()); ++r) {
        double cell = profile.column[r];
        if (cell == 0.0) continue;
        out[r] = cell * revenue / profile.col_sum;
    }
    return out;
}

double target_inventory(const History& demand_history, double inventory_multiple) {
    if (demand_history.empty()) return 1.0;
    return inventory_multiple * demand_history.mean();
}

int planned_headcount(double planned_units, double output_per_worker) {
    if (!(output_per_worker > 0.0))
        throw std::invalid_argument("planned_headcount: output per worker must be positive");
    if (planned_units <= 0.0) return 0;
    return static_cast<int>(std::ceil(planned_units / output_per_worker - 1e-12));
}

} // namespace samsim
