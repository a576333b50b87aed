#include "samsim/metrics.hpp"
#include "samsim/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace samsim {

int size_bin(int employees) {
    if (employees <= 9) return 0;
    if (employees <= 49) return 1;
    if (employees <= 249) return 2;
    return 3;
}

std::optional<FirmSizeDistribution> firm_size_distribution(const std::vector<Firm>& firms) {
    FirmSizeDistribution d;
    std::array<int, kSizeBinCount> firms_in{};
    std::array<int, kSizeBinCount> workers_in{};
    for (const Firm& f : firms) {
        if (!f.alive) continue;
        int bin = size_bin(static_cast<int>(f.employees.size()));
        ++firms_in[bin];
        workers_in[bin] += static_cast<int>(f.employees.size());
        ++d.firm_count;
        d.total_employees += static_cast<int>(f.employees.size());
    }
    if (d.firm_count == 0) return std::nullopt;
    for (int b = 0; b < kSizeBinCount; ++b) {
        d.firm_share[b] = static_cast<double>(firms_in[b]) / d.firm_count;
        d.employment_share[b] =
            d.total_employees > 0 ? static_cast<double>(workers_in[b]) / d.total_employees : 0.0;
    }
    return d;
}

double gini(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("gini: empty sample");
    std::vector<double> v(values.begin(), values.end());
    double total = 0.0;
    for (double x : v) {
        if (x < 0.0) throw std::invalid_argument("gini: negative value");
        total += x;
    }
    if (!(total > 0.0)) throw std::domain_error("gini: undefined for zero total");
    std::sort(v.begin(), v.end());
    double n = static_cast<double>(v.size());
    double weighted = 0.0;
    for (size_t i = 0; i < v.size(); ++i) weighted += static_cast<double>(i + 1) * v[i];
    return 2.0 * weighted / (n * total) - (n + 1.0) / n;
}

std::optional<WealthStats> wealth_stats(std::span<const double> wealth) {
    if (wealth.empty()) return std::nullopt;
    double total = 0.0;
    for (double w : wealth) total += w;
    if (!(total > 0.0)) return std::nullopt;

    std::vector<double> v(wealth.begin(), wealth.end());
    std::sort(v.begin(), v.end(), std::greater<>());
    size_t n = v.size();
    size_t top10 = (n + 9) / 10;
    size_t top1 = (n + 99) / 100;
    double sum10 = 0.0, sum1 = 0.0;
    for (size_t i = 0; i < top10; ++i) sum10 += v[i];
    for (size_t i = 0; i < top1; ++i) sum1 += v[i];

    WealthStats s;
    s.gini = gini(wealth);
    s.top_decile_share = sum10 / total;
    s.top_percentile_share = sum1 / total;
    s.total = total;
    return s;
}

std::vector<std::pair<double, double>> lorenz_curve(std::span<const double> values, int points) {
    if (points < 1) throw std::invalid_argument("lorenz_curve: points must be >= 1");
    std::vector<double> v(values.begin(), values.end());
    std::sort(v.begin(), v.end());
    double total = 0.0;
    for (double x : v) total += x;

    std::vector<std::pair<double, double>> out;
    out.emplace_back(0.0, 0.0);
    if (v.empty() || !(total > 0.0)) return out;
    size_t n = v.size();
    double cum = 0.0;
    size_t consumed = 0;
    for (int q = 1; q <= points; ++q) {
        size_t upto = n * static_cast<size_t>(q) / points;
        while (consumed < upto) cum += v[consumed++];
        out.emplace_back(static_cast<double>(q) / points, cum / total);
    }
    return out;
}

void write_frames(const std::vector<SeriesFrame>& frames,
                  const std::vector<std::string>& sector_codes, std::ostream& out) {
    out << "month,unemployment,total_wealth,gini,top10_share,top1_share,firms,births,deaths,"
           "policy,output,consumption";
    for (int b = 0; b < kSizeBinCount; ++b) out << ",firms_" << kSizeBinLabels[b];
    for (int b = 0; b < kSizeBinCount; ++b) out << ",emp_" << kSizeBinLabels[b];
    for (const auto& c : sector_codes) out << ",out_" << c;
    for (const auto& c : sector_codes) out << ",cons_" << c;
    for (const auto& c : sector_codes) out << ",nfirms_" << c;
    out << '\n';

    for (const auto& f : frames) {
        out << f.month << ',' << format_double(f.unemployment_rate) << ','
            << format_double(f.total_wealth) << ',' << format_double(f.gini_wealth) << ','
            << format_double(f.top_decile_share) << ',' << format_double(f.top_percentile_share)
            << ',' << f.firm_count << ',' << f.births << ',' << f.deaths << ',' << f.policy_marks
            << ',' << format_double(f.total_output) << ',' << format_double(f.total_consumption);
        for (int b = 0; b < kSizeBinCount; ++b) out << ',' << format_double(f.size_firm_share[b]);
        for (int b = 0; b < kSizeBinCount; ++b)
            out << ',' << format_double(f.size_employment_share[b]);
        for (double v : f.output_by_sector) out << ',' << format_double(v);
        for (double v : f.consumption_by_sector) out << ',' << format_double(v);
        for (int v : f.firms_by_sector) out << ',' << v;
        out << '\n';
    }
}

void write_frames_file(const std::vector<SeriesFrame>& frames,
                       const std::vector<std::string>& sector_codes, const std::string& path) {
    std::ofstream out(path, std::ios::binary); // binary: no newline translation
    if (!out) throw std::runtime_error("cannot write '" + path + "'");
    write_frames(frames, sector_codes, out);
}

FrameData read_frames(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw std::runtime_error("frames: empty input");
    auto header = split_csv_line(line);

    FrameData data;
    size_t fixed = 12 + 2 * kSizeBinCount;
    for (size_t i = fixed; i < header.size(); ++i)
        if (header[i].rfind("out_", 0) == 0) data.sector_codes.push_back(header[i].substr(4));
    size_t expected = fixed + 3 * data.sector_codes.size();
    if (header.size() != expected) throw std::runtime_error("frames: unexpected column layout");

    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != expected)
            throw std::runtime_error("frames line " + std::to_string(line_no) +
                                     ": wrong cell count");
        size_t i = 0;
        auto next_d = [&]() {
            double v;
            if (!parse_double(cells[i], v))
                throw std::runtime_error("frames line " + std::to_string(line_no) +
                                         ": bad number '" + cells[i] + "'");
            ++i;
            return v;
        };
        auto next_i = [&]() {
            long long v;
            if (!parse_long(cells[i], v))
                throw std::runtime_error("frames line " + std::to_string(line_no) +
                                         ": bad integer '" + cells[i] + "'");
            ++i;
            return static_cast<int>(v);
        };

        SeriesFrame f;
        f.month = next_i();
        f.unemployment_rate = next_d();
        f.total_wealth = next_d();
        f.gini_wealth = next_d();
        f.top_decile_share = next_d();
        f.top_percentile_share = next_d();
        f.firm_count = next_i();
        f.births = next_i();
        f.deaths = next_i();
        f.policy_marks = next_i();
        f.total_output = next_d();
        f.total_consumption = next_d();
        for (int b = 0; b < kSizeBinCount; ++b) f.size_firm_share[b] = next_d();
        for (int b = 0; b < kSizeBinCount; ++b) f.size_employment_share[b] = next_d();
        for (size_t s = 0; s < data.sector_codes.size(); ++s) f.output_by_sector.push_back(next_d());
        for (size_t s = 0; s < data.sector_codes.size(); ++s)
            f.consumption_by_sector.push_back(next_d());
        for (size_t s = 0; s < data.sector_codes.size(); ++s) f.firms_by_sector.push_back(next_i());
        data.frames.push_back(std::move(f));
    }
    return data;
}

FrameData read_frames_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path + "'");
    return read_frames(in);
}

int steady_state_month(std::span<const double> series, const SteadyStateParams& params) {
    int w = params.ma_window;
    int n = static_cast<int>(series.size());
    if (w < 1 || params.hold_months < 1) throw std::invalid_argument("steady_state_month: bad params");
    if (n < 2 * w) return -1;

    std::vector<double> ma(n, 0.0);
    double acc = 0.0;
    for (int t = 0; t < n; ++t) {
        acc += series[t];
        if (t >= w) acc -= series[t - w];
        if (t >= w - 1) ma[t] = acc / w;
    }

    int run = 0;
    for (int t = 2 * w - 1; t < n; ++t) {
        double prev = ma[t - w];
        bool ok = std::abs(ma[t] - prev) <= params.rel_tol * std::abs(prev) + params.abs_floor;
        run = ok ? run + 1 : 0;
        if (run >= params.hold_months) return t;
    }
    return -1;
}

std::vector<ConsumptionError> consumption_errors(const std::vector<SeriesFrame>& frames,
                                                 const std::vector<std::string>& sector_codes,
                                                 const std::vector<double>& target_shares,
                                                 const std::vector<double>& absolute_targets,
                                                 double significance) {
    size_t ns = sector_codes.size();
    if (target_shares.size() != ns)
        throw std::invalid_argument("consumption_errors: share/code size mismatch");
    if (!absolute_targets.empty() && absolute_targets.size() != ns)
        throw std::invalid_argument("consumption_errors: target/code size mismatch");
    if (frames.size() < 12) throw std::invalid_argument("consumption_errors: need 12 frames");

    std::vector<double> observed(ns, 0.0);
    for (size_t k = frames.size() - 12; k < frames.size(); ++k)
        for (size_t s = 0; s < ns; ++s) observed[s] += frames[k].consumption_by_sector[s];

    std::vector<double> targets(ns, 0.0);
    double target_total = 0.0;
    if (!absolute_targets.empty()) {
        targets = absolute_targets;
        for (double t : targets) target_total += t;
    } else {
        double observed_total = 0.0;
        for (double o : observed) observed_total += o;
        for (size_t s = 0; s < ns; ++s) targets[s] = target_shares[s] * observed_total;
        target_total = observed_total;
    }

    std::vector<ConsumptionError> out;
    for (size_t s = 0; s < ns; ++s) {
        if (!(targets[s] > 0.0)) continue;
        ConsumptionError e;
        e.code = sector_codes[s];
        e.target = targets[s];
        e.observed = observed[s];
        e.rel_error = std::abs(observed[s] - targets[s]) / targets[s];
        e.significant = target_total > 0.0 && targets[s] / target_total >= significance;
        out.push_back(std::move(e));
    }
    return out;
}

} // namespace samsim
