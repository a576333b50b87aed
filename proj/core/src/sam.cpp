#include "samsim/sam.hpp"
#include "samsim/text.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <sstream>

namespace samsim {

AccountKind classify_account(std::string_view code, int line) {
    if (code.empty()) throw SamError("empty account code", line);
    switch (code.front()) {
        case 'P': return AccountKind::MarketSector;
        case 'N': return AccountKind::NonMarketSector;
        case 'F': return AccountKind::CapitalFormation;
        case 'X': return AccountKind::External;
        case 'L': return AccountKind::Labor;
        case 'K': return AccountKind::Surplus;
        case 'T': return AccountKind::Tax;
        case 'G': return AccountKind::Government;
        case 'H': return AccountKind::Households;
        default:
            throw SamError("unknown account prefix in code '" + std::string(code) + "'", line);
    }
}

bool is_producing(AccountKind k) {
    return k == AccountKind::MarketSector || k == AccountKind::NonMarketSector;
}

double SamTable::row_sum(int row) const {
    double s = 0.0;
    for (int c = 0; c < size(); ++c) s += at(row, c);
    return s;
}

double SamTable::computed_col_sum(int col) const {
    double s = 0.0;
    for (int r = 0; r < size(); ++r) s += at(r, col);
    return s;
}

std::optional<int> SamTable::find(std::string_view code) const {
    for (const auto& a : accounts)
        if (a.code == code) return a.id;
    return std::nullopt;
}

std::vector<int> SamTable::producing_sectors() const {
    std::vector<int> out;
    for (const auto& a : accounts)
        if (is_producing(a.kind)) out.push_back(a.id);
    return out;
}

std::vector<int> SamTable::market_sectors() const {
    std::vector<int> out;
    for (const auto& a : accounts)
        if (a.kind == AccountKind::MarketSector) out.push_back(a.id);
    return out;
}

namespace {

struct RawRow {
    int line = 0;
    std::string code;
    std::vector<double> cells;
};

} // namespace

SamTable parse_sam(std::istream& in, std::string_view source_name) {
    std::string line;
    int line_no = 0;

    // header
    std::vector<std::string> col_codes;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() < 2) throw SamError("header row needs at least one column code", line_no);
        col_codes.assign(cells.begin() + 1, cells.end());
        break;
    }
    if (col_codes.empty()) throw SamError("no header row found", line_no);
    for (const auto& c : col_codes)
        if (c.empty()) throw SamError("empty column code in header", line_no);

    // data rows
    std::vector<RawRow> rows;
    std::optional<RawRow> sum_row;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split_csv_line(line);
        if (cells.size() != col_codes.size() + 1)
            throw SamError("expected " + std::to_string(col_codes.size() + 1) + " cells, got " +
                               std::to_string(cells.size()),
                           line_no);
        RawRow row;
        row.line = line_no;
        row.code = cells[0];
        if (row.code.empty()) throw SamError("empty row code", line_no);
        row.cells.reserve(col_codes.size());
        for (size_t i = 1; i < cells.size(); ++i) {
            double v;
            if (!parse_double(cells[i], v))
                throw SamError("cell '" + cells[i] + "' in column " + col_codes[i - 1] +
                                   " is not a number",
                               line_no);
            row.cells.push_back(v);
        }
        if (sum_row)
            throw SamError("data row after colSUM row", line_no);
        if (row.code == "colSUM")
            sum_row = std::move(row);
        else
            rows.push_back(std::move(row));
    }
    if (rows.empty()) throw SamError("no account rows found", line_no);

    SamTable sam;
    sam.source = std::string(source_name);
    int n = static_cast<int>(rows.size());
    sam.accounts.reserve(n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < i; ++j)
            if (rows[j].code == rows[i].code)
                throw SamError("duplicate account code '" + rows[i].code + "'", rows[i].line);
        sam.accounts.push_back({i, rows[i].code, classify_account(rows[i].code, rows[i].line)});
    }

    std::vector<int> col_account(col_codes.size(), -1);
    for (size_t j = 0; j < col_codes.size(); ++j) {
        auto id = sam.find(col_codes[j]);
        if (!id)
            throw SamError("column code '" + col_codes[j] + "' has no matching account row", 1);
        if (std::count(col_account.begin(), col_account.end(), *id) > 0)
            throw SamError("duplicate column code '" + col_codes[j] + "'", 1);
        col_account[j] = *id;
    }

    sam.values.assign(static_cast<size_t>(n) * n, 0.0);
    sam.column_in_file.assign(n, false);
    for (size_t j = 0; j < col_account.size(); ++j) {
        sam.column_in_file[col_account[j]] = true;
        for (int r = 0; r < n; ++r) sam.at(r, col_account[j]) = rows[r].cells[j];
    }

    sam.col_sums.assign(n, 0.0);
    for (int c = 0; c < n; ++c) sam.col_sums[c] = sam.computed_col_sum(c);
    if (sum_row) {
        sam.has_stated_sums = true;
        for (size_t j = 0; j < col_account.size(); ++j)
            sam.col_sums[col_account[j]] = sum_row->cells[j];
    }
    return sam;
}

SamTable load_sam(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw SamError("cannot open '" + path + "'");
    return parse_sam(in, path);
}

std::string sam_to_csv(const SamTable& sam) {
    std::string out = "account";
    std::vector<int> cols;
    for (const auto& a : sam.accounts)
        if (sam.column_in_file[a.id]) cols.push_back(a.id);
    for (int c : cols) {
        out += ',';
        out += sam.accounts[c].code;
    }
    out += '\n';
    for (const auto& a : sam.accounts) {
        out += a.code;
        for (int c : cols) {
            out += ',';
            out += format_double(sam.at(a.id, c));
        }
        out += '\n';
    }
    if (sam.has_stated_sums) {
        out += "colSUM";
        for (int c : cols) {
            out += ',';
            out += format_double(sam.col_sums[c]);
        }
        out += '\n';
    }
    return out;
}

bool ValidationReport::has_errors() const { return error_count() > 0; }

int ValidationReport::error_count() const {
    int n = 0;
    for (const auto& f : findings)
        if (f.severity == Severity::Error) ++n;
    return n;
}

int ValidationReport::warning_count() const {
    int n = 0;
    for (const auto& f : findings)
        if (f.severity == Severity::Warning) ++n;
    return n;
}

std::string ValidationReport::to_text() const {
    std::string out;
    for (const auto& f : findings) {
        out += f.severity == Severity::Error ? "ERROR " : "WARNING ";
        out += f.account;
        out += ": ";
        out += f.message;
        out += '\n';
    }
    return out;
}

ValidationReport validate_sam(const SamTable& sam) {
    ValidationReport rep;
    for (const auto& a : sam.accounts) {
        if (!sam.column_in_file[a.id])
            rep.findings.push_back({Severity::Warning, a.code,
                                    "column absent from file, zero-filled"});

        double stated = sam.col_sums[a.id];
        double computed = sam.computed_col_sum(a.id);
        if (std::abs(stated - computed) > 1e-9 * std::max(1.0, std::abs(stated)))
            rep.findings.push_back({Severity::Error, a.code,
                                    "stated column total " + format_double(stated) +
                                        " does not match computed " + format_double(computed)});

        double rs = sam.row_sum(a.id);
        double cs = sam.col_sums[a.id];
        bool imbalanced = cs != 0.0 ? std::abs(rs - cs) > 0.05 * std::abs(cs)
                                    : std::abs(rs) > 1e-9;
        if (imbalanced)
            rep.findings.push_back({Severity::Warning, a.code,
                                    "row/column imbalance: row total " + format_double(rs) +
                                        ", column total " + format_double(cs)});

        if (is_producing(a.kind) && computed == 0.0 && rs == 0.0 && sam.column_in_file[a.id])
            rep.findings.push_back({Severity::Warning, a.code, "producing sector has no flows"});
    }
    return rep;
}

double TechProfile::share_sum() const {
    double s = wage_share + surplus_share + import_share + other_share;
    for (const auto& [id, v] : input_shares) s += v;
    for (const auto& [id, v] : tax_shares) s += v;
    return s;
}

TechProfile tech_profile(const SamTable& sam, int sector) {
    if (sector < 0 || sector >= sam.size())
        throw std::invalid_argument("tech_profile: sector id out of range");
    const Account& acc = sam.accounts[sector];
    if (!is_producing(acc.kind))
        throw std::invalid_argument("tech_profile: account " + acc.code + " is not a producing sector");
    double cs = sam.col_sums[sector];
    if (!(cs > 0.0))
        throw std::invalid_argument("tech_profile: sector " + acc.code + " has no output (column total " +
                                    format_double(cs) + ")");

    TechProfile p;
    p.sector = sector;
    p.col_sum = cs;
    p.column.resize(sam.size());
    for (int r = 0; r < sam.size(); ++r) {
        double cell = sam.at(r, sector);
        p.column[r] = cell;
        if (cell == 0.0) continue;
        double share = cell / cs;
        switch (sam.accounts[r].kind) {
            case AccountKind::MarketSector:
            case AccountKind::NonMarketSector:
                p.input_shares[r] = share;
                break;
            case AccountKind::Labor:
                p.wage_share += share;
                break;
            case AccountKind::Surplus:
                p.surplus_share += share;
                break;
            case AccountKind::Tax:
                p.tax_shares[r] = share;
                break;
            case AccountKind::External:
                p.import_share += share;
                break;
            case AccountKind::CapitalFormation:
            case AccountKind::Government:
            case AccountKind::Households:
                p.other_share += share;
                break;
        }
    }
    return p;
}

std::map<int, double> consumption_basket(const SamTable& sam, BasketMode mode,
                                         ValidationReport* report) {
    auto sectors = sam.market_sectors();
    if (sectors.empty()) throw std::invalid_argument("consumption_basket: no market sectors");

    auto warn = [&](const std::string& account, const std::string& msg) {
        if (report) report->findings.push_back({Severity::Warning, account, msg});
    };

    std::vector<double> weights(sectors.size(), 0.0);
    bool from_table = false;

    if (mode == BasketMode::Auto || mode == BasketMode::Table) {
        // household expenditure column(s)
        double total = 0.0;
        for (const auto& a : sam.accounts) {
            if (a.kind != AccountKind::Households) continue;
            for (size_t i = 0; i < sectors.size(); ++i) {
                double v = sam.at(sectors[i], a.id);
                if (v < 0.0)
                    throw SamError("negative household expenditure in " +
                                   sam.accounts[sectors[i]].code);
                weights[i] += v;
                total += v;
            }
        }
        if (total > 0.0) {
            from_table = true;
        } else if (mode == BasketMode::Table) {
            throw SamError("no household expenditure column with nonzero entries");
        } else {
            warn("H", "no household expenditure data, falling back to residual basket");
        }
    }

    if (!from_table) {
        if (mode == BasketMode::Uniform) {
            for (auto& w : weights) w = 1.0;
        } else {
            // residual unattributed final demand per market sector
            bool any = false;
            for (size_t i = 0; i < sectors.size(); ++i) {
                double resid = sam.col_sums[sectors[i]] - sam.row_sum(sectors[i]);
                weights[i] = std::max(0.0, resid);
                if (weights[i] > 0.0) any = true;
            }
            if (!any) {
                warn("P", "no residual final demand, falling back to uniform basket");
                for (auto& w : weights) w = 1.0;
            }
        }
    }

    double total = 0.0;
    for (double w : weights) total += w;
    std::map<int, double> basket;
    for (size_t i = 0; i < sectors.size(); ++i) basket[sectors[i]] = weights[i] / total;
    return basket;
}

} // namespace samsim
