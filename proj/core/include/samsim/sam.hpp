#pragma once

// Social accounting matrix input: CSV parsing, structural validation, and the
// derived per-sector quantities the simulation runs on (technology profiles,
// household consumption baskets).
//
// File format: square matrix CSV. Header row carries column account codes,
// first column carries row account codes, optional final "colSUM" row carries
// stated column totals. Account codes classify by prefix letter:
//   P market producing sector     N non-market producing sector
//   F capital formation           X external sector
//   L labor compensation          K operating surplus
//   T tax                         G government      H households
// Columns absent from the file are zero-filled and flagged by validate_sam.

#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace samsim {

enum class AccountKind {
    MarketSector,
    NonMarketSector,
    CapitalFormation,
    External,
    Labor,
    Surplus,
    Tax,
    Government,
    Households,
};

struct SamError : std::runtime_error {
    SamError(const std::string& msg, int line = 0)
        : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + msg : msg),
          line_number(line) {}
    int line_number;
};

AccountKind classify_account(std::string_view code, int line = 0);
bool is_producing(AccountKind k);

struct Account {
    int id = 0;
    std::string code;
    AccountKind kind = AccountKind::MarketSector;
};

struct SamTable {
    std::string source;
    std::vector<Account> accounts;
    std::vector<double> values;       // row-major, size n*n
    std::vector<double> col_sums;     // stated where present, else computed
    std::vector<bool> column_in_file; // false for zero-filled columns
    bool has_stated_sums = false;

    int size() const { return static_cast<int>(accounts.size()); }
    double at(int row, int col) const { return values[static_cast<size_t>(row) * accounts.size() + col]; }
    double& at(int row, int col) { return values[static_cast<size_t>(row) * accounts.size() + col]; }
    double row_sum(int row) const;
    double computed_col_sum(int col) const;
    std::optional<int> find(std::string_view code) const;
    std::vector<int> producing_sectors() const;  // P and N accounts, ascending id
    std::vector<int> market_sectors() const;     // P accounts only, ascending id
};

SamTable parse_sam(std::istream& in, std::string_view source_name = "<stream>");
SamTable load_sam(const std::string& path);
// CSV text that parses back to an identical table (shortest round-trip
// number form; only in-file columns and the stated-sums row are emitted)
std::string sam_to_csv(const SamTable& sam);

enum class Severity { Warning, Error };

struct Finding {
    Severity severity = Severity::Warning;
    std::string account;
    std::string message;
};

struct ValidationReport {
    std::vector<Finding> findings;
    bool has_errors() const;
    int error_count() const;
    int warning_count() const;
    std::string to_text() const; // one "SEVERITY account: message" line per finding
};

ValidationReport validate_sam(const SamTable& sam);

// Per-unit cost and revenue decomposition of one producing sector's column.
// Shares are cell/col_sum; the raw column is kept alongside so that currency
// allocations can be computed numerator-first (cell*revenue/col_sum), which
// reproduces the original cells exactly when revenue equals col_sum.
struct TechProfile {
    int sector = -1;
    double col_sum = 0.0;
    std::vector<double> column;            // full raw column, size n
    std::map<int, double> input_shares;    // producing-sector rows, nonzero only
    std::map<int, double> tax_shares;      // tax rows, nonzero only
    double wage_share = 0.0;               // L rows
    double surplus_share = 0.0;            // K rows
    double import_share = 0.0;             // X rows
    double other_share = 0.0;              // F, G, H rows

    double share_sum() const;
};

TechProfile tech_profile(const SamTable& sam, int sector);

enum class BasketMode {
    Auto,     // household column if present, else residual
    Table,    // household column required
    Residual, // unattributed final demand: max(0, col_sum - row_sum) per market sector
    Uniform,  // equal share per market sector
};

// Household budget shares over market sectors, summing to 1.
// Appends a warning to `report` when a fallback mode kicks in.
std::map<int, double> consumption_basket(const SamTable& sam,
                                         BasketMode mode = BasketMode::Auto,
                                         ValidationReport* report = nullptr);

} // namespace samsim
