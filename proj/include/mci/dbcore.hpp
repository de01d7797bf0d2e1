#pragma once

// Read-only access to benchmark SQLite databases: schema introspection,
// guarded execution, outcome classification and result-set comparison for
// execution accuracy.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <variant>
#include <vector>

struct sqlite3;

namespace mci::db {

struct Blob {
    std::vector<std::uint8_t> bytes;
    bool operator==(const Blob&) const = default;
};

struct Null {
    bool operator==(const Null&) const = default;
};

/// One result cell: null, integer, real, text or blob.
using Cell = std::variant<Null, std::int64_t, double, std::string, Blob>;
using Row = std::vector<Cell>;

bool is_null(const Cell& c);
bool is_numeric(const Cell& c);
std::optional<double> as_double(const Cell& c);
/// Python-style literal, e.g. `'abc'`, `None`, `1.0`.
std::string python_repr(const Cell& c);
/// Plain rendering for prompts and reports (`NULL` for null).
std::string display(const Cell& c);
/// `[(1, 'a'), (2, None)]`, the sqlite3 fetchall() rendering.
std::string python_repr(std::span<const Row> rows);

struct ColumnDef {
    std::string name;
    std::string declared_type;
    bool is_primary_key = false;
};

struct ForeignKey {
    std::string from_column;
    std::string to_table;
    std::string to_column;
};

struct TableDef {
    std::string name;
    std::vector<ColumnDef> columns;
    std::vector<ForeignKey> foreign_keys;

    const ColumnDef* find_column(std::string_view name) const;  // case-insensitive
    std::vector<std::string> primary_key() const;
};

struct RawSchema {
    std::vector<TableDef> tables;

    const TableDef* find_table(std::string_view name) const;  // case-insensitive
};

struct ResultSet {
    std::vector<std::string> columns;
    std::vector<Row> rows;
    bool truncated = false;
    std::size_t total_row_count = 0;
};

enum class ExecState { Success, NoneValued, Empty, Failure };

std::string_view to_string(ExecState s);
ExecState exec_state_from_string(std::string_view s);

struct ExecutionOutcome {
    ExecState state = ExecState::Failure;
    std::optional<ResultSet> result;
    std::optional<std::string> error_message;
    std::chrono::duration<double> elapsed{0};

    bool ok() const { return state != ExecState::Failure; }
};

inline constexpr std::chrono::seconds kDefaultTimeout{30};
inline constexpr std::size_t kPipelineRowCap = 500;
inline constexpr std::size_t kCountingCap = 1'000'000;
inline constexpr std::size_t kScoringRowCap = kCountingCap;

/// Read-only handle to one SQLite file. Confined to one thread; open one
/// handle per thread for concurrent use of the same file.
class Database {
public:
    explicit Database(const std::filesystem::path& path);
    ~Database();
    Database(Database&& other) noexcept;
    Database& operator=(Database&& other) noexcept;
    Database(const Database&) = delete;
    Database& operator=(const Database&) = delete;

    const std::filesystem::path& path() const { return path_; }

    RawSchema introspect_schema();

    ExecutionOutcome execute(const std::string& sql,
                             std::chrono::milliseconds timeout = kDefaultTimeout,
                             std::size_t row_cap = kPipelineRowCap,
                             std::size_t counting_cap = kCountingCap);

    /// Runs an internal probe (catalog or profiling query); throws QueryFailure.
    ResultSet query(const std::string& sql, std::chrono::milliseconds timeout = kDefaultTimeout,
                    std::size_t row_cap = kCountingCap);

    /// Streams every row of a query through `fn`; throws QueryFailure.
    void for_each_row(const std::string& sql, const std::function<void(const Row&)>& fn,
                      std::chrono::milliseconds timeout = kDefaultTimeout);

private:
    std::filesystem::path path_;
    sqlite3* handle_ = nullptr;
};

Database open_database(const std::filesystem::path& path);

/// Engine-side error text of a failed execution.
struct EngineError {
    std::string message;
};

/// Applies the four-state precedence: engine error, zero rows, all-null
/// rows, scalar integer zero, otherwise success.
ExecState classify_outcome(const std::variant<ResultSet, EngineError>& result);
ExecState classify_outcome(const ResultSet& result);

struct CompareOptions {
    bool strict_multiset = false;
};

/// Set-of-tuples equality (row order and duplicates ignored, column order
/// significant). Integers and reals compare numerically on a 1e-6 grid.
bool results_equivalent(const ResultSet& a, const ResultSet& b, CompareOptions opts = {});

/// Fraction of pairs (predicted, gold) whose results are equivalent.
double execution_accuracy(
    std::span<const std::pair<ExecutionOutcome, ExecutionOutcome>> pairs,
    CompareOptions opts = {});

/// Double-quoted SQL identifier.
std::string quote_ident(std::string_view name);

/// True when the statement's first keyword is SELECT or WITH.
bool is_read_statement(std::string_view sql);

}  // namespace mci::db
