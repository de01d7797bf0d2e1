#include "mci/dbcore.hpp"

#include <sqlite3.h>

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <set>

#include "mci/error.hpp"
#include "mci/util.hpp"

namespace mci::db {

bool is_null(const Cell& c) { return std::holds_alternative<Null>(c); }

bool is_numeric(const Cell& c) {
    return std::holds_alternative<std::int64_t>(c) || std::holds_alternative<double>(c);
}

std::optional<double> as_double(const Cell& c) {
    if (auto* i = std::get_if<std::int64_t>(&c)) return static_cast<double>(*i);
    if (auto* d = std::get_if<double>(&c)) return *d;
    return std::nullopt;
}

namespace {

std::string python_float(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[128];
    double mag = std::fabs(v);
    if (v == 0.0 || (mag >= 1e-4 && mag < 1e16)) {
        auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed);
        std::string s(buf, res.ptr);
        if (s.find('.') == std::string::npos) s += ".0";
        return s;
    }
    auto res = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::scientific);
    return std::string(buf, res.ptr);
}

std::string python_str(const std::string& s) {
    bool has_single = s.find('\'') != std::string::npos;
    bool has_double = s.find('"') != std::string::npos;
    char quote = (has_single && !has_double) ? '"' : '\'';
    std::string out(1, quote);
    for (unsigned char c : s) {
        switch (c) {
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\r': out += "\\r"; break;
            case '\t': out += "\\t"; break;
            default:
                if (c == static_cast<unsigned char>(quote)) {
                    out.push_back('\\');
                    out.push_back(static_cast<char>(c));
                } else if (c < 0x20 || c == 0x7f) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\x%02x", c);
                    out += buf;
                } else {
                    out.push_back(static_cast<char>(c));
                }
        }
    }
    out.push_back(quote);
    return out;
}

}  // namespace

std::string python_repr(const Cell& c) {
    return std::visit(
        [](const auto& v) -> std::string {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, Null>) {
                return "None";
            } else if constexpr (std::is_same_v<T, std::int64_t>) {
                return std::to_string(v);
            } else if constexpr (std::is_same_v<T, double>) {
                return python_float(v);
            } else if constexpr (std::is_same_v<T, std::string>) {
                return python_str(v);
            } else {
                std::string out = "b'";
                for (auto byte : v.bytes) {
                    char buf[8];
                    std::snprintf(buf, sizeof(buf), "\\x%02x", byte);
                    out += buf;
                }
                return out + "'";
            }
        },
        c);
}

std::string display(const Cell& c) {
    if (is_null(c)) return "NULL";
    if (auto* s = std::get_if<std::string>(&c)) return *s;
    if (auto* d = std::get_if<double>(&c)) return util::format_double(*d);
    if (auto* i = std::get_if<std::int64_t>(&c)) return std::to_string(*i);
    return python_repr(c);
}

std::string python_repr(std::span<const Row> rows) {
    std::string out = "[";
    for (size_t r = 0; r < rows.size(); ++r) {
        if (r) out += ", ";
        out += "(";
        for (size_t i = 0; i < rows[r].size(); ++i) {
            if (i) out += ", ";
            out += python_repr(rows[r][i]);
        }
        if (rows[r].size() == 1) out += ",";
        out += ")";
    }
    return out + "]";
}

const ColumnDef* TableDef::find_column(std::string_view col) const {
    for (const auto& c : columns)
        if (util::iequals(c.name, col)) return &c;
    return nullptr;
}

std::vector<std::string> TableDef::primary_key() const {
    std::vector<std::string> pk;
    for (const auto& c : columns)
        if (c.is_primary_key) pk.push_back(c.name);
    return pk;
}

const TableDef* RawSchema::find_table(std::string_view table) const {
    for (const auto& t : tables)
        if (util::iequals(t.name, table)) return &t;
    return nullptr;
}

std::string_view to_string(ExecState s) {
    switch (s) {
        case ExecState::Success: return "Success";
        case ExecState::NoneValued: return "None";
        case ExecState::Empty: return "Empty";
        case ExecState::Failure: return "Failed";
    }
    return "Failed";
}

ExecState exec_state_from_string(std::string_view s) {
    if (s == "Success") return ExecState::Success;
    if (s == "None") return ExecState::NoneValued;
    if (s == "Empty") return ExecState::Empty;
    if (s == "Failed") return ExecState::Failure;
    throw Error("unknown execution state: " + std::string(s));
}

namespace {

struct Deadline {
    std::chrono::steady_clock::time_point until;
    bool fired = false;
};

int progress_callback(void* arg) {
    auto* d = static_cast<Deadline*>(arg);
    if (std::chrono::steady_clock::now() >= d->until) {
        d->fired = true;
        return 1;
    }
    return 0;
}

class Stmt {
public:
    Stmt(sqlite3* db, const std::string& sql, const char** tail) {
        rc_ = sqlite3_prepare_v2(db, sql.c_str(), static_cast<int>(sql.size()), &stmt_, tail);
    }
    ~Stmt() { sqlite3_finalize(stmt_); }
    Stmt(const Stmt&) = delete;
    Stmt& operator=(const Stmt&) = delete;

    int rc() const { return rc_; }
    sqlite3_stmt* get() const { return stmt_; }

private:
    sqlite3_stmt* stmt_ = nullptr;
    int rc_ = SQLITE_OK;
};

class ProgressGuard {
public:
    ProgressGuard(sqlite3* db, Deadline& d) : db_(db) {
        sqlite3_progress_handler(db_, 1000, &progress_callback, &d);
    }
    ~ProgressGuard() { sqlite3_progress_handler(db_, 0, nullptr, nullptr); }
    ProgressGuard(const ProgressGuard&) = delete;
    ProgressGuard& operator=(const ProgressGuard&) = delete;

private:
    sqlite3* db_;
};

Cell read_cell(sqlite3_stmt* st, int i) {
    switch (sqlite3_column_type(st, i)) {
        case SQLITE_INTEGER: return static_cast<std::int64_t>(sqlite3_column_int64(st, i));
        case SQLITE_FLOAT: return sqlite3_column_double(st, i);
        case SQLITE_TEXT: {
            auto* p = reinterpret_cast<const char*>(sqlite3_column_text(st, i));
            return std::string(p, static_cast<size_t>(sqlite3_column_bytes(st, i)));
        }
        case SQLITE_BLOB: {
            auto* p = static_cast<const std::uint8_t*>(sqlite3_column_blob(st, i));
            Blob b;
            b.bytes.assign(p, p + sqlite3_column_bytes(st, i));
            return b;
        }
        default: return Null{};
    }
}

// Skips whitespace and SQL comments.
size_t skip_trivia(std::string_view s, size_t i) {
    while (i < s.size()) {
        if (std::isspace(static_cast<unsigned char>(s[i]))) {
            ++i;
        } else if (s.compare(i, 2, "--") == 0) {
            size_t nl = s.find('\n', i);
            i = nl == std::string_view::npos ? s.size() : nl + 1;
        } else if (s.compare(i, 2, "/*") == 0) {
            size_t end = s.find("*/", i + 2);
            i = end == std::string_view::npos ? s.size() : end + 2;
        } else {
            break;
        }
    }
    return i;
}

}  // namespace

std::string quote_ident(std::string_view name) {
    std::string out = "\"";
    for (char c : name) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    return out + "\"";
}

namespace {

struct RunResult {
    ResultSet result;
    std::optional<std::string> error;
};

RunResult run(sqlite3* db, const std::string& sql, std::chrono::milliseconds timeout,
              std::size_t row_cap, std::size_t counting_cap,
              const std::function<void(const Row&)>* sink, bool require_readonly) {
    RunResult out;
    const char* tail = nullptr;
    Stmt st(db, sql, &tail);
    if (st.rc() != SQLITE_OK) {
        out.error = sqlite3_errmsg(db);
        return out;
    }
    if (!st.get()) {
        out.error = "empty statement";
        return out;
    }
    if (tail) {
        std::string_view rest(tail);
        size_t i = skip_trivia(rest, 0);
        while (i < rest.size() && rest[i] == ';') i = skip_trivia(rest, i + 1);
        if (i < rest.size()) {
            out.error = "multiple statements are not allowed";
            return out;
        }
    }
    if (require_readonly && !sqlite3_stmt_readonly(st.get())) {
        out.error = "only read-only statements are allowed";
        return out;
    }

    Deadline deadline{std::chrono::steady_clock::now() + timeout};
    ProgressGuard guard(db, deadline);

    int ncol = sqlite3_column_count(st.get());
    for (int i = 0; i < ncol; ++i) {
        const char* name = sqlite3_column_name(st.get(), i);
        out.result.columns.emplace_back(name ? name : "");
    }

    std::size_t total = 0;
    for (;;) {
        int rc = sqlite3_step(st.get());
        if (rc == SQLITE_ROW) {
            if (total >= counting_cap) {
                // More rows exist beyond the counting cap.
                total = counting_cap + 1;
                break;
            }
            ++total;
            if (sink) {
                Row row;
                row.reserve(static_cast<size_t>(ncol));
                for (int i = 0; i < ncol; ++i) row.push_back(read_cell(st.get(), i));
                (*sink)(row);
            } else if (out.result.rows.size() < row_cap) {
                Row row;
                row.reserve(static_cast<size_t>(ncol));
                for (int i = 0; i < ncol; ++i) row.push_back(read_cell(st.get(), i));
                out.result.rows.push_back(std::move(row));
            }
        } else if (rc == SQLITE_DONE) {
            break;
        } else {
            if (deadline.fired || rc == SQLITE_INTERRUPT) {
                out.error = "query timed out after " +
                            util::format_double(static_cast<double>(timeout.count()) / 1000.0) +
                            " s";
            } else {
                out.error = sqlite3_errmsg(db);
            }
            return out;
        }
    }
    out.result.total_row_count = total;
    out.result.truncated = !sink && out.result.rows.size() < total;
    return out;
}

}  // namespace

bool is_read_statement(std::string_view sql) {
    size_t i = skip_trivia(sql, 0);
    while (i < sql.size() && sql[i] == '(') i = skip_trivia(sql, i + 1);
    size_t j = i;
    while (j < sql.size() && std::isalpha(static_cast<unsigned char>(sql[j]))) ++j;
    auto word = sql.substr(i, j - i);
    return util::iequals(word, "SELECT") || util::iequals(word, "WITH");
}

Database::Database(const std::filesystem::path& path) : path_(path) {
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) throw FileNotFound("database not found: " + path.string());
    if (!std::filesystem::is_regular_file(path, ec))
        throw CorruptDatabase("not a regular file: " + path.string());
    if (std::filesystem::file_size(path, ec) == 0)
        throw CorruptDatabase("zero-byte database file: " + path.string());

    int rc = sqlite3_open_v2(path.string().c_str(), &handle_,
                             SQLITE_OPEN_READONLY | SQLITE_OPEN_NOMUTEX, nullptr);
    if (rc != SQLITE_OK) {
        std::string msg = handle_ ? sqlite3_errmsg(handle_) : "cannot open";
        sqlite3_close(handle_);
        handle_ = nullptr;
        if (rc == SQLITE_CANTOPEN) throw FileNotFound(msg + ": " + path.string());
        throw CorruptDatabase(msg + ": " + path.string());
    }
    sqlite3_exec(handle_, "PRAGMA query_only = 1", nullptr, nullptr, nullptr);
    auto probe = run(handle_, "SELECT count(*) FROM sqlite_master", kDefaultTimeout, 1, 1, nullptr,
                     true);
    if (probe.error) {
        sqlite3_close(handle_);
        handle_ = nullptr;
        throw CorruptDatabase(*probe.error + ": " + path.string());
    }
}

Database::~Database() {
    if (handle_) sqlite3_close(handle_);
}

Database::Database(Database&& other) noexcept
    : path_(std::move(other.path_)), handle_(std::exchange(other.handle_, nullptr)) {}

Database& Database::operator=(Database&& other) noexcept {
    if (this != &other) {
        if (handle_) sqlite3_close(handle_);
        path_ = std::move(other.path_);
        handle_ = std::exchange(other.handle_, nullptr);
    }
    return *this;
}

Database open_database(const std::filesystem::path& path) { return Database(path); }

ResultSet Database::query(const std::string& sql, std::chrono::milliseconds timeout,
                          std::size_t row_cap) {
    auto r = run(handle_, sql, timeout, row_cap, kCountingCap, nullptr, false);
    if (r.error) throw QueryFailure(*r.error + " [" + sql + "]");
    return std::move(r.result);
}

void Database::for_each_row(const std::string& sql, const std::function<void(const Row&)>& fn,
                            std::chrono::milliseconds timeout) {
    auto r = run(handle_, sql, timeout, 0, std::numeric_limits<std::size_t>::max() - 1, &fn, false);
    if (r.error) throw QueryFailure(*r.error + " [" + sql + "]");
}

ExecutionOutcome Database::execute(const std::string& sql, std::chrono::milliseconds timeout,
                                   std::size_t row_cap, std::size_t counting_cap) {
    auto start = std::chrono::steady_clock::now();
    ExecutionOutcome out;
    if (!is_read_statement(sql)) {
        out.state = ExecState::Failure;
        out.error_message = "only SELECT or WITH statements may be executed";
    } else {
        auto r = run(handle_, sql, timeout, std::max<std::size_t>(row_cap, 1),
                     std::max(counting_cap, row_cap), nullptr, true);
        if (r.error) {
            out.state = ExecState::Failure;
            out.error_message = std::move(r.error);
        } else {
            out.state = classify_outcome(r.result);
            out.result = std::move(r.result);
        }
    }
    out.elapsed = std::chrono::steady_clock::now() - start;
    return out;
}

RawSchema Database::introspect_schema() {
    RawSchema schema;
    auto tables = query(
        "SELECT name FROM sqlite_master WHERE type = 'table' AND name NOT LIKE 'sqlite\\_%' "
        "ESCAPE '\\' ORDER BY rowid");
    for (const auto& row : tables.rows) {
        TableDef t;
        t.name = std::get<std::string>(row[0]);
        auto info = query("PRAGMA table_info(" + quote_ident(t.name) + ")");
        for (const auto& c : info.rows) {
            ColumnDef col;
            col.name = std::get<std::string>(c[1]);
            col.declared_type = is_null(c[2]) ? "" : std::get<std::string>(c[2]);
            col.is_primary_key = std::get<std::int64_t>(c[5]) > 0;
            t.columns.push_back(std::move(col));
        }
        schema.tables.push_back(std::move(t));
    }
    // Foreign keys resolve after all tables are known; dangling references
    // (target table or column missing) are dropped.
    for (auto& t : schema.tables) {
        auto fks = query("PRAGMA foreign_key_list(" + quote_ident(t.name) + ")");
        for (const auto& f : fks.rows) {
            const auto& to_table_raw = std::get<std::string>(f[2]);
            const auto& from = std::get<std::string>(f[3]);
            const TableDef* target = schema.find_table(to_table_raw);
            const ColumnDef* from_col = t.find_column(from);
            if (!target || !from_col) continue;
            std::string to_col;
            if (is_null(f[4])) {
                auto pk = target->primary_key();
                auto seq = static_cast<size_t>(std::get<std::int64_t>(f[1]));
                if (seq >= pk.size()) continue;
                to_col = pk[seq];
            } else {
                const ColumnDef* c = target->find_column(std::get<std::string>(f[4]));
                if (!c) continue;
                to_col = c->name;
            }
            t.foreign_keys.push_back({from_col->name, target->name, to_col});
        }
    }
    return schema;
}

ExecState classify_outcome(const ResultSet& result) {
    if (result.rows.empty()) return ExecState::Empty;
    bool all_null = std::all_of(result.rows.begin(), result.rows.end(), [](const Row& r) {
        return std::all_of(r.begin(), r.end(), [](const Cell& c) { return is_null(c); });
    });
    if (all_null) return ExecState::NoneValued;
    if (result.rows.size() == 1 && result.rows[0].size() == 1 && result.total_row_count <= 1) {
        if (auto* i = std::get_if<std::int64_t>(&result.rows[0][0]); i && *i == 0)
            return ExecState::Empty;
    }
    return ExecState::Success;
}

ExecState classify_outcome(const std::variant<ResultSet, EngineError>& result) {
    if (std::holds_alternative<EngineError>(result)) return ExecState::Failure;
    return classify_outcome(std::get<ResultSet>(result));
}

namespace {

void append_key(std::string& out, const Cell& c) {
    std::string k;
    if (is_null(c)) {
        k = "N";
    } else if (auto* i = std::get_if<std::int64_t>(&c)) {
        constexpr std::int64_t kSmall = 9'000'000'000'000;
        if (*i > -kSmall && *i < kSmall) k = "n" + std::to_string(*i * 1'000'000);
        else k = "b" + std::to_string(*i);
    } else if (auto* d = std::get_if<double>(&c)) {
        double v = *d;
        if (std::isfinite(v) && std::fabs(v) < 9e12) {
            k = "n" + std::to_string(std::llround(v * 1e6));
        } else if (std::isfinite(v) && std::floor(v) == v && std::fabs(v) < 9.2e18) {
            k = "b" + std::to_string(static_cast<std::int64_t>(v));
        } else {
            k = "r" + util::format_double(v);
        }
    } else if (auto* s = std::get_if<std::string>(&c)) {
        k = "t" + *s;
    } else {
        const auto& b = std::get<Blob>(c).bytes;
        k = "x" + std::string(b.begin(), b.end());
    }
    out += std::to_string(k.size());
    out.push_back(':');
    out += k;
}

std::vector<std::string> row_keys(const ResultSet& r) {
    std::vector<std::string> keys;
    keys.reserve(r.rows.size());
    for (const auto& row : r.rows) {
        std::string key = std::to_string(row.size()) + "|";
        for (const auto& c : row) append_key(key, c);
        keys.push_back(std::move(key));
    }
    return keys;
}

}  // namespace

bool results_equivalent(const ResultSet& a, const ResultSet& b, CompareOptions opts) {
    if (a.truncated || b.truncated)
        throw IncomparableTruncated("cannot compare truncated result sets");
    auto ka = row_keys(a);
    auto kb = row_keys(b);
    std::sort(ka.begin(), ka.end());
    std::sort(kb.begin(), kb.end());
    if (!opts.strict_multiset) {
        ka.erase(std::unique(ka.begin(), ka.end()), ka.end());
        kb.erase(std::unique(kb.begin(), kb.end()), kb.end());
    }
    return ka == kb;
}

double execution_accuracy(std::span<const std::pair<ExecutionOutcome, ExecutionOutcome>> pairs,
                          CompareOptions opts) {
    if (pairs.empty()) throw EmptyInput("execution_accuracy: no pairs");
    std::size_t correct = 0;
    for (const auto& [pred, gold] : pairs) {
        if (!pred.ok() || !gold.ok() || !pred.result || !gold.result) continue;
        if (results_equivalent(*pred.result, *gold.result, opts)) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(pairs.size());
}

}  // namespace mci::db
