#pragma once

// Syntax tree for the SQLite SELECT dialect used by text-to-SQL benchmarks.

#include <memory>
#include <optional>
#include <string>
#include <vector>

namespace mci::sql {

struct Select;

enum class ExprKind {
    Literal,    // text = source spelling ('abc', 12, NULL, CURRENT_DATE, X'..')
    Parameter,  // ?, :name
    Column,     // qualifier.name
    Star,       // * or qualifier.*
    Unary,      // op args[0]
    Binary,     // args[0] op args[1]; LIKE-family may carry ESCAPE in args[2]
    Postfix,    // args[0] ISNULL / NOTNULL
    Between,    // args[0] [NOT] BETWEEN args[1] AND args[2]
    InList,     // args[0] [NOT] IN (args[1..])
    InSelect,   // args[0] [NOT] IN (subquery)
    InTable,    // args[0] [NOT] IN name
    Exists,     // [NOT] EXISTS (subquery)
    Subquery,   // (subquery)
    Function,   // name(args) [FILTER (WHERE filter)] [OVER window]
    Case,       // CASE [base] WHEN .. THEN .. [ELSE ..] END
    Cast,       // CAST(args[0] AS type)
    Collate,    // args[0] COLLATE name
    Paren,      // (args[0], ...) parenthesised expression or row value
    Raise,      // RAISE(...)
};

enum class QuoteStyle { None, Double, Backtick, Bracket };

struct Expr;
struct OrderTerm;

struct WindowSpec {
    std::string base_name;  // OVER name or OVER (name ...)
    std::vector<Expr> partition_by;
    std::vector<OrderTerm> order_by;
    std::string frame;  // normalised frame text, keywords upper-case
};

struct Expr {
    ExprKind kind = ExprKind::Literal;
    std::string text;       // literal spelling, operator, function name, type or collation
    std::string qualifier;  // Column/Star: table or alias; may be empty
    std::string name;       // Column: column name
    QuoteStyle name_quote = QuoteStyle::None;
    bool negated = false;   // NOT IN / NOT BETWEEN / NOT LIKE / NOT EXISTS
    bool distinct = false;  // aggregate DISTINCT
    bool has_base = false;  // CASE with base expression in args[0]
    bool has_else = false;  // CASE with ELSE as last arg
    std::vector<Expr> args;
    std::shared_ptr<Select> subquery;
    std::shared_ptr<Expr> filter;
    std::shared_ptr<WindowSpec> window;
};

struct OrderTerm {
    Expr expr;
    std::string direction;  // "", "ASC", "DESC"
    std::string nulls;      // "", "NULLS FIRST", "NULLS LAST"
};

struct ResultColumn {
    Expr expr;
    std::string alias;
    QuoteStyle alias_quote = QuoteStyle::None;
};

struct FromClause;

struct TableRef {
    enum class Kind { Table, Subquery, Join, Function };
    Kind kind = Kind::Table;
    std::string schema;
    std::string name;
    QuoteStyle name_quote = QuoteStyle::None;
    std::string alias;
    std::shared_ptr<Select> subquery;
    std::shared_ptr<FromClause> join;  // parenthesised join
    std::vector<Expr> args;            // table-valued function arguments
};

struct JoinClause {
    std::string op;  // ",", "JOIN", "INNER JOIN", "LEFT JOIN", "NATURAL LEFT JOIN", ...
    TableRef right;
    std::optional<Expr> on;
    std::vector<std::string> using_columns;
};

struct FromClause {
    TableRef first;
    std::vector<JoinClause> joins;
};

struct NamedWindow {
    std::string name;
    WindowSpec spec;
};

struct SelectCore {
    bool distinct = false;
    bool all = false;
    std::vector<ResultColumn> columns;
    std::optional<FromClause> from;
    std::optional<Expr> where;
    std::vector<Expr> group_by;
    std::optional<Expr> having;
    std::vector<NamedWindow> windows;
    std::vector<std::vector<Expr>> values;  // VALUES (...), (...)
    bool is_values = false;
};

struct CommonTableExpr {
    std::string name;
    std::vector<std::string> columns;
    std::string materialized;  // "", "MATERIALIZED", "NOT MATERIALIZED"
    std::shared_ptr<Select> select;
};

struct CompoundPart {
    std::string op;  // UNION, UNION ALL, INTERSECT, EXCEPT
    SelectCore core;
};

struct Select {
    bool recursive = false;
    std::vector<CommonTableExpr> ctes;
    SelectCore core;
    std::vector<CompoundPart> compounds;
    std::vector<OrderTerm> order_by;
    std::optional<Expr> limit;
    std::optional<Expr> offset;
};

}  // namespace mci::sql
