#include <algorithm>
#include <cctype>
#include <map>
#include <set>

#include "mci/sql/parser.hpp"
#include "mci/util.hpp"

namespace mci::sql {

namespace {

bool is_plain_identifier(std::string_view s) {
    if (s.empty()) return false;
    if (!(std::isalpha(static_cast<unsigned char>(s[0])) || s[0] == '_')) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
    });
}

std::string quoted(std::string_view name, QuoteStyle q) {
    switch (q) {
        case QuoteStyle::None: return std::string(name);
        case QuoteStyle::Backtick: return "`" + std::string(name) + "`";
        case QuoteStyle::Bracket: return "[" + std::string(name) + "]";
        case QuoteStyle::Double: {
            std::string out = "\"";
            for (char c : name) {
                if (c == '"') out += "\"\"";
                else out.push_back(c);
            }
            return out + "\"";
        }
    }
    return std::string(name);
}

class Printer {
public:
    explicit Printer(PrintOptions opts) : opts_(opts) {}

    std::string select(const Select& s) {
        std::string out;
        if (!s.ctes.empty()) {
            out += s.recursive ? "WITH RECURSIVE " : "WITH ";
            for (size_t i = 0; i < s.ctes.size(); ++i) {
                const auto& c = s.ctes[i];
                if (i) out += ", ";
                out += ident(c.name, QuoteStyle::None);
                if (!c.columns.empty()) {
                    out += "(";
                    for (size_t k = 0; k < c.columns.size(); ++k) {
                        if (k) out += ", ";
                        out += ident(c.columns[k], QuoteStyle::None);
                    }
                    out += ")";
                }
                out += " AS ";
                if (!c.materialized.empty()) out += c.materialized + " ";
                out += "(" + select(*c.select) + ")";
            }
            out += " ";
        }
        out += core(s.core);
        for (const auto& part : s.compounds) out += " " + part.op + " " + core(part.core);
        if (!s.order_by.empty()) {
            // ORDER BY of a simple select sees the core's FROM scope.
            if (s.compounds.empty()) push_scope(s.core);
            out += " ORDER BY " + order_terms(s.order_by);
            if (s.compounds.empty()) pop_scope();
        }
        if (s.limit) out += " LIMIT " + expr(*s.limit);
        if (s.offset) out += " OFFSET " + expr(*s.offset);
        return out;
    }

    std::string core(const SelectCore& c) {
        if (c.is_values) {
            std::string out = "VALUES ";
            for (size_t r = 0; r < c.values.size(); ++r) {
                if (r) out += ", ";
                out += "(" + expr_list(c.values[r]) + ")";
            }
            return out;
        }
        push_scope(c);
        std::string out = "SELECT ";
        if (c.distinct) out += "DISTINCT ";
        if (c.all) out += "ALL ";
        for (size_t i = 0; i < c.columns.size(); ++i) {
            if (i) out += ", ";
            out += expr(c.columns[i].expr);
            if (!c.columns[i].alias.empty())
                out += " AS " + ident(c.columns[i].alias, c.columns[i].alias_quote);
        }
        if (c.from) out += " FROM " + from(*c.from);
        if (c.where) out += " WHERE " + expr(*c.where);
        if (!c.group_by.empty()) out += " GROUP BY " + expr_list(c.group_by);
        if (c.having) out += " HAVING " + expr(*c.having);
        if (!c.windows.empty()) {
            out += " WINDOW ";
            for (size_t i = 0; i < c.windows.size(); ++i) {
                if (i) out += ", ";
                out += ident(c.windows[i].name, QuoteStyle::None) + " AS " + window(c.windows[i].spec);
            }
        }
        pop_scope();
        return out;
    }

    std::string expr(const Expr& e) {
        switch (e.kind) {
            case ExprKind::Literal:
            case ExprKind::Parameter: return e.text;
            case ExprKind::Column: return column(e);
            case ExprKind::Star:
                return e.qualifier.empty() ? "*" : qualifier(e.qualifier) + ".*";
            case ExprKind::Unary:
                if (e.text == "NOT") return "NOT " + expr(e.args[0]);
                return e.text + expr(e.args[0]);
            case ExprKind::Binary: {
                std::string op = e.text;
                if (e.negated) op = "NOT " + op;
                std::string out = expr(e.args[0]) + " " + op + " " + expr(e.args[1]);
                if (e.args.size() > 2) out += " ESCAPE " + expr(e.args[2]);
                return out;
            }
            case ExprKind::Postfix: return expr(e.args[0]) + " " + e.text;
            case ExprKind::Between:
                return expr(e.args[0]) + (e.negated ? " NOT BETWEEN " : " BETWEEN ") +
                       expr(e.args[1]) + " AND " + expr(e.args[2]);
            case ExprKind::InList: {
                std::vector<Expr> rest;
                std::string out = expr(e.args[0]) + (e.negated ? " NOT IN (" : " IN (");
                for (size_t i = 1; i < e.args.size(); ++i) {
                    if (i > 1) out += ", ";
                    out += expr(e.args[i]);
                }
                return out + ")";
            }
            case ExprKind::InSelect:
                return expr(e.args[0]) + (e.negated ? " NOT IN (" : " IN (") + select(*e.subquery) +
                       ")";
            case ExprKind::InTable:
                return expr(e.args[0]) + (e.negated ? " NOT IN " : " IN ") +
                       ident(e.text, QuoteStyle::None);
            case ExprKind::Exists:
                return std::string(e.negated ? "NOT EXISTS (" : "EXISTS (") + select(*e.subquery) +
                       ")";
            case ExprKind::Subquery: return "(" + select(*e.subquery) + ")";
            case ExprKind::Function: {
                std::string name = opts_.fold_identifiers ? util::to_lower(e.text) : e.text;
                std::string out = name + "(";
                if (e.distinct) out += "DISTINCT ";
                out += expr_list(e.args) + ")";
                if (e.filter) out += " FILTER (WHERE " + expr(*e.filter) + ")";
                if (e.window) {
                    const auto& w = *e.window;
                    if (w.partition_by.empty() && w.order_by.empty() && w.frame.empty())
                        out += " OVER " + (w.base_name.empty() ? "()" : ident(w.base_name, QuoteStyle::None));
                    else
                        out += " OVER " + window(w);
                }
                return out;
            }
            case ExprKind::Case: {
                std::string out = "CASE";
                size_t i = 0;
                if (e.has_base) out += " " + expr(e.args[i++]);
                size_t end = e.args.size() - (e.has_else ? 1 : 0);
                for (; i + 1 < end + 1 && i < end; i += 2)
                    out += " WHEN " + expr(e.args[i]) + " THEN " + expr(e.args[i + 1]);
                if (e.has_else) out += " ELSE " + expr(e.args.back());
                return out + " END";
            }
            case ExprKind::Cast: return "CAST(" + expr(e.args[0]) + " AS " + e.text + ")";
            case ExprKind::Collate: return expr(e.args[0]) + " COLLATE " + e.text;
            case ExprKind::Paren: return "(" + expr_list(e.args) + ")";
            case ExprKind::Raise: return "RAISE(" + e.text + ")";
        }
        return {};
    }

private:
    PrintOptions opts_;
    std::vector<std::map<std::string, std::string>> scopes_;

    void push_scope(const SelectCore& c) {
        std::map<std::string, std::string> m;
        if (c.from) collect_aliases(*c.from, m);
        scopes_.push_back(std::move(m));
    }
    void pop_scope() { scopes_.pop_back(); }

    static void collect_aliases(const FromClause& f, std::map<std::string, std::string>& m) {
        auto add = [&](const TableRef& t) {
            if (t.kind == TableRef::Kind::Table && !t.alias.empty())
                m[util::to_lower(t.alias)] = t.name;
            if (t.kind == TableRef::Kind::Join && t.join) collect_aliases(*t.join, m);
        };
        add(f.first);
        for (const auto& j : f.joins) add(j.right);
    }

    std::string ident(std::string_view name, QuoteStyle q) const {
        if (!opts_.fold_identifiers) return quoted(name, q);
        std::string lower = util::to_lower(name);
        if (is_plain_identifier(lower)) return lower;
        return quoted(lower, QuoteStyle::Double);
    }

    std::string qualifier(const std::string& q) const {
        if (opts_.resolve_aliases) {
            std::string key = util::to_lower(q);
            for (auto it = scopes_.rbegin(); it != scopes_.rend(); ++it) {
                auto found = it->find(key);
                if (found != it->end()) return ident(found->second, QuoteStyle::None);
            }
        }
        return ident(q, QuoteStyle::None);
    }

    std::string column(const Expr& e) {
        // An unqualified double-quoted name may be a string literal in SQLite;
        // keep its spelling.
        if (opts_.fold_identifiers && e.qualifier.empty() && e.name_quote == QuoteStyle::Double)
            return quoted(e.name, QuoteStyle::Double);
        std::string out;
        if (!e.qualifier.empty()) out = qualifier(e.qualifier) + ".";
        return out + ident(e.name, e.name_quote);
    }

    std::string expr_list(const std::vector<Expr>& xs) {
        std::string out;
        for (size_t i = 0; i < xs.size(); ++i) {
            if (i) out += ", ";
            out += expr(xs[i]);
        }
        return out;
    }

    std::string order_terms(const std::vector<OrderTerm>& terms) {
        std::string out;
        for (size_t i = 0; i < terms.size(); ++i) {
            if (i) out += ", ";
            out += expr(terms[i].expr);
            if (!terms[i].direction.empty()) out += " " + terms[i].direction;
            if (!terms[i].nulls.empty()) out += " " + terms[i].nulls;
        }
        return out;
    }

    std::string window(const WindowSpec& w) {
        std::string out = "(";
        std::string sep;
        if (!w.base_name.empty()) {
            out += ident(w.base_name, QuoteStyle::None);
            sep = " ";
        }
        if (!w.partition_by.empty()) {
            out += sep + "PARTITION BY " + expr_list(w.partition_by);
            sep = " ";
        }
        if (!w.order_by.empty()) {
            out += sep + "ORDER BY " + order_terms(w.order_by);
            sep = " ";
        }
        if (!w.frame.empty()) out += sep + w.frame;
        return out + ")";
    }

    std::string table_ref(const TableRef& t) {
        std::string out;
        switch (t.kind) {
            case TableRef::Kind::Table:
            case TableRef::Kind::Function:
                if (!t.schema.empty()) out = ident(t.schema, QuoteStyle::None) + ".";
                out += ident(t.name, t.name_quote);
                if (t.kind == TableRef::Kind::Function) out += "(" + expr_list(t.args) + ")";
                break;
            case TableRef::Kind::Subquery: out = "(" + select(*t.subquery) + ")"; break;
            case TableRef::Kind::Join: out = "(" + from(*t.join) + ")"; break;
        }
        bool drop_alias = opts_.resolve_aliases && t.kind == TableRef::Kind::Table;
        if (!t.alias.empty() && !drop_alias) out += " AS " + ident(t.alias, QuoteStyle::None);
        return out;
    }

    std::string from(const FromClause& f) {
        std::string out = table_ref(f.first);
        for (const auto& j : f.joins) {
            if (j.op == ",") out += ", ";
            else out += " " + j.op + " ";
            out += table_ref(j.right);
            if (j.on) out += " ON " + expr(*j.on);
            if (!j.using_columns.empty()) {
                out += " USING (";
                for (size_t i = 0; i < j.using_columns.size(); ++i) {
                    if (i) out += ", ";
                    out += ident(j.using_columns[i], QuoteStyle::None);
                }
                out += ")";
            }
        }
        return out;
    }

public:
    // Predicate collection shares the printer's alias scopes.
    void collect_predicates(const Select& s, std::vector<std::string>& out) {
        for (const auto& c : s.ctes) collect_predicates(*c.select, out);
        collect_core_predicates(s.core, out);
        for (const auto& p : s.compounds) collect_core_predicates(p.core, out);
    }

private:
    void split_conjuncts(const Expr& e, std::vector<const Expr*>& out) {
        if (e.kind == ExprKind::Binary && e.text == "AND") {
            split_conjuncts(e.args[0], out);
            split_conjuncts(e.args[1], out);
        } else if (e.kind == ExprKind::Paren && e.args.size() == 1 &&
                   e.args[0].kind == ExprKind::Binary && e.args[0].text == "AND") {
            split_conjuncts(e.args[0], out);
        } else {
            out.push_back(&e);
        }
    }

    void nested_selects(const Expr& e, std::vector<const Select*>& out) {
        if (e.subquery) out.push_back(e.subquery.get());
        for (const auto& a : e.args) nested_selects(a, out);
        if (e.filter) nested_selects(*e.filter, out);
    }

    void from_predicates(const FromClause& f, std::vector<const Expr*>& conj,
                         std::vector<const Select*>& nested) {
        auto visit = [&](const TableRef& t) {
            if (t.kind == TableRef::Kind::Subquery) nested.push_back(t.subquery.get());
            if (t.kind == TableRef::Kind::Join) from_predicates(*t.join, conj, nested);
        };
        visit(f.first);
        for (const auto& j : f.joins) {
            visit(j.right);
            if (j.on) split_conjuncts(*j.on, conj);
        }
    }

    void collect_core_predicates(const SelectCore& c, std::vector<std::string>& out) {
        if (c.is_values) return;
        push_scope(c);
        std::vector<const Expr*> conj;
        std::vector<const Select*> nested;
        if (c.from) from_predicates(*c.from, conj, nested);
        if (c.where) split_conjuncts(*c.where, conj);
        if (c.having) split_conjuncts(*c.having, conj);
        for (const Expr* e : conj) {
            std::string text = expr(*e);
            if (std::find(out.begin(), out.end(), text) == out.end()) out.push_back(std::move(text));
            nested_selects(*e, nested);
        }
        for (const auto& rc : c.columns) nested_selects(rc.expr, nested);
        for (const Select* s : nested) collect_predicates(*s, out);
        pop_scope();
    }
};

void collect_tables(const Select& s, std::set<std::string> ctes, std::set<std::string>& out);

void collect_expr_tables(const Expr& e, const std::set<std::string>& ctes, std::set<std::string>& out) {
    if (e.subquery) collect_tables(*e.subquery, ctes, out);
    for (const auto& a : e.args) collect_expr_tables(a, ctes, out);
    if (e.filter) collect_expr_tables(*e.filter, ctes, out);
}

void collect_from_tables(const FromClause& f, const std::set<std::string>& ctes,
                         std::set<std::string>& out) {
    auto visit = [&](const TableRef& t) {
        switch (t.kind) {
            case TableRef::Kind::Table: {
                auto name = util::to_lower(t.name);
                if (!ctes.count(name)) out.insert(name);
                break;
            }
            case TableRef::Kind::Subquery: collect_tables(*t.subquery, ctes, out); break;
            case TableRef::Kind::Join: collect_from_tables(*t.join, ctes, out); break;
            case TableRef::Kind::Function: break;
        }
    };
    visit(f.first);
    for (const auto& j : f.joins) {
        visit(j.right);
        if (j.on) collect_expr_tables(*j.on, ctes, out);
    }
}

void collect_core_tables(const SelectCore& c, const std::set<std::string>& ctes,
                         std::set<std::string>& out) {
    if (c.from) collect_from_tables(*c.from, ctes, out);
    for (const auto& rc : c.columns) collect_expr_tables(rc.expr, ctes, out);
    if (c.where) collect_expr_tables(*c.where, ctes, out);
    for (const auto& g : c.group_by) collect_expr_tables(g, ctes, out);
    if (c.having) collect_expr_tables(*c.having, ctes, out);
}

void collect_tables(const Select& s, std::set<std::string> ctes, std::set<std::string>& out) {
    for (const auto& c : s.ctes) {
        ctes.insert(util::to_lower(c.name));
        collect_tables(*c.select, ctes, out);
    }
    collect_core_tables(s.core, ctes, out);
    for (const auto& p : s.compounds) collect_core_tables(p.core, ctes, out);
    for (const auto& o : s.order_by) collect_expr_tables(o.expr, ctes, out);
}

}  // namespace

std::string to_sql(const Select& select, PrintOptions opts) { return Printer(opts).select(select); }

std::string to_sql(const Expr& expr, PrintOptions opts) { return Printer(opts).expr(expr); }

std::string normalized(const Select& select) {
    return to_sql(select, PrintOptions{.fold_identifiers = true, .resolve_aliases = true});
}

std::vector<std::string> predicates(const Select& select) {
    std::vector<std::string> out;
    Printer p(PrintOptions{.fold_identifiers = true, .resolve_aliases = true});
    p.collect_predicates(select, out);
    return out;
}

std::vector<std::string> referenced_tables(const Select& select) {
    std::set<std::string> out;
    collect_tables(select, {}, out);
    return {out.begin(), out.end()};
}

}  // namespace mci::sql
