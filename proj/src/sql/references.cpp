#include "mci/sql/references.hpp"

#include <map>
#include <memory>

#include "mci/sql/parser.hpp"
#include "mci/util.hpp"

namespace mci::sql {

namespace {

struct Source {
    std::string name;                      // alias or table name, lower-case
    const db::TableDef* table = nullptr;   // base table
    std::vector<std::string> columns;      // derived output columns, lower-case
    bool open = false;                     // derived source with unknown columns

    bool has(std::string_view col) const {
        if (table) return table->find_column(col) != nullptr;
        if (open) return true;
        std::string key = util::to_lower(col);
        for (const auto& c : columns)
            if (c == key) return true;
        return false;
    }
};

struct Scope {
    const Scope* parent = nullptr;
    std::vector<Source> sources;

    const Source* find(std::string_view name) const {
        std::string key = util::to_lower(name);
        for (const auto& s : sources)
            if (s.name == key) return &s;
        return nullptr;
    }
};

using CteEnv = std::map<std::string, std::shared_ptr<Source>>;

class Resolver {
public:
    explicit Resolver(const db::RawSchema& schema) : schema_(schema) {}

    ColumnSet out;

    void select(const Select& s, const Scope* parent, CteEnv env) {
        for (const auto& cte : s.ctes) {
            auto src = std::make_shared<Source>();
            src->name = util::to_lower(cte.name);
            if (!cte.columns.empty()) {
                for (const auto& c : cte.columns) src->columns.push_back(util::to_lower(c));
            } else {
                src->open = true;
            }
            if (s.recursive) env[src->name] = src;
            select(*cte.select, parent, env);
            if (cte.columns.empty()) fill_output_columns(*src, *cte.select);
            env[src->name] = src;
        }
        Scope first = core(s.core, parent, env);
        for (const auto& part : s.compounds) core(part.core, parent, env);
        // ORDER BY after a compound refers to output columns; resolving
        // against the first core still finds the base columns they name.
        for (const auto& o : s.order_by) expr(o.expr, first, env);
        if (s.limit) expr(*s.limit, first, env);
        if (s.offset) expr(*s.offset, first, env);
    }

private:
    const db::RawSchema& schema_;

    void add(const db::TableDef& t, std::string_view column) {
        if (const auto* c = t.find_column(column)) out.insert({t.name, c->name});
    }

    static void fill_output_columns(Source& src, const Select& s) {
        std::vector<std::string> cols;
        for (const auto& rc : s.core.columns) {
            if (!rc.alias.empty()) {
                cols.push_back(util::to_lower(rc.alias));
            } else if (rc.expr.kind == ExprKind::Column) {
                cols.push_back(util::to_lower(rc.expr.name));
            } else if (rc.expr.kind == ExprKind::Star) {
                return;  // leave the source open
            } else {
                cols.push_back(util::to_lower(to_sql(rc.expr)));
            }
        }
        src.columns = std::move(cols);
        src.open = false;
    }

    Source table_source(const TableRef& t, const Scope* parent, const CteEnv& env) {
        Source src;
        switch (t.kind) {
            case TableRef::Kind::Table: {
                std::string key = util::to_lower(t.name);
                auto cte = t.schema.empty() ? env.find(key) : env.end();
                if (cte != env.end()) {
                    src = *cte->second;
                } else if (const auto* def = schema_.find_table(t.name)) {
                    src.table = def;
                } else {
                    src.open = true;
                }
                src.name = t.alias.empty() ? key : util::to_lower(t.alias);
                break;
            }
            case TableRef::Kind::Subquery:
                select(*t.subquery, parent, env);
                fill_output_columns(src, *t.subquery);
                if (src.columns.empty()) src.open = true;
                src.name = util::to_lower(t.alias);
                break;
            case TableRef::Kind::Function:
                for (const auto& a : t.args) expr(a, parent ? *parent : Scope{}, env);
                src.open = true;
                src.name = util::to_lower(t.alias.empty() ? t.name : t.alias);
                break;
            case TableRef::Kind::Join:
                break;
        }
        return src;
    }

    // Adds the sources of a FROM clause to scope, resolving join constraints
    // once both sides are visible.
    void from(const FromClause& f, Scope& scope, const CteEnv& env) {
        add_ref(f.first, scope, env);
        for (const auto& j : f.joins) {
            size_t left_end = scope.sources.size();
            add_ref(j.right, scope, env);
            for (const auto& col : j.using_columns) {
                for (const auto& s : scope.sources)
                    if (s.table) add(*s.table, col);
            }
            if (j.op.find("NATURAL") != std::string::npos) natural(scope, left_end);
            if (j.on) expr(*j.on, scope, env);
        }
    }

    void add_ref(const TableRef& t, Scope& scope, const CteEnv& env) {
        if (t.kind == TableRef::Kind::Join) {
            from(*t.join, scope, env);
            return;
        }
        scope.sources.push_back(table_source(t, scope.parent, env));
    }

    void natural(const Scope& scope, size_t left_end) {
        for (size_t r = left_end; r < scope.sources.size(); ++r) {
            const auto* right = scope.sources[r].table;
            if (!right) continue;
            for (const auto& col : right->columns) {
                for (size_t l = 0; l < left_end; ++l) {
                    const auto* left = scope.sources[l].table;
                    if (left && left->find_column(col.name)) {
                        add(*left, col.name);
                        add(*right, col.name);
                    }
                }
            }
        }
    }

    Scope core(const SelectCore& c, const Scope* parent, const CteEnv& env) {
        Scope scope;
        scope.parent = parent;
        if (c.is_values) {
            for (const auto& row : c.values)
                for (const auto& e : row) expr(e, scope, env);
            return scope;
        }
        if (c.from) from(*c.from, scope, env);
        for (const auto& rc : c.columns) {
            if (rc.expr.kind == ExprKind::Star) star(rc.expr, scope);
            else expr(rc.expr, scope, env);
        }
        if (c.where) expr(*c.where, scope, env);
        for (const auto& g : c.group_by) expr(g, scope, env);
        if (c.having) expr(*c.having, scope, env);
        for (const auto& w : c.windows) window(w.spec, scope, env);
        return scope;
    }

    void star(const Expr& e, const Scope& scope) {
        for (const auto& s : scope.sources) {
            if (!s.table) continue;
            if (!e.qualifier.empty() && s.name != util::to_lower(e.qualifier)) continue;
            for (const auto& col : s.table->columns) out.insert({s.table->name, col.name});
        }
    }

    void window(const WindowSpec& w, const Scope& scope, const CteEnv& env) {
        for (const auto& p : w.partition_by) expr(p, scope, env);
        for (const auto& o : w.order_by) expr(o.expr, scope, env);
    }

    void column(const Expr& e, const Scope& scope) {
        if (!e.qualifier.empty()) {
            for (const Scope* s = &scope; s; s = s->parent) {
                if (const auto* src = s->find(e.qualifier)) {
                    if (src->table) add(*src->table, e.name);
                    return;
                }
            }
            if (const auto* def = schema_.find_table(e.qualifier)) add(*def, e.name);
            return;
        }
        for (const Scope* s = &scope; s; s = s->parent) {
            bool matched = false;
            for (const auto& src : s->sources) {
                if (!src.has(e.name)) continue;
                matched = true;
                if (src.table) add(*src.table, e.name);
            }
            if (matched) return;
        }
    }

    void expr(const Expr& e, const Scope& scope, const CteEnv& env) {
        switch (e.kind) {
            case ExprKind::Column: column(e, scope); return;
            case ExprKind::Star: return;  // COUNT(*)
            default: break;
        }
        for (const auto& a : e.args) expr(a, scope, env);
        if (e.filter) expr(*e.filter, scope, env);
        if (e.window) window(*e.window, scope, env);
        if (e.subquery) select(*e.subquery, &scope, env);
    }
};

}  // namespace

ColumnSet extract_references(const Select& select, const db::RawSchema& schema) {
    Resolver r(schema);
    r.select(select, nullptr, {});
    return std::move(r.out);
}

ColumnSet extract_references(std::string_view sql, const db::RawSchema& schema) {
    return extract_references(parse_select(sql), schema);
}

LinkingScore linking_score(const ColumnSet& gold, const ColumnSet& predicted) {
    size_t hit = 0;
    for (const auto& c : predicted) hit += gold.count(c);
    LinkingScore s;
    s.precision = predicted.empty() ? 1.0 : static_cast<double>(hit) / predicted.size();
    s.recall = gold.empty() ? 1.0 : static_cast<double>(hit) / gold.size();
    s.f1 = (s.precision + s.recall) == 0.0 ? 0.0 : 2 * s.precision * s.recall / (s.precision + s.recall);
    return s;
}

}  // namespace mci::sql
