#include "mci/sql/parser.hpp"

#include <array>
#include <algorithm>

#include "mci/util.hpp"

namespace mci::sql {

namespace {

// Words that never start an identifier or an implicit alias.
constexpr std::array kReserved = {
    "ALL",     "AND",    "AS",     "ASC",       "BETWEEN", "BY",      "CASE",   "CAST",
    "COLLATE", "CROSS",  "DESC",   "DISTINCT",  "ELSE",    "END",     "ESCAPE", "EXCEPT",
    "EXISTS",  "FROM",   "FULL",   "GLOB",      "GROUP",   "HAVING",  "IN",     "INNER",
    "INTERSECT", "IS",   "ISNULL", "JOIN",      "LEFT",    "LIKE",    "LIMIT",  "MATCH",
    "NATURAL", "NOT",    "NOTNULL", "NULL",     "OFFSET",  "ON",      "OR",     "ORDER",
    "OUTER",   "REGEXP", "RIGHT",  "SELECT",    "THEN",    "UNION",   "USING",  "VALUES",
    "WHEN",    "WHERE",  "WINDOW", "WITH",
};

bool is_reserved(std::string_view word) {
    return std::any_of(kReserved.begin(), kReserved.end(),
                       [&](const char* r) { return util::iequals(word, r); });
}

class Parser {
public:
    explicit Parser(std::string_view sql) : toks_(tokenize(sql)) {}

    Select statement() {
        Select s = select_stmt();
        while (accept_sym(";")) {
        }
        if (peek().kind != TokenKind::End) fail("unexpected trailing input '" + peek().text + "'");
        return s;
    }

private:
    std::vector<Token> toks_;
    size_t pos_ = 0;

    const Token& peek(size_t k = 0) const {
        return toks_[std::min(pos_ + k, toks_.size() - 1)];
    }
    const Token& next() {
        const Token& t = toks_[pos_];
        if (pos_ + 1 < toks_.size()) ++pos_;
        return t;
    }
    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, peek().offset); }

    bool is_kw(const Token& t, std::string_view kw) const {
        return t.kind == TokenKind::Word && util::iequals(t.text, kw);
    }
    bool peek_kw(std::string_view kw, size_t k = 0) const { return is_kw(peek(k), kw); }
    bool accept_kw(std::string_view kw) {
        if (peek_kw(kw)) {
            next();
            return true;
        }
        return false;
    }
    void expect_kw(std::string_view kw) {
        if (!accept_kw(kw)) fail("expected " + std::string(kw) + " but found '" + peek().text + "'");
    }
    bool peek_sym(std::string_view s, size_t k = 0) const {
        return peek(k).kind == TokenKind::Symbol && peek(k).text == s;
    }
    bool accept_sym(std::string_view s) {
        if (peek_sym(s)) {
            next();
            return true;
        }
        return false;
    }
    void expect_sym(std::string_view s) {
        if (!accept_sym(s)) fail("expected '" + std::string(s) + "' but found '" + peek().text + "'");
    }

    bool peek_identifier(size_t k = 0) const {
        const Token& t = peek(k);
        if (t.kind == TokenKind::QuotedIdent) return true;
        return t.kind == TokenKind::Word && !is_reserved(t.text);
    }

    std::pair<std::string, QuoteStyle> identifier() {
        if (!peek_identifier()) fail("expected identifier but found '" + peek().text + "'");
        const Token& t = next();
        return {t.value, t.quote};
    }

    bool peek_select_start(size_t k = 0) const {
        return peek_kw("SELECT", k) || peek_kw("WITH", k) || peek_kw("VALUES", k);
    }

    // ---- statements ------------------------------------------------------

    Select select_stmt() {
        Select s;
        if (accept_kw("WITH")) {
            s.recursive = accept_kw("RECURSIVE");
            do {
                CommonTableExpr cte;
                cte.name = identifier().first;
                if (accept_sym("(")) {
                    do cte.columns.push_back(identifier().first);
                    while (accept_sym(","));
                    expect_sym(")");
                }
                expect_kw("AS");
                if (accept_kw("NOT")) {
                    expect_kw("MATERIALIZED");
                    cte.materialized = "NOT MATERIALIZED";
                } else if (accept_kw("MATERIALIZED")) {
                    cte.materialized = "MATERIALIZED";
                }
                expect_sym("(");
                cte.select = std::make_shared<Select>(select_stmt());
                expect_sym(")");
                s.ctes.push_back(std::move(cte));
            } while (accept_sym(","));
        }
        s.core = select_core();
        for (;;) {
            std::string op;
            if (accept_kw("UNION")) op = accept_kw("ALL") ? "UNION ALL" : "UNION";
            else if (accept_kw("INTERSECT")) op = "INTERSECT";
            else if (accept_kw("EXCEPT")) op = "EXCEPT";
            else break;
            s.compounds.push_back({op, select_core()});
        }
        if (accept_kw("ORDER")) {
            expect_kw("BY");
            s.order_by = order_terms();
        }
        if (accept_kw("LIMIT")) {
            Expr first = expr();
            if (accept_kw("OFFSET")) {
                s.limit = std::move(first);
                s.offset = expr();
            } else if (accept_sym(",")) {
                s.offset = std::move(first);
                s.limit = expr();
            } else {
                s.limit = std::move(first);
            }
        }
        return s;
    }

    SelectCore select_core() {
        SelectCore core;
        if (accept_kw("VALUES")) {
            core.is_values = true;
            do {
                expect_sym("(");
                std::vector<Expr> row;
                do row.push_back(expr());
                while (accept_sym(","));
                expect_sym(")");
                core.values.push_back(std::move(row));
            } while (accept_sym(","));
            return core;
        }
        expect_kw("SELECT");
        if (accept_kw("DISTINCT")) core.distinct = true;
        else if (accept_kw("ALL")) core.all = true;
        do core.columns.push_back(result_column());
        while (accept_sym(","));
        if (accept_kw("FROM")) core.from = from_clause();
        if (accept_kw("WHERE")) core.where = expr();
        if (accept_kw("GROUP")) {
            expect_kw("BY");
            do core.group_by.push_back(expr());
            while (accept_sym(","));
        }
        if (accept_kw("HAVING")) core.having = expr();
        if (accept_kw("WINDOW")) {
            do {
                NamedWindow w;
                w.name = identifier().first;
                expect_kw("AS");
                w.spec = window_spec_body();
                core.windows.push_back(std::move(w));
            } while (accept_sym(","));
        }
        return core;
    }

    ResultColumn result_column() {
        ResultColumn rc;
        if (accept_sym("*")) {
            rc.expr.kind = ExprKind::Star;
            return rc;
        }
        if (peek_identifier() && peek_sym(".", 1) && peek_sym("*", 2)) {
            rc.expr.kind = ExprKind::Star;
            rc.expr.qualifier = next().value;
            next();
            next();
            return rc;
        }
        rc.expr = expr();
        if (accept_kw("AS")) {
            if (peek().kind == TokenKind::String) {
                rc.alias = next().value;
                rc.alias_quote = QuoteStyle::Double;
            } else {
                std::tie(rc.alias, rc.alias_quote) = identifier();
            }
        } else if (peek_identifier()) {
            std::tie(rc.alias, rc.alias_quote) = identifier();
        }
        return rc;
    }

    std::vector<OrderTerm> order_terms() {
        std::vector<OrderTerm> terms;
        do {
            OrderTerm t;
            t.expr = expr();
            if (accept_kw("ASC")) t.direction = "ASC";
            else if (accept_kw("DESC")) t.direction = "DESC";
            if (peek_kw("NULLS")) {
                next();
                if (accept_kw("FIRST")) t.nulls = "NULLS FIRST";
                else if (accept_kw("LAST")) t.nulls = "NULLS LAST";
                else fail("expected FIRST or LAST");
            }
            terms.push_back(std::move(t));
        } while (accept_sym(","));
        return terms;
    }

    // ---- FROM ------------------------------------------------------------

    FromClause from_clause() {
        FromClause f;
        f.first = table_or_subquery();
        for (;;) {
            JoinClause j;
            if (accept_sym(",")) {
                j.op = ",";
            } else {
                std::string op;
                if (accept_kw("NATURAL")) op = "NATURAL ";
                if (accept_kw("LEFT")) op += accept_kw("OUTER") ? "LEFT OUTER " : "LEFT ";
                else if (accept_kw("RIGHT")) op += accept_kw("OUTER") ? "RIGHT OUTER " : "RIGHT ";
                else if (accept_kw("FULL")) op += accept_kw("OUTER") ? "FULL OUTER " : "FULL ";
                else if (accept_kw("INNER")) op += "INNER ";
                else if (accept_kw("CROSS")) op += "CROSS ";
                if (!accept_kw("JOIN")) {
                    if (!op.empty()) fail("expected JOIN");
                    break;
                }
                j.op = op + "JOIN";
            }
            j.right = table_or_subquery();
            if (accept_kw("ON")) {
                j.on = expr();
            } else if (accept_kw("USING")) {
                expect_sym("(");
                do j.using_columns.push_back(identifier().first);
                while (accept_sym(","));
                expect_sym(")");
            }
            f.joins.push_back(std::move(j));
        }
        return f;
    }

    void table_alias(TableRef& t) {
        if (accept_kw("AS")) {
            t.alias = identifier().first;
        } else if (peek_identifier()) {
            t.alias = identifier().first;
        }
    }

    TableRef table_or_subquery() {
        TableRef t;
        if (accept_sym("(")) {
            if (peek_select_start()) {
                t.kind = TableRef::Kind::Subquery;
                t.subquery = std::make_shared<Select>(select_stmt());
                expect_sym(")");
            } else {
                t.kind = TableRef::Kind::Join;
                t.join = std::make_shared<FromClause>(from_clause());
                expect_sym(")");
            }
            table_alias(t);
            return t;
        }
        auto [name, quote] = identifier();
        if (accept_sym(".")) {
            t.schema = std::move(name);
            std::tie(name, quote) = identifier();
        }
        t.name = std::move(name);
        t.name_quote = quote;
        if (accept_sym("(")) {
            t.kind = TableRef::Kind::Function;
            if (!peek_sym(")")) {
                do t.args.push_back(expr());
                while (accept_sym(","));
            }
            expect_sym(")");
        }
        table_alias(t);
        if (accept_kw("INDEXED")) {
            expect_kw("BY");
            identifier();
        } else if (peek_kw("NOT") && peek_kw("INDEXED", 1)) {
            next();
            next();
        }
        return t;
    }

    // ---- expressions -----------------------------------------------------

    Expr make(ExprKind kind, std::string text = {}) {
        Expr e;
        e.kind = kind;
        e.text = std::move(text);
        return e;
    }

    Expr binary(std::string op, Expr lhs, Expr rhs) {
        Expr e = make(ExprKind::Binary, std::move(op));
        e.args.push_back(std::move(lhs));
        e.args.push_back(std::move(rhs));
        return e;
    }

public:
    Expr expr() { return or_expr(); }

private:
    Expr or_expr() {
        Expr lhs = and_expr();
        while (accept_kw("OR")) lhs = binary("OR", std::move(lhs), and_expr());
        return lhs;
    }

    Expr and_expr() {
        Expr lhs = not_expr();
        while (accept_kw("AND")) lhs = binary("AND", std::move(lhs), not_expr());
        return lhs;
    }

    Expr not_expr() {
        if (peek_kw("NOT") && !peek_kw("NULL", 1)) {
            next();
            Expr e = make(ExprKind::Unary, "NOT");
            e.args.push_back(not_expr());
            return e;
        }
        return equality();
    }

    Expr equality() {
        Expr lhs = relational();
        for (;;) {
            if (peek_sym("=") || peek_sym("==")) {
                next();
                lhs = binary("=", std::move(lhs), relational());
            } else if (peek_sym("!=") || peek_sym("<>")) {
                next();
                lhs = binary("<>", std::move(lhs), relational());
            } else if (peek_kw("IS")) {
                next();
                std::string op = "IS";
                if (accept_kw("NOT")) op = "IS NOT";
                if (accept_kw("DISTINCT")) {
                    expect_kw("FROM");
                    op += " DISTINCT FROM";
                }
                lhs = binary(op, std::move(lhs), relational());
            } else if (peek_kw("ISNULL") || peek_kw("NOTNULL")) {
                Expr e = make(ExprKind::Postfix, util::to_upper(next().text));
                e.args.push_back(std::move(lhs));
                lhs = std::move(e);
            } else if (peek_kw("NOT") && peek_kw("NULL", 1)) {
                next();
                next();
                Expr e = make(ExprKind::Postfix, "NOTNULL");
                e.args.push_back(std::move(lhs));
                lhs = std::move(e);
            } else {
                bool negated = false;
                size_t save = pos_;
                if (accept_kw("NOT")) negated = true;
                if (accept_kw("IN")) {
                    lhs = in_rest(std::move(lhs), negated);
                } else if (peek_kw("LIKE") || peek_kw("GLOB") || peek_kw("REGEXP") ||
                           peek_kw("MATCH")) {
                    std::string op = util::to_upper(next().text);
                    Expr e = binary(op, std::move(lhs), relational());
                    e.negated = negated;
                    if (accept_kw("ESCAPE")) e.args.push_back(relational());
                    lhs = std::move(e);
                } else if (accept_kw("BETWEEN")) {
                    Expr e = make(ExprKind::Between);
                    e.negated = negated;
                    e.args.push_back(std::move(lhs));
                    e.args.push_back(relational());
                    expect_kw("AND");
                    e.args.push_back(relational());
                    lhs = std::move(e);
                } else {
                    pos_ = save;
                    break;
                }
            }
        }
        return lhs;
    }

    Expr in_rest(Expr lhs, bool negated) {
        Expr e;
        e.negated = negated;
        if (accept_sym("(")) {
            if (peek_select_start()) {
                e.kind = ExprKind::InSelect;
                e.subquery = std::make_shared<Select>(select_stmt());
            } else {
                e.kind = ExprKind::InList;
                e.args.push_back(std::move(lhs));
                if (!peek_sym(")")) {
                    do e.args.push_back(expr());
                    while (accept_sym(","));
                }
                expect_sym(")");
                return e;
            }
            expect_sym(")");
            e.args.insert(e.args.begin(), std::move(lhs));
            return e;
        }
        e.kind = ExprKind::InTable;
        auto [name, quote] = identifier();
        if (accept_sym(".")) name = identifier().first;
        e.text = name;
        e.args.push_back(std::move(lhs));
        return e;
    }

    Expr relational() {
        Expr lhs = bitwise();
        while (peek_sym("<") || peek_sym("<=") || peek_sym(">") || peek_sym(">=")) {
            std::string op = next().text;
            lhs = binary(op, std::move(lhs), bitwise());
        }
        return lhs;
    }

    Expr bitwise() {
        Expr lhs = additive();
        while (peek_sym("&") || peek_sym("|") || peek_sym("<<") || peek_sym(">>")) {
            std::string op = next().text;
            lhs = binary(op, std::move(lhs), additive());
        }
        return lhs;
    }

    Expr additive() {
        Expr lhs = multiplicative();
        while (peek_sym("+") || peek_sym("-")) {
            std::string op = next().text;
            lhs = binary(op, std::move(lhs), multiplicative());
        }
        return lhs;
    }

    Expr multiplicative() {
        Expr lhs = concat();
        while (peek_sym("*") || peek_sym("/") || peek_sym("%")) {
            std::string op = next().text;
            lhs = binary(op, std::move(lhs), concat());
        }
        return lhs;
    }

    Expr concat() {
        Expr lhs = unary();
        while (peek_sym("||") || peek_sym("->") || peek_sym("->>")) {
            std::string op = next().text;
            lhs = binary(op, std::move(lhs), unary());
        }
        return lhs;
    }

    Expr unary() {
        if (peek_sym("-") || peek_sym("+") || peek_sym("~")) {
            Expr e = make(ExprKind::Unary, next().text);
            e.args.push_back(unary());
            return e;
        }
        Expr e = primary();
        while (accept_kw("COLLATE")) {
            Expr c = make(ExprKind::Collate, identifier().first);
            c.args.push_back(std::move(e));
            e = std::move(c);
        }
        return e;
    }

    Expr primary() {
        const Token& t = peek();
        switch (t.kind) {
            case TokenKind::Number:
            case TokenKind::String:
            case TokenKind::Blob: return make(ExprKind::Literal, next().text);
            case TokenKind::Parameter: return make(ExprKind::Parameter, next().text);
            case TokenKind::End: fail("unexpected end of input");
            default: break;
        }
        if (accept_sym("(")) {
            if (peek_select_start()) {
                Expr e = make(ExprKind::Subquery);
                e.subquery = std::make_shared<Select>(select_stmt());
                expect_sym(")");
                return e;
            }
            Expr e = make(ExprKind::Paren);
            do e.args.push_back(expr());
            while (accept_sym(","));
            expect_sym(")");
            return e;
        }
        if (t.kind == TokenKind::Word) {
            std::string upper = util::to_upper(t.text);
            if (upper == "NULL" || upper == "CURRENT_DATE" || upper == "CURRENT_TIME" ||
                upper == "CURRENT_TIMESTAMP") {
                next();
                return make(ExprKind::Literal, upper);
            }
            if (upper == "CASE") return case_expr();
            if (upper == "CAST" && peek_sym("(", 1)) return cast_expr();
            if (upper == "EXISTS" && peek_sym("(", 1)) {
                next();
                next();
                Expr e = make(ExprKind::Exists);
                e.subquery = std::make_shared<Select>(select_stmt());
                expect_sym(")");
                return e;
            }
            if (upper == "RAISE" && peek_sym("(", 1)) {
                next();
                next();
                Expr e = make(ExprKind::Raise);
                std::string body;
                while (!peek_sym(")") && peek().kind != TokenKind::End) body += next().text + " ";
                expect_sym(")");
                e.text = util::trim(body);
                return e;
            }
            if (peek_sym("(", 1) && (!is_reserved(t.text) || upper == "LIKE" || upper == "GLOB" ||
                                     upper == "REGEXP" || upper == "MATCH")) {
                return function_call();
            }
        }
        if (t.kind == TokenKind::QuotedIdent || (t.kind == TokenKind::Word && !is_reserved(t.text))) {
            return column_ref();
        }
        fail("unexpected token '" + t.text + "'");
    }

    Expr column_ref() {
        Expr e = make(ExprKind::Column);
        auto [first, q1] = identifier();
        if (accept_sym(".")) {
            if (accept_sym("*")) {
                e.kind = ExprKind::Star;
                e.qualifier = std::move(first);
                return e;
            }
            auto [second, q2] = identifier();
            if (accept_sym(".")) {
                auto [third, q3] = identifier();
                e.qualifier = std::move(second);
                e.name = std::move(third);
                e.name_quote = q3;
            } else {
                e.qualifier = std::move(first);
                e.name = std::move(second);
                e.name_quote = q2;
            }
        } else {
            e.name = std::move(first);
            e.name_quote = q1;
        }
        return e;
    }

    Expr function_call() {
        Expr e = make(ExprKind::Function, next().text);
        expect_sym("(");
        if (accept_kw("DISTINCT")) e.distinct = true;
        else accept_kw("ALL");
        if (accept_sym("*")) {
            e.args.push_back(make(ExprKind::Star));
        } else if (!peek_sym(")")) {
            do e.args.push_back(expr());
            while (accept_sym(","));
            if (accept_kw("ORDER")) {  // ordered-set aggregate: group_concat(x ORDER BY y)
                expect_kw("BY");
                for (auto& t : order_terms()) e.args.push_back(std::move(t.expr));
            }
        }
        expect_sym(")");
        if (peek_kw("FILTER") && peek_sym("(", 1)) {
            next();
            next();
            expect_kw("WHERE");
            e.filter = std::make_shared<Expr>(expr());
            expect_sym(")");
        }
        if (accept_kw("OVER")) {
            if (peek_sym("(")) {
                e.window = std::make_shared<WindowSpec>(window_spec_body());
            } else {
                auto w = std::make_shared<WindowSpec>();
                w->base_name = identifier().first;
                e.window = std::move(w);
            }
        }
        return e;
    }

    WindowSpec window_spec_body() {
        WindowSpec w;
        expect_sym("(");
        if (peek_identifier() && !peek_kw("PARTITION") && !peek_kw("ROWS") && !peek_kw("RANGE") &&
            !peek_kw("GROUPS")) {
            w.base_name = identifier().first;
        }
        if (accept_kw("PARTITION")) {
            expect_kw("BY");
            do w.partition_by.push_back(expr());
            while (accept_sym(","));
        }
        if (accept_kw("ORDER")) {
            expect_kw("BY");
            w.order_by = order_terms();
        }
        if (peek_kw("ROWS") || peek_kw("RANGE") || peek_kw("GROUPS")) {
            std::string frame;
            int depth = 0;
            while (peek().kind != TokenKind::End) {
                if (peek_sym(")") && depth == 0) break;
                if (peek_sym("(")) ++depth;
                if (peek_sym(")")) --depth;
                const Token& t = next();
                if (!frame.empty()) frame += ' ';
                frame += t.kind == TokenKind::Word ? util::to_upper(t.text) : t.text;
            }
            w.frame = frame;
        }
        expect_sym(")");
        return w;
    }

    Expr case_expr() {
        expect_kw("CASE");
        Expr e = make(ExprKind::Case);
        if (!peek_kw("WHEN")) {
            e.has_base = true;
            e.args.push_back(expr());
        }
        if (!peek_kw("WHEN")) fail("expected WHEN");
        while (accept_kw("WHEN")) {
            e.args.push_back(expr());
            expect_kw("THEN");
            e.args.push_back(expr());
        }
        if (accept_kw("ELSE")) {
            e.has_else = true;
            e.args.push_back(expr());
        }
        expect_kw("END");
        return e;
    }

    Expr cast_expr() {
        next();
        expect_sym("(");
        Expr e = make(ExprKind::Cast);
        e.args.push_back(expr());
        expect_kw("AS");
        std::string type;
        while (peek().kind == TokenKind::Word || peek().kind == TokenKind::QuotedIdent) {
            if (!type.empty()) type += ' ';
            type += util::to_upper(next().value);
        }
        if (type.empty()) fail("expected type name");
        if (accept_sym("(")) {
            type += "(";
            bool first = true;
            while (!peek_sym(")")) {
                if (peek().kind == TokenKind::End) fail("unterminated type");
                const Token& t = next();
                if (t.text == ",") {
                    type += ",";
                    first = true;
                    continue;
                }
                if (!first) type += " ";
                type += t.text;
                first = false;
            }
            next();
            type += ")";
        }
        e.text = std::move(type);
        expect_sym(")");
        return e;
    }
};

}  // namespace

Select parse_select(std::string_view sql) {
    Parser p(sql);
    return p.statement();
}

bool parses(std::string_view sql) {
    try {
        parse_select(sql);
        return true;
    } catch (const ParseError&) {
        return false;
    }
}

}  // namespace mci::sql
