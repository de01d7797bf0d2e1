#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "mci/error.hpp"
#include "mci/sql/ast.hpp"

namespace mci::sql {

class ParseError : public Error {
public:
    ParseError(const std::string& message, std::size_t offset)
        : Error(message + " at offset " + std::to_string(offset)), offset_(offset) {}
    std::size_t offset() const { return offset_; }

private:
    std::size_t offset_;
};

enum class TokenKind { Word, QuotedIdent, String, Number, Blob, Parameter, Symbol, End };

struct Token {
    TokenKind kind = TokenKind::End;
    std::string text;   // raw spelling
    std::string value;  // unquoted identifier / word; same as text otherwise
    QuoteStyle quote = QuoteStyle::None;
    std::size_t offset = 0;
};

std::vector<Token> tokenize(std::string_view sql);

/// Parses exactly one SELECT/WITH statement (an optional trailing ';').
Select parse_select(std::string_view sql);

bool parses(std::string_view sql);

struct PrintOptions {
    /// Lower-case identifiers and drop quoting where unnecessary.
    bool fold_identifiers = false;
    /// Replace table aliases in column qualifiers with the aliased table name.
    bool resolve_aliases = false;
};

std::string to_sql(const Select& select, PrintOptions opts = {});
std::string to_sql(const Expr& expr, PrintOptions opts = {});

/// Canonical form used for equality checks: folded identifiers, resolved
/// aliases, literals preserved.
std::string normalized(const Select& select);

/// Top-level AND conjuncts of WHERE, HAVING and JOIN ... ON clauses in every
/// SELECT core (including subqueries and CTEs), normalised.
std::vector<std::string> predicates(const Select& select);

/// Base table names (lower-case) referenced in any FROM clause, CTE names excluded.
std::vector<std::string> referenced_tables(const Select& select);

}  // namespace mci::sql
