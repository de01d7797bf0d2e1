#include <cctype>

#include "mci/sql/parser.hpp"

namespace mci::sql {

namespace {

bool is_word_start(unsigned char c) { return std::isalpha(c) || c == '_' || c >= 0x80; }
bool is_word_char(unsigned char c) { return std::isalnum(c) || c == '_' || c == '$' || c >= 0x80; }

}  // namespace

std::vector<Token> tokenize(std::string_view sql) {
    std::vector<Token> out;
    size_t i = 0;
    const size_t n = sql.size();
    auto at = [&](size_t k) -> unsigned char { return k < n ? static_cast<unsigned char>(sql[k]) : 0; };

    while (i < n) {
        unsigned char c = at(i);
        if (std::isspace(c)) {
            ++i;
            continue;
        }
        if (c == '-' && at(i + 1) == '-') {
            while (i < n && sql[i] != '\n') ++i;
            continue;
        }
        if (c == '/' && at(i + 1) == '*') {
            size_t end = sql.find("*/", i + 2);
            if (end == std::string_view::npos) throw ParseError("unterminated comment", i);
            i = end + 2;
            continue;
        }

        Token tok;
        tok.offset = i;

        if ((c == 'x' || c == 'X') && at(i + 1) == '\'') {
            size_t end = sql.find('\'', i + 2);
            if (end == std::string_view::npos) throw ParseError("unterminated blob literal", i);
            tok.kind = TokenKind::Blob;
            tok.text = std::string(sql.substr(i, end + 1 - i));
            tok.value = tok.text;
            i = end + 1;
        } else if (c == '\'' || c == '"' || c == '`') {
            char q = static_cast<char>(c);
            std::string value;
            size_t k = i + 1;
            bool closed = false;
            while (k < n) {
                if (sql[k] == q) {
                    if (k + 1 < n && sql[k + 1] == q) {
                        value.push_back(q);
                        k += 2;
                        continue;
                    }
                    closed = true;
                    break;
                }
                value.push_back(sql[k++]);
            }
            if (!closed) throw ParseError("unterminated quoted token", i);
            tok.text = std::string(sql.substr(i, k + 1 - i));
            tok.value = std::move(value);
            if (q == '\'') {
                tok.kind = TokenKind::String;
            } else {
                tok.kind = TokenKind::QuotedIdent;
                tok.quote = q == '"' ? QuoteStyle::Double : QuoteStyle::Backtick;
            }
            i = k + 1;
        } else if (c == '[') {
            size_t end = sql.find(']', i + 1);
            if (end == std::string_view::npos) throw ParseError("unterminated bracket identifier", i);
            tok.kind = TokenKind::QuotedIdent;
            tok.quote = QuoteStyle::Bracket;
            tok.text = std::string(sql.substr(i, end + 1 - i));
            tok.value = std::string(sql.substr(i + 1, end - i - 1));
            i = end + 1;
        } else if (std::isdigit(c) || (c == '.' && std::isdigit(at(i + 1)))) {
            size_t k = i;
            if (c == '0' && (at(i + 1) == 'x' || at(i + 1) == 'X')) {
                k += 2;
                while (std::isxdigit(at(k))) ++k;
            } else {
                while (std::isdigit(at(k))) ++k;
                if (at(k) == '.') {
                    ++k;
                    while (std::isdigit(at(k))) ++k;
                }
                if (at(k) == 'e' || at(k) == 'E') {
                    size_t e = k + 1;
                    if (at(e) == '+' || at(e) == '-') ++e;
                    if (std::isdigit(at(e))) {
                        k = e;
                        while (std::isdigit(at(k))) ++k;
                    }
                }
            }
            if (is_word_start(at(k))) throw ParseError("malformed number", i);
            tok.kind = TokenKind::Number;
            tok.text = std::string(sql.substr(i, k - i));
            tok.value = tok.text;
            i = k;
        } else if (c == '?' || c == ':' || c == '@' || c == '$') {
            size_t k = i + 1;
            while (is_word_char(at(k))) ++k;
            if (c != '?' && k == i + 1) throw ParseError("malformed parameter", i);
            tok.kind = TokenKind::Parameter;
            tok.text = std::string(sql.substr(i, k - i));
            tok.value = tok.text;
            i = k;
        } else if (is_word_start(c)) {
            size_t k = i;
            while (is_word_char(at(k))) ++k;
            tok.kind = TokenKind::Word;
            tok.text = std::string(sql.substr(i, k - i));
            tok.value = tok.text;
            i = k;
        } else {
            static constexpr std::string_view three[] = {"->>"};
            static constexpr std::string_view two[] = {"||", "<=", ">=", "<>", "!=", "==",
                                                       "<<", ">>", "->"};
            tok.kind = TokenKind::Symbol;
            bool matched = false;
            for (auto s : three) {
                if (sql.substr(i, 3) == s) {
                    tok.text = std::string(s);
                    matched = true;
                }
            }
            if (!matched) {
                for (auto s : two) {
                    if (sql.substr(i, 2) == s) {
                        tok.text = std::string(s);
                        matched = true;
                        break;
                    }
                }
            }
            if (!matched) {
                static constexpr std::string_view singles = "(),.;+-*/%<>=&|~";
                if (singles.find(static_cast<char>(c)) == std::string_view::npos)
                    throw ParseError(std::string("unexpected character '") + static_cast<char>(c) + "'",
                                     i);
                tok.text = std::string(1, static_cast<char>(c));
            }
            tok.value = tok.text;
            i += tok.text.size();
        }
        out.push_back(std::move(tok));
    }
    Token end;
    end.kind = TokenKind::End;
    end.offset = n;
    out.push_back(std::move(end));
    return out;
}

}  // namespace mci::sql
