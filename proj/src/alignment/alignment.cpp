#include "mci/alignment.hpp"

#include <algorithm>
#include <set>

#include <json.hpp>

#include "mci/sql/parser.hpp"
#include "mci/util.hpp"

namespace mci::align {

namespace assets {
extern const std::string_view kFunctionRules;
extern const std::string_view kOutputExamples;
}  // namespace assets

namespace {

const char* kOutputFormat = "Return the complete SQL query in a single ```sql code block.";

std::vector<OutputExample> parse_examples(std::string_view text, const std::string& origin) {
    try {
        auto doc = nlohmann::json::parse(text);
        std::vector<OutputExample> out;
        for (const auto& e : doc) {
            out.push_back({e.at("question").get<std::string>(), e.at("correct_sql").get<std::string>(),
                           e.at("incorrect_sql").get<std::string>(), e.at("explanation").get<std::string>()});
        }
        return out;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad output-alignment example bank " + origin + ": " + e.what());
    }
}

bool fails(db::Database* db, const std::string& sql) {
    return db && db->execute(sql).state == db::ExecState::Failure;
}

}  // namespace

std::vector<std::string> parse_rule_catalog(std::string_view text) {
    std::vector<std::string> out;
    for (const auto& line : util::split_lines(text)) {
        auto t = util::trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(t);
    }
    return out;
}

std::vector<std::string> default_rule_catalog() { return parse_rule_catalog(assets::kFunctionRules); }

std::vector<std::string> load_rule_catalog(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw FileNotFound("rule catalog not found: " + path.string());
    return parse_rule_catalog(util::read_file(path));
}

std::vector<OutputExample> default_example_bank() { return parse_examples(assets::kOutputExamples, "(built-in)"); }

std::vector<OutputExample> load_example_bank(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw FileNotFound("example bank not found: " + path.string());
    return parse_examples(util::read_file(path), path.string());
}

std::string function_alignment_prompt(const std::string& sql_g, const gen::RuleSet& rules,
                                      const std::string& question, const std::vector<std::string>& catalog) {
    std::string p =
        "# Goal: Your task is to perform a preference check on the given SQL query. You must strictly follow both "
        "the given rules and the check rules below, and convert the given SQL into a compliant, executable SQL "
        "query.\n"
        "# Given Rules: " +
        gen::render_rules(rules) + "\n# Check Rules:\n";
    for (std::size_t i = 0; i < catalog.size(); ++i) p += "(" + std::to_string(i + 1) + ") " + catalog[i] + "\n";
    p += std::string("# Output Format: ") + kOutputFormat + "\n";
    p += "# Given SQL: " + sql_g + "\n";
    p += "# Question: " + question;
    return p;
}

std::string output_alignment_prompt(const std::string& sql_f, const std::string& question,
                                    const std::vector<OutputExample>& examples) {
    std::string p =
        "# Goal: Your task is to perform a column check on the given SQL query.\n"
        "# STEP:\n"
        "(1) Extract the explicit content that the user needs to return as the **minimum** requirement in the "
        "question. Omitting identifier columns is acceptable if not explicitly requested.\n"
        "(2) Modify the SELECT clause in the SQL query to return only the requested content.\n"
        "# Important Note:\n"
        "**You are only allowed to delete, add, or reorder the selected columns. Other operations are strictly "
        "prohibited, even if the logic in the SQL might be incorrect.**\n"
        "# Examples:\n";
    for (std::size_t i = 0; i < examples.size(); ++i) {
        const auto& e = examples[i];
        p += "Example " + std::to_string(i + 1) + ":\nQuestion: " + e.question + "\nCorrect SQL: " + e.correct_sql +
             "\nIncorrect SQL: " + e.incorrect_sql + "\nExplanation: " + e.explanation + "\n";
    }
    p += std::string("# Output Format: ") + kOutputFormat + "\n";
    p += "# Given SQL: " + sql_f + "\n";
    p += "# Question: " + question;
    return p;
}

AlignResult align_functions(llm::Gateway& gateway, const std::string& sql_g, const gen::RuleSet& rules,
                            const std::string& question, const std::vector<std::string>& catalog,
                            db::Database* db) {
    AlignResult out{sql_g, false, {}, 0};
    std::string candidate;
    try {
        auto reply = gateway.complete({{llm::Role::User, function_alignment_prompt(sql_g, rules, question, catalog)}},
                                      0.0);
        out.output_tokens = reply.output_tokens;
        candidate = util::extract_sql(reply.text);
    } catch (const llm::GatewayError& e) {
        out.rejected = std::string("gateway error: ") + e.what();
        return out;
    }
    if (candidate == sql_g) return out;

    sql::Select parsed;
    try {
        parsed = sql::parse_select(candidate);
    } catch (const sql::ParseError& e) {
        out.rejected = std::string("unparseable: ") + e.what();
        return out;
    }
    auto preds = sql::predicates(parsed);
    auto tables = sql::referenced_tables(parsed);
    for (const auto& rule : rules.condition_rules) {
        if (std::find(preds.begin(), preds.end(), rule) == preds.end()) {
            out.rejected = "drops condition rule " + rule;
            return out;
        }
    }
    for (const auto& t : rules.table_rules) {
        if (std::find(tables.begin(), tables.end(), t) == tables.end()) {
            out.rejected = "drops table rule " + t;
            return out;
        }
    }
    if (fails(db, candidate)) {
        out.rejected = "execution failed";
        return out;
    }
    out.sql = candidate;
    out.changed = true;
    return out;
}

bool select_list_only_change(const std::string& before, const std::string& after) {
    try {
        auto a = sql::parse_select(before);
        auto b = sql::parse_select(after);
        if (a.compounds.size() != b.compounds.size()) return false;
        auto strip = [](sql::Select& s) {
            s.core.columns.clear();
            for (auto& c : s.compounds) c.core.columns.clear();
        };
        strip(a);
        strip(b);
        return sql::normalized(a) == sql::normalized(b);
    } catch (const sql::ParseError&) {
        return false;
    }
}

AlignResult align_output(llm::Gateway& gateway, const std::string& sql_f, const std::string& question,
                         const std::vector<OutputExample>& examples, db::Database* db) {
    AlignResult out{sql_f, false, {}, 0};
    std::string candidate;
    try {
        auto reply =
            gateway.complete({{llm::Role::User, output_alignment_prompt(sql_f, question, examples)}}, 0.0);
        out.output_tokens = reply.output_tokens;
        candidate = util::extract_sql(reply.text);
    } catch (const llm::GatewayError& e) {
        out.rejected = std::string("gateway error: ") + e.what();
        return out;
    }
    if (candidate == sql_f) return out;
    if (!sql::parses(candidate)) {
        out.rejected = "unparseable";
        return out;
    }
    if (!select_list_only_change(sql_f, candidate)) {
        out.rejected = "changes outside the SELECT list";
        return out;
    }
    if (fails(db, candidate)) {
        out.rejected = "execution failed";
        return out;
    }
    out.sql = candidate;
    out.changed = true;
    return out;
}

}  // namespace mci::align
