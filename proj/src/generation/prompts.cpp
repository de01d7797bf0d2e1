#include <algorithm>
#include <regex>

#include "mci/generation.hpp"
#include "mci/util.hpp"

namespace mci::gen {

std::string to_string(Verdict v) { return v == Verdict::Yes ? "YES" : "NO"; }
std::string to_string(Branch b) { return b == Branch::Polish ? "polish" : "rewrite"; }

namespace {

const char* kOutputFormat =
    "For step 1, write your analysis, then the verdict YES or NO on its own line, then [STOP]. "
    "In later steps, put every SQL query you want to execute in a ```sql code block and end the reply with "
    "[STOP]; the system returns its execution result. To look up column dependencies, write a line "
    "`DEPENDENCY: table.column` and end the reply with [STOP]. When the result is satisfactory, give the final "
    "query in a ```final-sql code block.";

}  // namespace

std::string generation_prompt(const std::string& question, const std::string& evidence, const std::string& schema_f,
                              const std::string& sql_d, const std::vector<FewShotCase>& cases) {
    std::string p =
        "# Goal: Follow the STEP, generate an executable SQL that fully satisfies the user question.\n"
        "# STEP:\n"
        "1. Analyze the Draft SQL and explain what this query is intended to do. Determine whether it is suitable "
        "to answer the question. Answer only \"YES\" or \"NO\" after careful thinking.\n"
        "2.1. If your answer is \"NO\", rewrite the executable SQL query to correctly answers the question.\n"
        "2.2. If your answer is \"YES\", check and correct any minor errors existing in Draft SQL.\n"
        "** VERY IMPORTANT: After completing step 1, STOP generation. Wait for the system to provide additional "
        "instructions.**\n"
        "# Database Schema: " +
        schema_f + "\n";
    if (!cases.empty()) {
        p += "# Similar Cases:\n";
        for (const auto& c : cases) p += "Question: " + c.question + "\nSQL: " + c.sql + "\n";
    }
    p += std::string("# Output Format: ") + kOutputFormat + "\n";
    p += "Question: " + question + "\n";
    if (!util::trim(evidence).empty()) p += "Evidence: " + evidence + "\n";
    p += "Draft SQL: " + sql_d;
    return p;
}

std::string polish_instruction() {
    return "Your answer is \"YES\". Check and correct any minor errors existing in the Draft SQL, such as the use "
           "of DISTINCT and the handling of NULL values. Use `DEPENDENCY: table.column` lines to check whether "
           "DISTINCT is required. Execute the revised SQL in a ```sql code block to validate it, then end the reply "
           "with [STOP].";
}

std::string rewrite_instruction() {
    return "Your answer is \"NO\". Rewrite the SQL query. First decompose the question into sub-questions written "
           "as a numbered list (1., 2., ...). Then solve the sub-questions in order: write one subquery per reply "
           "in a ```sql code block and end the reply with [STOP] to receive its execution result. Combine the "
           "subqueries progressively and give the final SQL query in a ```final-sql code block.";
}

std::string verdict_reprompt() { return "Answer only \"YES\" or \"NO\"."; }

std::string continue_instruction() {
    return "Continue. Execute your SQL in a ```sql code block, or give the final query in a ```final-sql code "
           "block if the result is satisfactory.";
}

std::string next_subquestion_instruction() {
    return "Proceed to the next sub-question. If all sub-questions are solved, give the combined query in a "
           "```final-sql code block.";
}

std::optional<Verdict> parse_verdict(std::string_view text) {
    static const std::regex token(R"((^|[^A-Za-z0-9_])(YES|NO)(?=$|[^A-Za-z0-9_]))");
    std::optional<Verdict> last;
    std::string s(text);
    for (auto it = std::sregex_iterator(s.begin(), s.end(), token); it != std::sregex_iterator(); ++it)
        last = (*it)[2] == "YES" ? Verdict::Yes : Verdict::No;
    return last;
}

std::string correction_instruction(const db::ExecutionOutcome& outcome, const std::string& sql,
                                   std::size_t feedback_rows) {
    switch (outcome.state) {
        case db::ExecState::Success: {
            const auto& rs = *outcome.result;
            std::size_t total = std::max(rs.total_row_count, rs.rows.size());
            std::size_t shown = std::min({feedback_rows, total, rs.rows.size()});
            std::span<const db::Row> head(rs.rows.data(), shown);
            return "The SQL query " + sql + " returns `Success`.\n" + "The execution returned " +
                   std::to_string(total) + " rows.\n" + "The " + std::to_string(shown) + "/" +
                   std::to_string(total) + " rows are: " + db::python_repr(head);
        }
        case db::ExecState::NoneValued:
            return "The SQL query " + sql +
                   " returns `None`.\n"
                   "You should consider whether there is a potential issue below, and adjust your answer to return "
                   "valid results.\n"
                   "(1) **Logical error:** Following the SQL skeleton provided in the example, you should try "
                   "another reasoning path.\n"
                   "(2) **Exception:** Do not introduce additional filters to exclude outliers in order to avoid "
                   "returning `None` result, unless the question explicitly instructs you to do so.";
        case db::ExecState::Empty:
            return "The SQL query " + sql +
                   " returns `Empty`.\n"
                   "You should consider whether there is a potential issue below, and adjust your answer to return "
                   "valid results.\n"
                   "(1) Data Format Inconsistency: The values in the SQL query must be converted to the same format "
                   "as the corresponding values in the database.\n"
                   "(2) Value Mismatch: First, use case-insensitive fuzzy matching (e.g., `LOWER`,`LIKE`) to "
                   "broaden the search and retrieve a subset of potential values. Then, within this subset, use a "
                   "strict method (e.g., `=`) to identify the single correct value that best matches the user's "
                   "intent.\n"
                   "(3) Domain Mismatch: Ensure that the joined columns or compared columns share the same semantic "
                   "domain.";
        case db::ExecState::Failure:
            break;
    }
    return "The SQL query " + sql +
           " returns `Failed`.\n"
           "You should fix it based on the message below.\n"
           "Error Message: " +
           outcome.error_message.value_or("");
}

bool RuleSet::empty() const {
    return condition_rules.empty() && table_rules.empty() && negative_constraints.empty() && notes.empty();
}

std::string render_rules(const RuleSet& rules) {
    std::string out;
    auto section = [&](const char* title, const std::vector<std::string>& items) {
        if (items.empty()) return;
        out += title;
        out += "\n";
        for (const auto& i : items) out += "- " + i + "\n";
    };
    section("Condition rules (keep these filters):", rules.condition_rules);
    section("Table rules (these tables are required):", rules.table_rules);
    section("Negative constraints (remove these conditions):", rules.negative_constraints);
    section("Notes:", rules.notes);
    if (out.empty()) return "None.";
    out.pop_back();
    return out;
}

}  // namespace mci::gen
