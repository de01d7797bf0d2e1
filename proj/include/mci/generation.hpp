#pragma once

#include <cstddef>
#include <filesystem>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "mci/dbcore.hpp"
#include "mci/llm.hpp"
#include "mci/profiler.hpp"

namespace mci::gen {

inline constexpr const char* kStopMarker = "[STOP]";
inline constexpr const char* kFinalTag = "final-sql";
inline constexpr const char* kDependencyPrefix = "DEPENDENCY:";
inline constexpr std::size_t kDefaultFeedbackRows = 5;
inline constexpr std::size_t kDefaultCaseCount = 3;

enum class Verdict { Yes, No };
enum class Branch { Polish, Rewrite };

std::string to_string(Verdict v);
std::string to_string(Branch b);

struct RuleSet {
    std::vector<std::string> condition_rules;
    std::vector<std::string> table_rules;
    std::vector<std::string> negative_constraints;
    std::vector<std::string> notes;  // model-phrased additions, advisory only

    bool empty() const;
};

// Fixed rule schema used wherever rules appear in a prompt.
std::string render_rules(const RuleSet& rules);

struct FewShotCase {
    std::string question;
    std::string sql;
    std::string skeleton;
};

// Numbers become <NUM>, quoted strings <STR>, tokens naming a schema element <COL>.
std::string mask_question(std::string_view question, const std::set<std::string>& schema_tokens = {});

std::set<std::string> schema_tokens(const db::RawSchema& schema);

class FewShotStore {
public:
    FewShotStore() = default;
    explicit FewShotStore(std::vector<FewShotCase> cases);

    // Newline-delimited {"question", "sql"} records.
    static FewShotStore load(const std::filesystem::path& path, const std::set<std::string>& schema_tokens = {});

    void add(std::string question, std::string sql, const std::set<std::string>& schema_tokens = {});
    const std::vector<FewShotCase>& cases() const { return cases_; }
    bool empty() const { return cases_.empty(); }

private:
    std::vector<FewShotCase> cases_;
};

std::vector<FewShotCase> retrieve_similar_cases(const FewShotStore& store, std::string_view question, std::size_t k,
                                                const std::set<std::string>& schema_tokens = {});

std::string generation_prompt(const std::string& question, const std::string& evidence, const std::string& schema_f,
                              const std::string& sql_d, const std::vector<FewShotCase>& cases);
std::string polish_instruction();
std::string rewrite_instruction();
std::string verdict_reprompt();
std::string continue_instruction();
std::string next_subquestion_instruction();

// Last standalone upper-case YES or NO in the text.
std::optional<Verdict> parse_verdict(std::string_view text);

std::string correction_instruction(const db::ExecutionOutcome& outcome, const std::string& sql,
                                   std::size_t feedback_rows = kDefaultFeedbackRows);

std::string dependency_tool(const profile::Profile& profile, const db::RawSchema& schema, std::string_view table,
                            std::string_view column);

struct ExecutedSql {
    std::string sql;
    db::ExecutionOutcome outcome;
    std::size_t message_index = 0;  // assistant message that emitted it
};

RuleSet extract_rules(const llm::ChatTranscript& transcript, const std::vector<ExecutedSql>& executed);

// Optional model layer: asks for rephrased rules, returned as notes.
RuleSet summarize_rules(llm::Gateway& gateway, const RuleSet& rules, const std::string& question);

struct GenerationPlan {
    int max_rounds = 6;
    double temperature = 0.0;
    std::size_t feedback_rows = kDefaultFeedbackRows;
    std::chrono::milliseconds timeout{std::chrono::seconds(30)};
};

struct SemanticCheck {
    Verdict verdict = Verdict::No;
    bool defaulted = false;  // neither token after the reprompt
    llm::ChatTranscript transcript;
};

SemanticCheck semantic_check(llm::Gateway& gateway, const std::string& question, const std::string& evidence,
                             const std::string& schema_f, const std::string& sql_d,
                             const std::vector<FewShotCase>& cases, double temperature = 0.0);

struct GenerationOutcome {
    std::string sql_g;
    bool parsed = false;
    Verdict verdict = Verdict::No;
    Branch branch = Branch::Rewrite;
    int interaction_count = 0;
    bool budget_exhausted = false;
    llm::ChatTranscript transcript;
    std::vector<ExecutedSql> executed;
    RuleSet rules;
};

GenerationOutcome run_generation(llm::Gateway& gateway, db::Database& db, const std::string& question,
                                 const std::string& evidence, const std::string& schema_f, const std::string& sql_d,
                                 const std::vector<FewShotCase>& cases, const GenerationPlan& plan = {},
                                 const profile::Profile* profile = nullptr, const db::RawSchema* schema = nullptr);

}  // namespace mci::gen
