#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "mci/dbcore.hpp"
#include "mci/generation.hpp"
#include "mci/llm.hpp"

namespace mci::align {

struct OutputExample {
    std::string question;
    std::string correct_sql;
    std::string incorrect_sql;
    std::string explanation;
};

// Check rules for function alignment; the shipped catalog unless a file is given.
std::vector<std::string> default_rule_catalog();
std::vector<std::string> load_rule_catalog(const std::filesystem::path& path);
std::vector<std::string> parse_rule_catalog(std::string_view text);

std::vector<OutputExample> default_example_bank();
std::vector<OutputExample> load_example_bank(const std::filesystem::path& path);

std::string function_alignment_prompt(const std::string& sql_g, const gen::RuleSet& rules,
                                      const std::string& question, const std::vector<std::string>& catalog);
std::string output_alignment_prompt(const std::string& sql_f, const std::string& question,
                                    const std::vector<OutputExample>& examples);

struct AlignResult {
    std::string sql;
    bool changed = false;
    std::string rejected;  // why the model's SQL was not taken; empty if accepted or unchanged
    long long output_tokens = 0;
};

// Guarded rewrite: the input is kept when the reply does not parse, fails to
// execute (when `db` is given), or drops a condition rule or table rule.
AlignResult align_functions(llm::Gateway& gateway, const std::string& sql_g, const gen::RuleSet& rules,
                            const std::string& question, const std::vector<std::string>& catalog,
                            db::Database* db = nullptr);

// True when `after` differs from `before` only in the SELECT lists.
bool select_list_only_change(const std::string& before, const std::string& after);

AlignResult align_output(llm::Gateway& gateway, const std::string& sql_f, const std::string& question,
                         const std::vector<OutputExample>& examples, db::Database* db = nullptr);

}  // namespace mci::align
