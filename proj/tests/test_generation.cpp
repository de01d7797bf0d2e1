#include <gtest/gtest.h>

#include <cstdlib>

#include "criteria.hpp"
#include "fixture.hpp"
#include "mci/generation.hpp"
#include "mci/util.hpp"

using namespace mci;
using mci::testing::shared_fixture_db;

namespace {

db::ExecutionOutcome outcome(db::ExecState s) {
    db::ExecutionOutcome o;
    o.state = s;
    if (s != db::ExecState::Failure) o.result = db::ResultSet{};
    return o;
}

}  // namespace

// Regenerates tests/golden from the current renderings when MCI_UPDATE_GOLDEN is set.
TEST(Golden, UpdateWhenRequested) {
    if (!std::getenv("MCI_UPDATE_GOLDEN")) GTEST_SKIP() << "set MCI_UPDATE_GOLDEN=1 to rewrite golden files";
    for (const auto& r : mci::testing::prompt_renderings())
        util::write_file_atomic(mci::testing::golden_dir() / r.file, r.text + "\n");
}

TEST(Criteria, PromptFidelity) {
    auto r = mci::testing::check_prompt_fidelity();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Criteria, ScriptedFlows) {
    auto r = mci::testing::check_scripted_flows();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Verdict, LastStandaloneToken) {
    EXPECT_EQ(gen::parse_verdict("analysis...\nYES"), gen::Verdict::Yes);
    EXPECT_EQ(gen::parse_verdict("YES at first, but NO."), gen::Verdict::No);
    EXPECT_EQ(gen::parse_verdict("**NO**"), gen::Verdict::No);
    EXPECT_FALSE(gen::parse_verdict("yes, NOTE that YESTERDAY matters"));
    EXPECT_FALSE(gen::parse_verdict(""));
}

TEST(Verdict, RepromptThenDefaultNo) {
    auto script = std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{"hmm", "still unsure"});
    llm::Gateway gw(script, "m");
    auto check = gen::semantic_check(gw, "q", "", "schema", "SELECT 1", {});
    EXPECT_EQ(check.verdict, gen::Verdict::No);
    EXPECT_TRUE(check.defaulted);
    ASSERT_EQ(check.transcript.messages.size(), 4u);
    EXPECT_EQ(check.transcript.messages[2].content, gen::verdict_reprompt());

    auto yes = std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{"hmm", "YES"});
    llm::Gateway gw2(yes, "m");
    auto ok = gen::semantic_check(gw2, "q", "", "schema", "SELECT 1", {});
    EXPECT_EQ(ok.verdict, gen::Verdict::Yes);
    EXPECT_FALSE(ok.defaulted);
}

TEST(Prompt, EvidenceAndCasesAreOptional) {
    auto bare = gen::generation_prompt("Q?", "", "S", "SELECT 1", {});
    EXPECT_EQ(bare.find("Evidence:"), std::string::npos);
    EXPECT_EQ(bare.find("# Similar Cases:"), std::string::npos);
    EXPECT_TRUE(bare.size() > 10 && bare.substr(bare.size() - 8) == "SELECT 1");
    auto full = gen::generation_prompt("Q?", "E", "S", "SELECT 1", {{"q1", "SELECT 2", ""}});
    EXPECT_NE(full.find("Evidence: E\n"), std::string::npos);
    EXPECT_NE(full.find("Question: q1\nSQL: SELECT 2\n"), std::string::npos);
}

TEST(Correction, SuccessShowsHeadRows) {
    db::ExecutionOutcome o = outcome(db::ExecState::Success);
    for (int i = 0; i < 4; ++i) o.result->rows.push_back({db::Cell(std::int64_t{i})});
    o.result->total_row_count = 4;
    auto text = gen::correction_instruction(o, "SELECT x", 2);
    EXPECT_NE(text.find("returns `Success`"), std::string::npos);
    EXPECT_NE(text.find("The execution returned 4 rows."), std::string::npos);
    EXPECT_NE(text.find("The 2/4 rows are: [(0,), (1,)]"), std::string::npos);
}

TEST(FewShot, MaskQuestion) {
    EXPECT_EQ(gen::mask_question("How many posts have a score above 10 in 'Paris'?"),
              "how many posts have a score above <NUM> in <STR>");
    EXPECT_EQ(gen::mask_question("List the 3rd ViewCount", {"viewcount"}), "list the 3rd <COL>");
    EXPECT_EQ(gen::mask_question("value 2.5"), "value <NUM>");
}

TEST(FewShot, RetrievesStructurallySimilarCases) {
    auto tokens = gen::schema_tokens(shared_fixture_db().schema);
    EXPECT_TRUE(tokens.count("viewcount"));
    gen::FewShotStore store;
    store.add("How many users live in 'Paris'?", "SELECT COUNT(*) FROM users WHERE Location = 'Paris'", tokens);
    store.add("What is the title of the post with the highest score?",
              "SELECT Title FROM posts ORDER BY Score DESC LIMIT 1", tokens);
    store.add("Name the user with reputation over 100", "SELECT DisplayName FROM users WHERE Reputation > 100",
              tokens);
    auto hits = gen::retrieve_similar_cases(store, "How many users live in 'Berlin'?", 2, tokens);
    ASSERT_FALSE(hits.empty());
    EXPECT_EQ(hits[0].question, "How many users live in 'Paris'?");
    EXPECT_TRUE(gen::retrieve_similar_cases(store, "zzz", 3, tokens).empty());
    EXPECT_TRUE(gen::retrieve_similar_cases(gen::FewShotStore{}, "q", 3).empty());
}

TEST(FewShot, LoadReportsBadLines) {
    auto dir = mci::testing::temp_dir("fewshot");
    util::write_file_atomic(dir / "ok.jsonl", "{\"question\":\"a\",\"sql\":\"SELECT 1\"}\n\n");
    EXPECT_EQ(gen::FewShotStore::load(dir / "ok.jsonl").cases().size(), 1u);
    util::write_file_atomic(dir / "bad.jsonl", "{\"question\":\"a\"}\n");
    EXPECT_THROW(gen::FewShotStore::load(dir / "bad.jsonl"), MalformedDataset);
    EXPECT_THROW(gen::FewShotStore::load(dir / "missing.jsonl"), FileNotFound);
    std::filesystem::remove_all(dir);
}

TEST(Rules, ExtractedFromExecutionHistory) {
    const std::string empty_sql = "SELECT users.Id FROM users WHERE users.Location = 'New York'";
    const std::string like_sql = "SELECT users.Id FROM users WHERE users.Location LIKE '%New York%'";
    const std::string final_sql =
        "SELECT COUNT(posts.Id) FROM posts WHERE posts.OwnerUserId IN (SELECT users.Id FROM users WHERE "
        "users.Location LIKE '%New York%')";
    llm::ChatTranscript t;
    t.messages = {{llm::Role::User, "prompt"},
                  {llm::Role::Assistant, "```sql\n" + empty_sql + "\n```"},
                  {llm::Role::User, "empty"},
                  {llm::Role::Assistant, "```sql\n" + like_sql + "\n```"},
                  {llm::Role::User, "ok"},
                  {llm::Role::Assistant, "```final-sql\n" + final_sql + "\n```"}};
    std::vector<gen::ExecutedSql> executed = {{empty_sql, outcome(db::ExecState::Empty), 1},
                                              {like_sql, outcome(db::ExecState::Success), 3},
                                              {final_sql, outcome(db::ExecState::Success), 5}};
    auto rules = gen::extract_rules(t, executed);
    EXPECT_EQ(rules.condition_rules, std::vector<std::string>{"users.location LIKE '%New York%'"});
    EXPECT_EQ(rules.table_rules, std::vector<std::string>{"users"});
    EXPECT_EQ(rules.negative_constraints, std::vector<std::string>{"users.location = 'New York'"});
    auto text = gen::render_rules(rules);
    EXPECT_NE(text.find("- users.location LIKE '%New York%'"), std::string::npos);
    EXPECT_EQ(gen::render_rules({}), "None.");
}

TEST(Rules, NoSuccessMeansNoRules) {
    llm::ChatTranscript t;
    std::vector<gen::ExecutedSql> executed = {{"SELECT 1", outcome(db::ExecState::Empty), 1}};
    EXPECT_TRUE(gen::extract_rules(t, executed).empty());
}

TEST(Rules, SummaryAddsNotes) {
    auto script = std::make_shared<llm::ScriptedProvider>(
        std::vector<std::string>{"- Keep the fuzzy location filter.\nignored line\n- Use the users table."});
    llm::Gateway gw(script, "m");
    gen::RuleSet rules;
    rules.table_rules = {"users"};
    auto out = gen::summarize_rules(gw, rules, "q");
    EXPECT_EQ(out.notes, (std::vector<std::string>{"Keep the fuzzy location filter.", "Use the users table."}));
    EXPECT_EQ(gen::summarize_rules(gw, {}, "q").notes.size(), 0u);
    EXPECT_EQ(script->consumed(), 1u);
}

TEST(DependencyTool, DescribesRecordedFacts) {
    const auto& fx = shared_fixture_db();
    auto text = gen::dependency_tool(fx.profile, fx.schema, "posts", "Title");
    EXPECT_EQ(text.rfind("Dependencies of `posts.Title`:", 0), 0u) << text;
    EXPECT_NE(text.find("`posts.Id`"), std::string::npos);
    EXPECT_THROW(gen::dependency_tool(fx.profile, fx.schema, "posts", "Nope"), UnknownColumn);
    profile::Profile empty;
    EXPECT_EQ(gen::dependency_tool(empty, fx.schema, "users", "Age"), "`users.Age` has no recorded dependencies.");
}

TEST(Session, DependencyRequestIsAnswered) {
    const auto& fx = shared_fixture_db();
    db::Database database(fx.db_path);
    auto script = std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{
        "Fine.\nYES", "DEPENDENCY: posts.Title", "```final-sql\nSELECT posts.Title FROM posts\n```"});
    llm::Gateway gw(script, "m");
    auto out = gen::run_generation(gw, database, "q", "", "schema", "SELECT posts.Title FROM posts", {}, {},
                                   &fx.profile, &fx.schema);
    ASSERT_EQ(out.transcript.injections.size(), 2u);
    EXPECT_EQ(out.transcript.injections[1].second, "dependency");
    EXPECT_NE(out.transcript.messages[out.transcript.injections[1].first].content.find("Dependencies of `posts.Title`"),
              std::string::npos);
    EXPECT_EQ(out.sql_g, "SELECT posts.Title FROM posts");
    EXPECT_EQ(out.branch, gen::Branch::Polish);
    EXPECT_EQ(out.interaction_count, 1);
}

TEST(Session, EmptyReplyFallsBackToDraft) {
    db::Database database(shared_fixture_db().db_path);
    auto script = std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{"NO", "I give up."});
    llm::Gateway gw(script, "m");
    gen::GenerationPlan plan;
    plan.max_rounds = 2;
    auto out = gen::run_generation(gw, database, "q", "", "schema", "SELECT 1", {}, plan);
    EXPECT_TRUE(out.budget_exhausted);
    EXPECT_EQ(out.sql_g, "SELECT 1");
    EXPECT_EQ(out.verdict, gen::Verdict::No);
    EXPECT_EQ(out.interaction_count, 0);
}
