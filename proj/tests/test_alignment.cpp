#include <gtest/gtest.h>

#include "fixture.hpp"
#include "mci/alignment.hpp"
#include "mci/util.hpp"

using namespace mci;
using mci::testing::shared_fixture_db;

namespace {

std::shared_ptr<llm::ScriptedProvider> reply_with(const std::string& sql) {
    return std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{"Checked.\n```sql\n" + sql + "\n```"});
}

gen::RuleSet location_rules() {
    gen::RuleSet r;
    r.condition_rules = {"users.location LIKE '%New York%'"};
    r.table_rules = {"users"};
    return r;
}

const std::string kBase = "SELECT users.DisplayName FROM users WHERE users.Location LIKE '%New York%'";

}  // namespace

TEST(Catalog, DefaultAssetsLoad) {
    auto catalog = align::default_rule_catalog();
    EXPECT_GE(catalog.size(), 3u);
    for (const auto& r : catalog) EXPECT_NE(r.front(), '#');
    auto bank = align::default_example_bank();
    ASSERT_FALSE(bank.empty());
    for (const auto& e : bank) {
        EXPECT_FALSE(e.question.empty());
        EXPECT_NE(e.correct_sql, e.incorrect_sql);
    }
}

TEST(Catalog, ParseSkipsCommentsAndBlanks) {
    EXPECT_EQ(align::parse_rule_catalog("# header\n\nRule one\n  Rule two  \n"),
              (std::vector<std::string>{"Rule one", "Rule two"}));
    EXPECT_THROW(align::load_rule_catalog("/nonexistent/rules.txt"), FileNotFound);
    auto dir = mci::testing::temp_dir("bank");
    util::write_file_atomic(dir / "bank.json", "[{\"question\": \"q\"}]");
    EXPECT_THROW(align::load_example_bank(dir / "bank.json"), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(FunctionPrompt, Layout) {
    auto p = align::function_alignment_prompt(kBase, location_rules(), "Who lives in New York?", {"A", "B"});
    EXPECT_EQ(p.rfind("# Goal: Your task is to perform a preference check", 0), 0u);
    EXPECT_NE(p.find("# Check Rules:\n(1) A\n(2) B\n"), std::string::npos);
    EXPECT_NE(p.find("# Given SQL: " + kBase + "\n# Question: Who lives in New York?"), std::string::npos);
    EXPECT_NE(p.find("- users.location LIKE '%New York%'"), std::string::npos);
}

TEST(FunctionAlign, AcceptsCompliantRewrite) {
    db::Database database(shared_fixture_db().db_path);
    const std::string better = "SELECT DISTINCT users.DisplayName FROM users WHERE users.Location LIKE '%New York%'";
    llm::Gateway gw(reply_with(better), "m");
    auto r = align::align_functions(gw, kBase, location_rules(), "q", align::default_rule_catalog(), &database);
    EXPECT_TRUE(r.changed);
    EXPECT_EQ(r.sql, better);
    EXPECT_TRUE(r.rejected.empty());
}

TEST(FunctionAlign, GuardsKeepInput) {
    db::Database database(shared_fixture_db().db_path);
    struct Case {
        std::string reply;
        std::string reason;
    } cases[] = {
        {"SELECT users.DisplayName FROM users", "drops condition rule"},
        {"SELECT posts.Title FROM posts WHERE posts.OwnerDisplayName LIKE '%New York%' AND 1 = 1",
         "drops condition rule"},
        {"SELECT users.Nick FROM users WHERE users.Location LIKE '%New York%'", "execution failed"},
        {"SELECT FROM", "unparseable"},
    };
    for (const auto& c : cases) {
        llm::Gateway gw(reply_with(c.reply), "m");
        auto r = align::align_functions(gw, kBase, location_rules(), "q", {}, &database);
        EXPECT_FALSE(r.changed) << c.reply;
        EXPECT_EQ(r.sql, kBase);
        EXPECT_EQ(r.rejected.rfind(c.reason, 0), 0u) << r.rejected;
    }
    gen::RuleSet tables_only;
    tables_only.table_rules = {"posts"};
    llm::Gateway gw(reply_with("SELECT users.Id FROM users"), "m");
    EXPECT_EQ(align::align_functions(gw, "SELECT posts.Id FROM posts", tables_only, "q", {}).rejected,
              "drops table rule posts");
}

TEST(FunctionAlign, GatewayFailureKeepsInput) {
    llm::Gateway gw(std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{}), "m");
    auto r = align::align_functions(gw, kBase, {}, "q", {});
    EXPECT_EQ(r.sql, kBase);
    EXPECT_FALSE(r.changed);
    EXPECT_EQ(r.rejected.rfind("gateway error", 0), 0u);
}

TEST(OutputPrompt, Layout) {
    auto p = align::output_alignment_prompt(kBase, "q?", align::default_example_bank());
    EXPECT_EQ(p.rfind("# Goal: Your task is to perform a column check on the given SQL query.\n", 0), 0u);
    EXPECT_NE(p.find("Example 1:\nQuestion: "), std::string::npos);
    EXPECT_NE(p.find("# Given SQL: " + kBase + "\n# Question: q?"), std::string::npos);
}

TEST(OutputAlign, SelectListOnly) {
    EXPECT_TRUE(align::select_list_only_change("SELECT a, b FROM t WHERE c = 1", "SELECT b FROM t WHERE c = 1"));
    EXPECT_TRUE(align::select_list_only_change("SELECT a FROM t UNION SELECT b FROM u",
                                               "SELECT a, 1 FROM t UNION SELECT b, 2 FROM u"));
    EXPECT_FALSE(align::select_list_only_change("SELECT a FROM t WHERE c = 1", "SELECT a FROM t WHERE c = 2"));
    EXPECT_FALSE(align::select_list_only_change("SELECT a FROM t", "SELECT a FROM t ORDER BY a"));
    EXPECT_FALSE(align::select_list_only_change("SELECT a FROM t", "SELECT a FROM t UNION SELECT a FROM u"));
    EXPECT_FALSE(align::select_list_only_change("SELECT a FROM t", "nonsense"));
}

TEST(OutputAlign, AcceptsColumnChangeRejectsLogicChange) {
    db::Database database(shared_fixture_db().db_path);
    const std::string wide = "SELECT users.Id, users.DisplayName FROM users WHERE users.Age > 30";
    const std::string narrow = "SELECT users.DisplayName FROM users WHERE users.Age > 30";
    llm::Gateway ok(reply_with(narrow), "m");
    auto r = align::align_output(ok, wide, "Names of users older than 30?", {}, &database);
    EXPECT_TRUE(r.changed);
    EXPECT_EQ(r.sql, narrow);

    llm::Gateway bad(reply_with("SELECT users.DisplayName FROM users WHERE users.Age > 40"), "m");
    auto kept = align::align_output(bad, wide, "q", {}, &database);
    EXPECT_FALSE(kept.changed);
    EXPECT_EQ(kept.sql, wide);
    EXPECT_EQ(kept.rejected, "changes outside the SELECT list");

    llm::Gateway same(reply_with(wide), "m");
    auto unchanged = align::align_output(same, wide, "q", {}, &database);
    EXPECT_FALSE(unchanged.changed);
    EXPECT_TRUE(unchanged.rejected.empty());
}
