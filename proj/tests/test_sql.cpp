#include <gtest/gtest.h>

#include "criteria.hpp"
#include "fixture.hpp"
#include "mci/sql/parser.hpp"
#include "mci/sql/references.hpp"

using namespace mci;
using mci::testing::columns_of;
using mci::testing::shared_fixture_db;

class ReferenceCorpus : public ::testing::TestWithParam<std::size_t> {};

TEST_P(ReferenceCorpus, MatchesHandResolvedSet) {
    const auto& c = mci::testing::reference_corpus().at(GetParam());
    EXPECT_EQ(sql::extract_references(c.sql, shared_fixture_db().schema), columns_of(c.gold)) << c.sql;
}

INSTANTIATE_TEST_SUITE_P(Corpus, ReferenceCorpus, ::testing::Range<std::size_t>(0, 30));

TEST(Criteria, LinkingMetrics) {
    ASSERT_EQ(mci::testing::reference_corpus().size(), 30u);
    auto r = mci::testing::check_linking_metrics();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(References, UnknownNamesAreDropped) {
    EXPECT_TRUE(sql::extract_references("SELECT Nickname FROM users", shared_fixture_db().schema).empty());
    EXPECT_TRUE(sql::extract_references("SELECT a FROM missing_table", shared_fixture_db().schema).empty());
}

TEST(References, ParseErrorPropagates) {
    EXPECT_THROW(sql::extract_references("SELECT FROM WHERE", shared_fixture_db().schema), sql::ParseError);
}

TEST(LinkingScore, EmptyDenominatorsScoreOne) {
    auto s = sql::linking_score({}, {});
    EXPECT_EQ(s.precision, 1.0);
    EXPECT_EQ(s.recall, 1.0);
    auto miss = sql::linking_score(columns_of({"users.Id"}), columns_of({"posts.Id"}));
    EXPECT_EQ(miss.precision, 0.0);
    EXPECT_EQ(miss.recall, 0.0);
    EXPECT_EQ(miss.f1, 0.0);
}

TEST(Parser, AcceptsBenchmarkDialect) {
    const char* queries[] = {
        "SELECT T1.a FROM t AS T1 INNER JOIN u AS T2 ON T1.id = T2.id WHERE T2.b = 'x' ORDER BY T1.c DESC LIMIT 1",
        "SELECT CAST(SUM(IIF(a > 1, 1, 0)) AS REAL) * 100 / COUNT(*) FROM t",
        "SELECT a FROM t WHERE b IN (SELECT b FROM u) AND c NOT BETWEEN 1 AND 2 AND d IS NOT NULL",
        "WITH x AS (SELECT 1 AS v) SELECT v FROM x UNION ALL SELECT 2",
        "SELECT a, ROW_NUMBER() OVER (PARTITION BY b ORDER BY c) FROM t",
        "SELECT `a b`, [c d], \"e\" FROM t LIMIT 5 OFFSET 10;",
        "SELECT COUNT(DISTINCT a) FROM t GROUP BY b HAVING COUNT(*) > 1",
        "SELECT CASE WHEN a THEN 'y' ELSE 'n' END FROM t WHERE a LIKE '%x%' ESCAPE '\\'",
    };
    for (const char* q : queries) EXPECT_TRUE(sql::parses(q)) << q;
}

TEST(Parser, RejectsBrokenSql) {
    for (const char* q : {"SELECT", "SELECT a FROM", "SELECT a FROM t WHERE", "SELEC a FROM t", "SELECT (a FROM t",
                          "SELECT 1; SELECT 2", "DELETE FROM t"})
        EXPECT_FALSE(sql::parses(q)) << q;
}

TEST(Parser, PrinterRoundTripsToSameTree) {
    for (const auto& c : mci::testing::reference_corpus()) {
        auto first = sql::parse_select(c.sql);
        auto printed = sql::to_sql(first);
        auto second = sql::parse_select(printed);
        EXPECT_EQ(sql::to_sql(second), printed) << c.sql;
        EXPECT_EQ(sql::normalized(first), sql::normalized(second)) << c.sql;
    }
}

TEST(Parser, NormalizedResolvesAliasesAndCase) {
    auto a = sql::parse_select("SELECT T1.Name FROM Users AS T1 WHERE T1.Age > 3");
    auto b = sql::parse_select("select users.name from users where users.age > 3");
    EXPECT_EQ(sql::normalized(a), sql::normalized(b));
}

TEST(Parser, PredicatesAndTables) {
    auto s = sql::parse_select(
        "SELECT COUNT(T1.Id) FROM posts AS T1 JOIN users AS T2 ON T1.OwnerUserId = T2.Id WHERE T2.Location LIKE "
        "'%York%' AND T1.Score > 10 AND T1.Id IN (SELECT PostId FROM comments WHERE Score = 0)");
    auto preds = sql::predicates(s);
    EXPECT_NE(std::find(preds.begin(), preds.end(), "users.location LIKE '%York%'"), preds.end());
    EXPECT_NE(std::find(preds.begin(), preds.end(), "posts.score > 10"), preds.end());
    EXPECT_NE(std::find(preds.begin(), preds.end(), "posts.owneruserid = users.id"), preds.end());
    EXPECT_NE(std::find(preds.begin(), preds.end(), "score = 0"), preds.end());
    auto tables = sql::referenced_tables(s);
    EXPECT_EQ(tables, (std::vector<std::string>{"comments", "posts", "users"}));
}

TEST(Parser, ReportsErrorOffset) {
    try {
        sql::parse_select("SELECT a FROM t WHERE");
        FAIL() << "expected a parse error";
    } catch (const sql::ParseError& e) {
        EXPECT_GE(e.offset(), 16u);
    }
}
