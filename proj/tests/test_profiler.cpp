#include <gtest/gtest.h>

#include <random>

#include "criteria.hpp"
#include "fixture.hpp"
#include "mci/llm.hpp"
#include "mci/profiler.hpp"
#include "mci/util.hpp"

using namespace mci;
using mci::testing::shared_fixture_db;

TEST(Criteria, FunctionalDependencyOracle) {
    auto r = mci::testing::check_fd_oracle();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Criteria, CardinalityTable) {
    auto r = mci::testing::check_cardinality_table();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Criteria, Bm25Oracle) {
    auto r = mci::testing::check_bm25_oracle();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Patterns, AbstractPattern) {
    EXPECT_EQ(profile::abstract_pattern("Sharpie"), "Aa");
    EXPECT_EQ(profile::abstract_pattern("2026-01-01"), "9-9-9");
    EXPECT_EQ(profile::abstract_pattern(""), "");
    EXPECT_EQ(profile::abstract_pattern("New York, NY"), "Aa Aa, A");
    EXPECT_EQ(profile::abstract_pattern("AB12cd"), "A9a");
}

TEST(Patterns, IdempotentOnPatternAlphabet) {
    std::mt19937 rng(3);
    const char alphabet[] = {'A', 'a', '9'};
    for (int i = 0; i < 500; ++i) {
        std::string v;
        for (int n = rng() % 12; n > 0; --n) v.push_back(alphabet[rng() % 3]);
        auto once = profile::abstract_pattern(v);
        EXPECT_EQ(profile::abstract_pattern(once), once) << v;
    }
}

TEST(Patterns, MinePatterns) {
    auto p = profile::mine_patterns({"A1", "B2", "xx"});
    ASSERT_EQ(p.size(), 2u);
    EXPECT_EQ(p[0], (std::pair<std::string, long long>{"A9", 2}));
    EXPECT_EQ(p[1], (std::pair<std::string, long long>{"a", 1}));
    EXPECT_TRUE(profile::mine_patterns({}).empty());
    std::vector<std::string> same(300, "Zz9");
    auto capped = profile::mine_patterns(same);
    ASSERT_EQ(capped.size(), 1u);
    EXPECT_EQ(capped[0].second, 200);
}

TEST(Patterns, ReservoirIsSeededAndUniformInSize) {
    profile::Reservoir<int> a(10, 42), b(10, 42);
    for (int i = 0; i < 1000; ++i) {
        a.offer(i);
        b.offer(i);
    }
    EXPECT_EQ(a.items(), b.items());
    EXPECT_EQ(a.items().size(), 10u);
    EXPECT_EQ(a.seen(), 1000u);
}

TEST(Dependencies, SpecExamples) {
    using C = db::Cell;
    std::vector<std::pair<C, C>> zc = {{C(std::string("02139")), C(std::string("Cambridge"))},
                                       {C(std::string("02139")), C(std::string("Cambridge"))},
                                       {C(std::string("10001")), C(std::string("NYC"))}};
    EXPECT_TRUE(profile::pairwise_fd(zc));
    std::vector<std::pair<C, C>> self;
    for (int i = 0; i < 20; ++i) self.push_back({C(std::int64_t{i % 3}), C(std::int64_t{i % 3})});
    EXPECT_TRUE(profile::pairwise_fd(self));
    std::vector<std::pair<C, C>> key;
    for (int i = 0; i < 20; ++i) key.push_back({C(std::int64_t{i}), C(std::int64_t{i % 2})});
    EXPECT_TRUE(profile::pairwise_fd(key));
}

TEST(Dependencies, StrippedPartitionProduct) {
    auto a = profile::StrippedPartition::from_codes({0, 0, 1, 1, 2});
    auto b = profile::StrippedPartition::from_codes({5, 6, 7, 7, 7});
    EXPECT_EQ(a.classes().size(), 2u);  // {0,1} and {2,3}; row 4 is a singleton
    EXPECT_EQ(a.error(), 2u);
    auto ab = a.product(b, 5);
    ASSERT_EQ(ab.classes().size(), 1u);
    EXPECT_EQ(ab.classes()[0], (std::vector<std::uint32_t>{2, 3}));
    auto with_nulls = profile::StrippedPartition::from_codes({-1, -1, 3, 3});
    EXPECT_EQ(with_nulls.classes().size(), 1u);
}

TEST(Dependencies, MinedOnFixture) {
    const auto& fx = shared_fixture_db();
    bool id_to_title = false;
    for (const auto& d : fx.profile.dependencies) {
        if (d.a == ColumnId{"posts", "Id"} && d.b == ColumnId{"posts", "Title"}) {
            id_to_title = true;
            EXPECT_TRUE(d.fd_ab);
            EXPECT_TRUE(d.fd_ba);
            EXPECT_EQ(d.cardinality, profile::Cardinality::OneToOne);
        }
        EXPECT_EQ(d.cardinality, profile::classify_cardinality(d.fd_ab, d.fd_ba));
    }
    EXPECT_TRUE(id_to_title);
}

TEST(ColumnProfile, StatisticsOnFixture) {
    const auto& fx = shared_fixture_db();
    const auto* views = fx.profile.find({"posts", "ViewCount"});
    ASSERT_NE(views, nullptr);
    ASSERT_TRUE(views->range);
    EXPECT_EQ(views->range->first, db::Cell(std::int64_t{60}));
    EXPECT_EQ(views->range->second, db::Cell(std::int64_t{175495}));
    EXPECT_TRUE(views->numeric);
    EXPECT_EQ(views->row_count, 8);

    const auto* location = fx.profile.find({"users", "Location"});
    ASSERT_NE(location, nullptr);
    EXPECT_EQ(location->null_count, 1);
    EXPECT_EQ(location->distinct_count, 4);
    EXPECT_FALSE(location->range);
    ASSERT_EQ(location->patterns.size(), 2u);
    EXPECT_EQ(location->patterns[0], (std::pair<std::string, long long>{"Aa", 3}));
    EXPECT_EQ(location->patterns[1], (std::pair<std::string, long long>{"Aa Aa, A", 2}));
    EXPECT_EQ(location->description.value_or(""), "the location of the user");
}

TEST(ColumnProfile, AllNullAndDistinct) {
    auto dir = mci::testing::temp_dir("nulls");
    auto path = dir / "n.sqlite";
    mci::testing::write_db(path, {"CREATE TABLE t (a TEXT, b INTEGER)",
                             "INSERT INTO t VALUES ('a', NULL), ('a', NULL), ('b', NULL)"});
    db::Database database(path);
    auto schema = database.introspect_schema();
    auto b = profile::profile_column(database, schema, "t", "b");
    EXPECT_EQ(b.null_count, b.row_count);
    EXPECT_FALSE(b.range);
    auto a = profile::profile_column(database, schema, "t", "a");
    EXPECT_EQ(a.distinct_count, 2);
    std::filesystem::remove_all(dir);
}

TEST(Similarity, DisplayNameColumnsAreCandidates) {
    const auto& fx = shared_fixture_db();
    profile::TrigramEmbedder embedder;
    auto pairs = profile::similarity_candidates(fx.schema, fx.profile.columns, embedder, 0.65);
    std::pair<ColumnId, ColumnId> expected{{"posts", "OwnerDisplayName"}, {"users", "DisplayName"}};
    EXPECT_NE(std::find(pairs.begin(), pairs.end(), expected), pairs.end());
    for (const auto& [a, b] : pairs) {
        EXPECT_NE(a.table, b.table);
        EXPECT_LT(a, b);
    }
    EXPECT_TRUE(profile::similarity_candidates(fx.schema, fx.profile.columns, embedder, 1.01).empty());
}

TEST(Similarity, VerifyRelationByProbes) {
    auto dir = mci::testing::temp_dir("verify");
    auto path = dir / "v.sqlite";
    mci::testing::write_db(path, {"CREATE TABLE x (a INTEGER)", "CREATE TABLE y (b INTEGER)", "CREATE TABLE z (c INTEGER)",
                             "INSERT INTO x VALUES (1), (2)", "INSERT INTO y VALUES (1), (2), (2), (NULL)",
                             "INSERT INTO z VALUES (1), (2), (3)"});
    db::Database database(path);
    EXPECT_EQ(profile::verify_column_relation(database, {"x", "a"}, {"y", "b"}, std::nullopt).kind,
              profile::RelationKind::Duplicate);
    EXPECT_EQ(profile::verify_column_relation(database, {"x", "a"}, {"z", "c"}, std::nullopt).kind,
              profile::RelationKind::Similar);
    auto broken = profile::verify_column_relation(database, {"x", "a"}, {"z", "missing"}, std::nullopt);
    EXPECT_EQ(broken.kind, profile::RelationKind::Similar);
    EXPECT_TRUE(broken.note);
    std::filesystem::remove_all(dir);
}

TEST(Similarity, ForeignKeyJoinPath) {
    const auto& schema = shared_fixture_db().schema;
    EXPECT_EQ(profile::fk_join_path(schema, "posts", "users").value_or(""), "posts.OwnerUserId = users.Id");
    EXPECT_EQ(profile::fk_join_path(schema, "comments", "users").value_or(""), "comments.UserId = users.Id");
    EXPECT_FALSE(profile::fk_join_path(schema, "users", "users"));
}

TEST(ValueIndex, BuildsTextColumnsOnly) {
    const auto& fx = shared_fixture_db();
    db::Database database(fx.db_path);
    auto index = profile::build_value_index(database, fx.schema, fx.profile.columns);
    EXPECT_EQ(index.document_count({"users", "Location"}), 4u);
    EXPECT_EQ(index.document_count({"posts", "ViewCount"}), 0u);
    auto examples = profile::retrieve_examples(index, "users from New York", 1);
    EXPECT_EQ((examples[ColumnId{"users", "Location"}]), (std::vector<std::string>{"New York, NY"}));
}

TEST(ValueIndex, RetrievalExamples) {
    profile::ValueIndex index;
    ColumnId city{"t", "city"};
    index.add_column(city, {"New York", "Boston", "Chicago"});
    EXPECT_EQ(profile::retrieve_examples(index, "posts from New York", 1)[city], std::vector<std::string>{"New York"});
    EXPECT_EQ(profile::retrieve_examples(index, "nothing shared", 2)[city],
              (std::vector<std::string>{"Boston", "Chicago"}));
    EXPECT_EQ(profile::retrieve_examples(index, "york", 10)[city].size(), 3u);
}

TEST(Render, CompleteAndPartialModes) {
    const auto& fx = shared_fixture_db();
    auto complete = profile::render_context(fx.schema, fx.profile, profile::ContextMode::Complete);
    auto partial = profile::render_context(fx.schema, fx.profile, profile::ContextMode::Partial);
    const auto& views = complete.per_column_text.at({"posts", "ViewCount"});
    EXPECT_NE(views.find("The `ViewCount` column in the `posts` table is an integer that represents"),
              std::string::npos)
        << views;
    EXPECT_NE(views.find("ranges from 60 to 175,495"), std::string::npos) << views;
    const auto& views_p = partial.per_column_text.at({"posts", "ViewCount"});
    EXPECT_EQ(views_p.find("ranges from"), std::string::npos);
    EXPECT_NE(views_p.find("example"), std::string::npos);

    auto again = profile::render_context(fx.schema, fx.profile, profile::ContextMode::Complete);
    EXPECT_EQ(again.per_column_text, complete.per_column_text);
    EXPECT_EQ(profile::render_schema(fx.schema, again), profile::render_schema(fx.schema, complete));
}

TEST(Render, MissingProfileThrows) {
    const auto& fx = shared_fixture_db();
    auto p = fx.profile;
    p.columns.pop_back();
    EXPECT_THROW(profile::render_context(fx.schema, p, profile::ContextMode::Partial), MissingProfile);
}

TEST(Render, SubsetKeepsJoinKeys) {
    const auto& fx = shared_fixture_db();
    auto ctx = profile::render_context(fx.schema, fx.profile, profile::ContextMode::Partial);
    ColumnSet subset = {{"posts", "Title"}, {"users", "DisplayName"}};
    auto text = profile::render_schema(fx.schema, ctx, &subset);
    EXPECT_NE(text.find("# Table: posts"), std::string::npos);
    EXPECT_EQ(text.find("# Table: comments"), std::string::npos);
    EXPECT_NE(text.find("`OwnerUserId`"), std::string::npos);
    EXPECT_EQ(text.find("- `ViewCount`"), std::string::npos);
    EXPECT_NE(text.find("Foreign keys: posts.OwnerUserId = users.Id"), std::string::npos);
}

TEST(Artifact, SaveLoadAndStaleRebuild) {
    auto dir = mci::testing::temp_dir("artifact");
    auto db_path = mci::testing::make_fixture_db(dir);
    auto artifact = dir / "codebase.profile.json";
    auto built = profile::ensure_profile(db_path, artifact);
    ASSERT_TRUE(std::filesystem::exists(artifact));
    auto loaded = profile::load_profile(artifact);
    EXPECT_EQ(profile::to_json(loaded), profile::to_json(built));

    auto doc = profile::to_json(built);
    doc["schema_checksum"] = "stale";
    util::write_file_atomic(artifact, doc.dump());
    auto rebuilt = profile::ensure_profile(db_path, artifact);
    EXPECT_EQ(rebuilt.schema_checksum, built.schema_checksum);
    EXPECT_EQ(profile::load_profile(artifact).schema_checksum, built.schema_checksum);
    std::filesystem::remove_all(dir);
}

TEST(Describe, GatewayTextStoredVerbatimAndFailuresTolerated) {
    auto dir = mci::testing::temp_dir("describe");
    auto db_path = mci::testing::make_fixture_db(dir);
    auto script = std::make_shared<llm::ScriptedProvider>(
        std::vector<std::string>{"Users of the forum.", "Questions posted by users.", "Comments on posts."});
    llm::Gateway gateway(script, "mock");
    profile::BuildOptions opts;
    opts.gateway = &gateway;
    auto p = profile::build_profile(db_path, opts);
    EXPECT_EQ(p.find_table("users")->description.value_or(""), "Users of the forum.");
    EXPECT_EQ(p.find_table("comments")->description.value_or(""), "Comments on posts.");

    auto empty = std::make_shared<llm::ScriptedProvider>(std::vector<std::string>{});
    llm::Gateway failing(empty, "mock");
    opts.gateway = &failing;
    auto q = profile::build_profile(db_path, opts);
    EXPECT_FALSE(q.find_table("users")->description);
    std::filesystem::remove_all(dir);
}
