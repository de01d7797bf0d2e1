#include <gtest/gtest.h>

#include "criteria.hpp"
#include "fixture.hpp"
#include "mci/harness.hpp"
#include "mci/util.hpp"

using namespace mci;
namespace fs = std::filesystem;

namespace {

// Recorded once per process; the tests below only replay from it.
const fs::path& replay_fixture() {
    static const fs::path config = mci::testing::build_replay_fixture(mci::testing::temp_dir("harness_replay"));
    return config;
}

fs::path fixture_root() { return replay_fixture().parent_path(); }

}  // namespace

TEST(Criteria, BenchDeterminism) {
    auto r = mci::testing::check_bench_determinism();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Dataset, LoadsBirdLayout) {
    auto samples = harness::load_dataset(fixture_root() / "dataset");
    ASSERT_EQ(samples.size(), 3u);
    EXPECT_EQ(samples[0].question_id, 1);
    EXPECT_EQ(samples[0].db_id, "codebase");
    EXPECT_EQ(samples[0].difficulty.value_or(""), "simple");
    EXPECT_TRUE(fs::exists(samples[0].db_path));
    EXPECT_EQ(samples[1].evidence, "");
}

TEST(Dataset, LoadsSpiderLayout) {
    auto dir = mci::testing::temp_dir("spider");
    mci::testing::make_fixture_db(dir / "database" / "codebase");
    util::write_file_atomic(dir / "dev.json",
                            R"([{"db_id": "codebase", "question": "How many users?", "query": "SELECT COUNT(*) FROM users"}])");
    auto samples = harness::load_dataset(dir);
    ASSERT_EQ(samples.size(), 1u);
    EXPECT_EQ(samples[0].question_id, 0);
    EXPECT_EQ(samples[0].gold_sql, "SELECT COUNT(*) FROM users");
    EXPECT_FALSE(samples[0].difficulty);
    fs::remove_all(dir);
}

TEST(Dataset, MalformedInputs) {
    auto dir = mci::testing::temp_dir("bad_dataset");
    EXPECT_THROW(harness::load_dataset(dir / "missing"), MalformedDataset);
    EXPECT_THROW(harness::load_dataset(dir), MalformedDataset);
    mci::testing::make_fixture_db(dir / "dev_databases" / "codebase");
    util::write_file_atomic(dir / "dev.json", "{not json");
    EXPECT_THROW(harness::load_dataset(dir), MalformedDataset);
    util::write_file_atomic(dir / "dev.json", R"([{"db_id": "codebase", "SQL": "SELECT 1"}])");
    EXPECT_THROW(harness::load_dataset(dir), MalformedDataset);
    util::write_file_atomic(dir / "dev.json", R"([{"db_id": "other", "question": "q", "SQL": "SELECT 1"}])");
    EXPECT_THROW(harness::load_dataset(dir), MalformedDataset);
    util::write_file_atomic(dir / "dev.json", R"([{"question_id": "7", "db_id": "codebase", "question": "q", "SQL": "x"}])");
    EXPECT_THROW(harness::load_dataset(dir), MalformedDataset);
    fs::remove_all(dir);
}

TEST(Dataset, GoldOverride) {
    auto dir = fixture_root() / "dataset";
    auto tmp = mci::testing::temp_dir("override");
    util::write_file_atomic(tmp / "fix.json", R"([{"question_id": 2, "SQL": "SELECT 2", "evidence": "new"}])");
    auto samples = harness::load_dataset(dir, tmp / "fix.json");
    EXPECT_EQ(samples[1].gold_sql, "SELECT 2");
    EXPECT_EQ(samples[1].evidence, "new");
    EXPECT_EQ(samples[0].gold_sql, harness::load_dataset(dir)[0].gold_sql);
    util::write_file_atomic(tmp / "unknown.json", R"([{"question_id": 99, "SQL": "SELECT 2"}])");
    EXPECT_THROW(harness::load_dataset(dir, tmp / "unknown.json"), MalformedDataset);
    EXPECT_THROW(harness::load_dataset(dir, tmp / "absent.json"), FileNotFound);
    fs::remove_all(tmp);
}

TEST(Config, RoundTripAndValidation) {
    harness::Config c;
    c.model = "m";
    c.cache_dir = "/tmp/c";
    c.workers = 2;
    auto back = harness::config_from_json(harness::to_json(c));
    EXPECT_EQ(harness::to_json(back), harness::to_json(c));
    EXPECT_THROW(harness::config_from_json({{"modle", "x"}}), ConfigError);
    EXPECT_THROW(harness::config_from_json({{"provider", "carrier-pigeon"}}), ConfigError);
    EXPECT_THROW(harness::config_from_json({{"max_rounds", 0}}), ConfigError);
    EXPECT_THROW(harness::config_from_json({{"max_rounds", "six"}}), ConfigError);
    EXPECT_THROW(harness::config_from_json({{"cache_mode", "sometimes"}}), ConfigError);
    EXPECT_THROW(harness::make_provider(harness::config_from_json({{"provider", "replay"}})), ConfigError);
    EXPECT_THROW(harness::load_config("/nonexistent/config.json"), ConfigError);
}

TEST(Config, ProfilePath) {
    harness::Config c;
    EXPECT_EQ(harness::profile_path(c, "/d/x/x.sqlite"), fs::path("/d/x/x.profile.json"));
    c.profile_dir = "/p";
    EXPECT_EQ(harness::profile_path(c, "/d/x/x.sqlite"), fs::path("/p/x.profile.json"));
}

TEST(Bench, ReplayedRunScoresAndWritesReports) {
    auto config = harness::load_config(replay_fixture());
    auto samples = harness::load_dataset(fixture_root() / "dataset");
    auto run = mci::testing::temp_dir("bench_run");
    auto report = harness::run_benchmark(config, samples, run);
    EXPECT_EQ(report.overall.count, 3);
    EXPECT_EQ(report.overall.correct, 2);
    EXPECT_EQ(report.by_difficulty.size(), 3u);
    for (const auto* name : {"report.json", "summary.txt", "cost.json", "cost.txt", "timings.json"})
        EXPECT_TRUE(fs::exists(run / name)) << name;
    for (const auto& r : report.per_sample) EXPECT_EQ(r.error, "") << r.question_id;
    auto summary = util::read_file(run / "summary.txt");
    EXPECT_NE(summary.find("EX: "), std::string::npos);
    EXPECT_NE(summary.find("(2/3)"), std::string::npos);

    auto cost = harness::cost_report(report, config);
    ASSERT_EQ(cost.size(), 6u);
    EXPECT_EQ(cost[0].phase, "Pipeline");
    double sum = 0;
    for (std::size_t i = 1; i < cost.size(); ++i) sum += cost[i].output_tokens;
    EXPECT_NEAR(cost[0].output_tokens, sum, 1e-9);
    EXPECT_GT(cost[0].output_tokens, 0.0);
    fs::remove_all(run);
}

TEST(Bench, ResumeSkipsRecordedSamples) {
    auto config = harness::load_config(replay_fixture());
    auto samples = harness::load_dataset(fixture_root() / "dataset");
    auto run = mci::testing::temp_dir("resume_run");
    auto first = harness::run_benchmark(config, samples, run);
    auto kept = util::read_file(run / "samples" / "1.json");
    fs::remove(run / "samples" / "2.json");
    auto second = harness::run_benchmark(config, samples, run);
    EXPECT_EQ(util::read_file(run / "samples" / "1.json"), kept);
    EXPECT_TRUE(fs::exists(run / "samples" / "2.json"));
    EXPECT_EQ(harness::report_to_json(second), harness::report_to_json(first));
    EXPECT_EQ(harness::load_records(run).size(), 3u);
    fs::remove_all(run);
}

TEST(Bench, ReplayMissIsRecordedAsSampleError) {
    auto config = harness::load_config(replay_fixture());
    auto samples = harness::load_dataset(fixture_root() / "dataset");
    samples.resize(1);
    samples[0].question = "A question the cache has never seen";
    auto run = mci::testing::temp_dir("miss_run");
    auto report = harness::run_benchmark(config, samples, run);
    ASSERT_EQ(report.per_sample.size(), 1u);
    EXPECT_FALSE(report.per_sample[0].ex_correct);
    EXPECT_NE(report.per_sample[0].error, "");
    fs::remove_all(run);
}

TEST(Bench, EmptySampleListIsRejected) {
    EXPECT_THROW(harness::run_benchmark({}, {}, "/tmp/unused"), EmptyInput);
}

TEST(Report, AggregateBucketsAndRoundTrip) {
    std::vector<harness::SampleRecord> records(4);
    for (int i = 0; i < 4; ++i) {
        records[i].question_id = i;
        records[i].ex_correct = i % 2 == 0;
        records[i].interaction_count = i < 2 ? 1 : 3;
        records[i].difficulty = i == 3 ? std::optional<std::string>{} : std::optional<std::string>{"simple"};
        records[i].phases["sql_generation"] = {1, 10, 5, 0.5};
        records[i].output_tokens = 5;
    }
    auto rep = harness::aggregate(records);
    EXPECT_EQ(rep.overall.correct, 2);
    EXPECT_DOUBLE_EQ(rep.overall.ex, 0.5);
    EXPECT_EQ(rep.by_difficulty.at("simple").count, 3);
    EXPECT_EQ(rep.by_interaction_count.at(1).count, 2);
    EXPECT_EQ(rep.by_interaction_count.at(3).correct, 1);
    EXPECT_EQ(rep.phase_totals.at("sql_generation").output_tokens, 20);
    EXPECT_EQ(rep.phase_totals.count("selection"), 1u);
    EXPECT_EQ(rep.output_tokens, 20);

    auto back = harness::sample_record_from_json(harness::to_json(records[0]));
    EXPECT_EQ(harness::to_json(back), harness::to_json(records[0]));
}
