#include <gtest/gtest.h>

#include "criteria.hpp"
#include "fixture.hpp"
#include "mci/selection.hpp"
#include "mci/util.hpp"

using namespace mci;
using profile::ContextMode;

namespace {

select::CandidateSql candidate(int ordinal, ContextMode mode, double temp, std::optional<std::int64_t> value) {
    select::CandidateSql c;
    c.sql = "SELECT " + std::to_string(ordinal);
    c.mode = mode;
    c.temperature = temp;
    c.ordinal = ordinal;
    if (value) {
        c.outcome.state = db::ExecState::Success;
        c.outcome.result = db::ResultSet{};
        c.outcome.result->rows = {{db::Cell(*value)}};
        c.outcome.result->total_row_count = 1;
    } else {
        c.outcome.state = db::ExecState::Failure;
        c.outcome.error_message = "boom";
    }
    return c;
}

}  // namespace

TEST(Criteria, VotingRules) {
    auto r = mci::testing::check_voting();
    EXPECT_TRUE(r.pass) << r.detail;
}

TEST(Schedule, DefaultHasNineEntries) {
    auto s = select::default_schedule();
    ASSERT_EQ(s.size(), 9u);
    EXPECT_EQ(std::count_if(s.begin(), s.end(), [](auto& e) { return e.mode == ContextMode::Partial; }), 4);
    EXPECT_EQ(s.front(), (select::ScheduleEntry{ContextMode::Partial, 0.1}));
    EXPECT_EQ(s.back(), (select::ScheduleEntry{ContextMode::Complete, 1.0}));
    EXPECT_EQ(select::candidate_schedule("default"), s);
    EXPECT_EQ(select::candidate_schedule("single").size(), 1u);
}

TEST(Schedule, FileAndErrors) {
    auto dir = mci::testing::temp_dir("schedule");
    util::write_file_atomic(dir / "s.json", R"([{"mode": "Partial", "temperature": 0.3}])");
    auto s = select::candidate_schedule((dir / "s.json").string());
    EXPECT_EQ(s, (select::Schedule{{ContextMode::Partial, 0.3}}));
    util::write_file_atomic(dir / "bad_mode.json", R"([{"mode": "Loud", "temperature": 0.3}])");
    EXPECT_THROW(select::candidate_schedule((dir / "bad_mode.json").string()), ConfigError);
    util::write_file_atomic(dir / "hot.json", R"([{"mode": "Complete", "temperature": 3}])");
    EXPECT_THROW(select::candidate_schedule((dir / "hot.json").string()), ConfigError);
    util::write_file_atomic(dir / "empty.json", "[]");
    EXPECT_THROW(select::candidate_schedule((dir / "empty.json").string()), ConfigError);
    EXPECT_THROW(select::candidate_schedule((dir / "missing.json").string()), ConfigError);
    std::filesystem::remove_all(dir);
}

TEST(Vote, MajorityWins) {
    std::vector<select::CandidateSql> c = {candidate(0, ContextMode::Complete, 0.1, 1),
                                           candidate(1, ContextMode::Partial, 0.4, 2),
                                           candidate(2, ContextMode::Partial, 1.0, 2)};
    auto d = select::vote_detail(c);
    EXPECT_EQ(d.winner, 1u);
    EXPECT_EQ(d.groups.size(), 2u);
    EXPECT_FALSE(d.all_failed);
}

TEST(Vote, TieGoesToLowestCompleteTemperature) {
    std::vector<select::CandidateSql> c = {candidate(0, ContextMode::Partial, 0.1, 1),
                                           candidate(1, ContextMode::Complete, 0.4, 1),
                                           candidate(2, ContextMode::Complete, 0.1, 2),
                                           candidate(3, ContextMode::Partial, 0.1, 2)};
    EXPECT_EQ(select::vote(c).ordinal, 2);
}

TEST(Vote, FailuresNeverWinUnlessAllFail) {
    std::vector<select::CandidateSql> c = {candidate(0, ContextMode::Complete, 0.1, std::nullopt),
                                           candidate(1, ContextMode::Complete, 0.1, std::nullopt),
                                           candidate(2, ContextMode::Partial, 1.0, 5)};
    EXPECT_EQ(select::vote(c).ordinal, 2);
    std::vector<select::CandidateSql> failed = {candidate(3, ContextMode::Complete, 0.1, std::nullopt),
                                                candidate(1, ContextMode::Complete, 0.1, std::nullopt)};
    auto d = select::vote_detail(failed);
    EXPECT_TRUE(d.all_failed);
    EXPECT_EQ(failed[d.winner].ordinal, 1);
    EXPECT_THROW(select::vote({}), NoCandidates);
}
