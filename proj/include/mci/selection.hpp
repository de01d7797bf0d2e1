#pragma once

#include <string>
#include <vector>

#include "mci/dbcore.hpp"
#include "mci/profiler.hpp"

namespace mci::select {

struct ScheduleEntry {
    profile::ContextMode mode = profile::ContextMode::Complete;
    double temperature = 0.0;

    bool operator==(const ScheduleEntry&) const = default;
};

using Schedule = std::vector<ScheduleEntry>;

Schedule default_schedule();
Schedule single_schedule();

// Accepts "default", "single" or a JSON file holding [{"mode": ..., "temperature": ...}, ...].
Schedule candidate_schedule(const std::string& spec);
Schedule validate_schedule(Schedule s);

struct CandidateSql {
    std::string sql;
    profile::ContextMode mode = profile::ContextMode::Complete;
    double temperature = 0.0;
    db::ExecutionOutcome outcome;
    int ordinal = 0;
};

struct VoteResult {
    std::size_t winner = 0;  // index into the candidate list
    std::vector<std::vector<std::size_t>> groups;  // non-Failure groups, first-seen order
    bool all_failed = false;
};

VoteResult vote_detail(const std::vector<CandidateSql>& candidates, const db::CompareOptions& opts = {});
const CandidateSql& vote(const std::vector<CandidateSql>& candidates, const db::CompareOptions& opts = {});

}  // namespace mci::select
