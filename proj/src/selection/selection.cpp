#include "mci/selection.hpp"

#include <algorithm>
#include <limits>
#include <tuple>

#include <json.hpp>

#include "mci/util.hpp"

namespace mci::select {

using profile::ContextMode;

Schedule default_schedule() {
    Schedule s;
    for (double t : {0.1, 0.4, 0.4, 1.0}) s.push_back({ContextMode::Partial, t});
    for (double t : {0.1, 0.1, 0.4, 0.4, 1.0}) s.push_back({ContextMode::Complete, t});
    return s;
}

Schedule single_schedule() { return {{ContextMode::Complete, 0.1}}; }

Schedule validate_schedule(Schedule s) {
    if (s.empty()) throw ConfigError("candidate schedule is empty");
    for (const auto& e : s)
        if (e.temperature < 0.0 || e.temperature > 2.0)
            throw ConfigError("schedule temperature out of range [0, 2]: " + util::format_double(e.temperature));
    return s;
}

Schedule candidate_schedule(const std::string& spec) {
    if (spec.empty() || spec == "default") return default_schedule();
    if (spec == "single") return single_schedule();
    if (!std::filesystem::exists(spec)) throw ConfigError("schedule file not found: " + spec);
    Schedule s;
    try {
        auto doc = nlohmann::json::parse(util::read_file(spec));
        for (const auto& e : doc)
            s.push_back({profile::context_mode_from_string(e.at("mode").get<std::string>()),
                         e.at("temperature").get<double>()});
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("bad schedule file " + spec + ": " + e.what());
    } catch (const Error& e) {
        throw ConfigError("bad schedule file " + spec + ": " + e.what());
    }
    return validate_schedule(std::move(s));
}

namespace {

bool same_result(const CandidateSql& a, const CandidateSql& b, const db::CompareOptions& opts) {
    try {
        return db::results_equivalent(*a.outcome.result, *b.outcome.result, opts);
    } catch (const IncomparableTruncated&) {
        return false;
    }
}

// Lower is better: Complete before Partial, then temperature, then ordinal.
auto member_key(const CandidateSql& c) {
    return std::make_tuple(c.mode == ContextMode::Partial, c.temperature, c.ordinal);
}

}  // namespace

VoteResult vote_detail(const std::vector<CandidateSql>& candidates, const db::CompareOptions& opts) {
    if (candidates.empty()) throw NoCandidates("no candidates to vote on");
    VoteResult out;
    for (std::size_t i = 0; i < candidates.size(); ++i) {
        const auto& c = candidates[i];
        if (c.outcome.state == db::ExecState::Failure || !c.outcome.result) continue;
        auto g = std::find_if(out.groups.begin(), out.groups.end(),
                              [&](const auto& grp) { return same_result(candidates[grp.front()], c, opts); });
        if (g == out.groups.end()) out.groups.push_back({i});
        else g->push_back(i);
    }

    if (out.groups.empty()) {
        out.all_failed = true;
        out.winner = 0;
        for (std::size_t i = 1; i < candidates.size(); ++i)
            if (candidates[i].ordinal < candidates[out.winner].ordinal) out.winner = i;
        return out;
    }

    auto group_key = [&](const std::vector<std::size_t>& g) {
        double complete_temp = std::numeric_limits<double>::infinity();
        int min_ordinal = std::numeric_limits<int>::max();
        for (auto i : g) {
            if (candidates[i].mode == ContextMode::Complete)
                complete_temp = std::min(complete_temp, candidates[i].temperature);
            min_ordinal = std::min(min_ordinal, candidates[i].ordinal);
        }
        return std::make_tuple(-static_cast<long long>(g.size()), complete_temp, min_ordinal);
    };
    const auto* best = &out.groups.front();
    for (const auto& g : out.groups)
        if (group_key(g) < group_key(*best)) best = &g;

    out.winner = *std::min_element(best->begin(), best->end(), [&](std::size_t a, std::size_t b) {
        return member_key(candidates[a]) < member_key(candidates[b]);
    });
    return out;
}

const CandidateSql& vote(const std::vector<CandidateSql>& candidates, const db::CompareOptions& opts) {
    return candidates[vote_detail(candidates, opts).winner];
}

}  // namespace mci::select
