#include <algorithm>

#include "mci/generation.hpp"
#include "mci/sql/parser.hpp"
#include "mci/util.hpp"

namespace mci::gen {

namespace {

std::string state_kind(db::ExecState s) {
    switch (s) {
        case db::ExecState::Success: return "success";
        case db::ExecState::NoneValued: return "none";
        case db::ExecState::Empty: return "empty";
        case db::ExecState::Failure: break;
    }
    return "failure";
}

bool is_sql_tag(const std::string& tag) { return tag == "sql" || tag == "sqlite" || tag.empty(); }

std::vector<std::string> dependency_requests(const std::string& reply) {
    std::vector<std::string> out;
    for (const auto& line : util::split_lines(reply)) {
        auto t = util::trim(line);
        while (!t.empty() && t.front() == '`') t.erase(t.begin());
        if (util::starts_with_icase(t, kDependencyPrefix)) {
            auto target = util::trim(t.substr(std::string_view(kDependencyPrefix).size()));
            while (!target.empty() && (target.back() == '`' || target.back() == '.')) target.pop_back();
            if (!target.empty()) out.push_back(target);
        }
    }
    return out;
}

// Verdict bookkeeping shared by the standalone check and the full session.
struct VerdictStep {
    bool reprompted = false;
    bool done = false;
    bool defaulted = false;
    Verdict verdict = Verdict::No;

    // Returns the reprompt when the reply carries no verdict the first time.
    std::optional<llm::Injection> feed(const std::string& reply) {
        auto v = parse_verdict(reply);
        if (!v && !reprompted) {
            reprompted = true;
            return llm::Injection{"reprompt", verdict_reprompt()};
        }
        defaulted = !v;
        verdict = v.value_or(Verdict::No);
        done = true;
        return std::nullopt;
    }
};

llm::SessionPlan session_plan(const std::string& question, const std::string& evidence, const std::string& schema_f,
                              const std::string& sql_d, const std::vector<FewShotCase>& cases, int max_rounds,
                              double temperature) {
    llm::SessionPlan plan;
    plan.initial_prompt = generation_prompt(question, evidence, schema_f, sql_d, cases);
    plan.stop_markers = {kStopMarker};
    plan.max_rounds = max_rounds;
    plan.temperature = temperature;
    return plan;
}

std::string last_emitted(const llm::ChatTranscript& t) {
    for (auto m = t.messages.rbegin(); m != t.messages.rend(); ++m) {
        if (m->role != llm::Role::Assistant) continue;
        auto blocks = util::fenced_blocks(m->content);
        for (auto b = blocks.rbegin(); b != blocks.rend(); ++b)
            if (b->tag == kFinalTag || is_sql_tag(b->tag)) return b->body;
    }
    return {};
}

}  // namespace

SemanticCheck semantic_check(llm::Gateway& gateway, const std::string& question, const std::string& evidence,
                             const std::string& schema_f, const std::string& sql_d,
                             const std::vector<FewShotCase>& cases, double temperature) {
    VerdictStep step;
    auto plan = session_plan(question, evidence, schema_f, sql_d, cases, 2, temperature);
    SemanticCheck out;
    out.transcript = llm::run_chained_session(gateway, plan, [&](const llm::ChatTranscript&, const std::string& r) {
        return step.feed(r);
    });
    out.verdict = step.verdict;
    out.defaulted = step.defaulted;
    return out;
}

GenerationOutcome run_generation(llm::Gateway& gateway, db::Database& db, const std::string& question,
                                 const std::string& evidence, const std::string& schema_f, const std::string& sql_d,
                                 const std::vector<FewShotCase>& cases, const GenerationPlan& plan,
                                 const profile::Profile* profile, const db::RawSchema* schema) {
    GenerationOutcome out;
    VerdictStep step;
    std::optional<std::string> final_sql;
    const ExecutedSql* latest = nullptr;
    const std::size_t max_exec = static_cast<std::size_t>(std::max(plan.max_rounds, 0));
    out.executed.reserve(max_exec);

    auto find_executed = [&](const std::string& sql) -> const ExecutedSql* {
        for (const auto& e : out.executed)
            if (e.sql == sql) return &e;
        return nullptr;
    };
    // Executes new SQL, reuses outcomes of SQL seen before; nullptr once the budget is spent.
    auto run_sql = [&](const std::string& sql, std::size_t message_index) -> const ExecutedSql* {
        if (const auto* seen = find_executed(sql)) return seen;
        if (out.executed.size() >= max_exec) return nullptr;
        out.executed.push_back({sql, db.execute(sql, plan.timeout), message_index});
        return &out.executed.back();
    };

    auto controller = [&](const llm::ChatTranscript& t, const std::string& reply) -> std::optional<llm::Injection> {
        if (!step.done) {
            if (auto again = step.feed(reply)) return again;
            out.verdict = step.verdict;
            out.branch = step.verdict == Verdict::Yes ? Branch::Polish : Branch::Rewrite;
            if (out.branch == Branch::Polish) return llm::Injection{"polish", polish_instruction()};
            return llm::Injection{"rewrite", rewrite_instruction()};
        }

        const std::size_t msg_index = t.messages.size() - 1;
        auto blocks = util::fenced_blocks(reply);

        auto fin = std::find_if(blocks.rbegin(), blocks.rend(), [](const auto& b) { return b.tag == kFinalTag; });
        if (fin != blocks.rend() && !fin->body.empty()) {
            const auto* e = run_sql(fin->body, msg_index);
            if (e) latest = e;
            if (e && e->outcome.state == db::ExecState::Failure)
                return llm::Injection{"failure", correction_instruction(e->outcome, e->sql, plan.feedback_rows)};
            final_sql = fin->body;
            return std::nullopt;
        }

        std::vector<std::string> parts;
        std::string kind;
        bool ran_sql = false;
        for (const auto& b : blocks) {
            if (!is_sql_tag(b.tag) || b.body.empty()) continue;
            const auto* e = run_sql(b.body, msg_index);
            if (!e) break;
            latest = e;
            ran_sql = true;
            parts.push_back(correction_instruction(e->outcome, e->sql, plan.feedback_rows));
            kind = state_kind(e->outcome.state);
            if (e->outcome.state != db::ExecState::Success) break;
        }
        for (const auto& target : dependency_requests(reply)) {
            auto dot = target.find('.');
            std::string text;
            if (dot == std::string::npos || !schema) {
                text = "`" + target + "` has no recorded dependencies.";
            } else {
                try {
                    static const profile::Profile kEmpty;
                    text = dependency_tool(profile ? *profile : kEmpty, *schema, target.substr(0, dot),
                                           target.substr(dot + 1));
                } catch (const UnknownColumn&) {
                    text = "Unknown column `" + target + "`.";
                }
            }
            parts.push_back(text);
            if (kind.empty()) kind = "dependency";
        }

        if (parts.empty()) {
            if (latest && latest->outcome.state == db::ExecState::Success) {
                final_sql = latest->sql;
                return std::nullopt;
            }
            return llm::Injection{"continue", continue_instruction()};
        }
        if (ran_sql && out.branch == Branch::Rewrite && kind == "success")
            parts.push_back(next_subquestion_instruction());
        return llm::Injection{kind, util::join(parts, "\n\n")};
    };

    auto session = session_plan(question, evidence, schema_f, sql_d, cases, plan.max_rounds, plan.temperature);
    try {
        out.transcript = llm::run_chained_session(gateway, session, controller);
        out.sql_g = final_sql.value_or(last_emitted(out.transcript));
    } catch (const llm::RoundBudgetExhausted& e) {
        out.transcript = e.transcript();
        out.budget_exhausted = true;
        const ExecutedSql* best = nullptr;
        auto rank = [](db::ExecState s) {
            switch (s) {
                case db::ExecState::Success: return 3;
                case db::ExecState::NoneValued: return 2;
                case db::ExecState::Empty: return 1;
                case db::ExecState::Failure: break;
            }
            return 0;
        };
        for (const auto& ex : out.executed)
            if (rank(ex.outcome.state) > 0 && (!best || rank(ex.outcome.state) >= rank(best->outcome.state)))
                best = &ex;
        out.sql_g = best ? best->sql : last_emitted(out.transcript);
    }
    if (util::trim(out.sql_g).empty()) out.sql_g = sql_d;
    if (!step.done) {
        out.verdict = Verdict::No;
        out.branch = Branch::Rewrite;
    }
    out.parsed = sql::parses(out.sql_g);
    out.interaction_count = static_cast<int>(out.executed.size());
    out.rules = extract_rules(out.transcript, out.executed);
    return out;
}

}  // namespace mci::gen
