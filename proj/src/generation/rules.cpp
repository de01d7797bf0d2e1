#include <algorithm>
#include <set>

#include "mci/generation.hpp"
#include "mci/sql/parser.hpp"
#include "mci/util.hpp"

namespace mci::gen {

namespace {

struct Analyzed {
    std::set<std::string> predicates;
    std::set<std::string> tables;
};

std::optional<Analyzed> analyze(const std::string& text) {
    try {
        auto select = sql::parse_select(text);
        Analyzed a;
        for (auto& p : sql::predicates(select)) a.predicates.insert(std::move(p));
        for (auto& t : sql::referenced_tables(select)) a.tables.insert(std::move(t));
        return a;
    } catch (const sql::ParseError&) {
        return std::nullopt;
    }
}

std::set<std::string> intersect(const std::set<std::string>& a, const std::set<std::string>& b) {
    std::set<std::string> out;
    std::set_intersection(a.begin(), a.end(), b.begin(), b.end(), std::inserter(out, out.end()));
    return out;
}

// The Success SQL the model ended on, located through the transcript so the
// answer does not depend on the order of `executed`.
const ExecutedSql* final_success(const llm::ChatTranscript& transcript, const std::vector<ExecutedSql>& executed) {
    auto lookup = [&](const std::string& body) -> const ExecutedSql* {
        for (const auto& e : executed)
            if (e.sql == body && e.outcome.state == db::ExecState::Success) return &e;
        return nullptr;
    };
    for (auto m = transcript.messages.rbegin(); m != transcript.messages.rend(); ++m) {
        if (m->role != llm::Role::Assistant) continue;
        auto blocks = util::fenced_blocks(m->content);
        for (auto b = blocks.rbegin(); b != blocks.rend(); ++b)
            if (const auto* e = lookup(b->body)) return e;
    }
    const ExecutedSql* best = nullptr;
    for (const auto& e : executed)
        if (e.outcome.state == db::ExecState::Success && (!best || e.message_index >= best->message_index)) best = &e;
    return best;
}

}  // namespace

RuleSet extract_rules(const llm::ChatTranscript& transcript, const std::vector<ExecutedSql>& executed) {
    std::vector<Analyzed> successes, empties;
    for (const auto& e : executed) {
        if (e.outcome.state != db::ExecState::Success && e.outcome.state != db::ExecState::Empty) continue;
        auto a = analyze(e.sql);
        if (!a) continue;
        (e.outcome.state == db::ExecState::Success ? successes : empties).push_back(std::move(*a));
    }

    RuleSet rules;
    if (successes.empty()) return rules;

    std::set<std::string> common_preds = successes.front().predicates;
    std::set<std::string> common_tables = successes.front().tables;
    for (std::size_t i = 1; i < successes.size(); ++i) {
        common_preds = intersect(common_preds, successes[i].predicates);
        common_tables = intersect(common_tables, successes[i].tables);
    }
    for (const auto& p : common_preds) {
        bool removal_emptied = std::any_of(empties.begin(), empties.end(),
                                           [&](const Analyzed& e) { return !e.predicates.count(p); });
        if (removal_emptied) rules.condition_rules.push_back(p);
    }
    rules.table_rules.assign(common_tables.begin(), common_tables.end());

    if (const auto* fin = final_success(transcript, executed)) {
        auto final_preds = analyze(fin->sql);
        std::set<std::string> negative;
        for (const auto& e : empties)
            for (const auto& p : e.predicates)
                if (!final_preds || !final_preds->predicates.count(p)) negative.insert(p);
        rules.negative_constraints.assign(negative.begin(), negative.end());
    }
    return rules;
}

RuleSet summarize_rules(llm::Gateway& gateway, const RuleSet& rules, const std::string& question) {
    RuleSet out = rules;
    if (rules.condition_rules.empty() && rules.table_rules.empty() && rules.negative_constraints.empty())
        return out;
    std::string prompt =
        "The rules below were collected while writing SQL for the question. Restate each rule as one short "
        "instruction for a later SQL reviewer. Write one instruction per line, each starting with \"- \".\n"
        "# Rules:\n" +
        render_rules(rules) + "\n# Question: " + question;
    auto reply = gateway.complete({{llm::Role::User, prompt}}, 0.0);
    for (const auto& line : util::split_lines(reply.text)) {
        auto t = util::trim(line);
        if (t.rfind("- ", 0) == 0 && t.size() > 2) out.notes.push_back(util::trim(t.substr(2)));
    }
    return out;
}

std::string dependency_tool(const profile::Profile& profile, const db::RawSchema& schema, std::string_view table,
                            std::string_view column) {
    const auto* t = schema.find_table(table);
    const auto* c = t ? t->find_column(column) : nullptr;
    if (!c) throw UnknownColumn("unknown column " + std::string(table) + "." + std::string(column));
    const ColumnId self{t->name, c->name};
    const std::string me = "`" + self.str() + "`";

    std::vector<std::string> lines;
    for (const auto& d : profile.dependencies) {
        bool self_a = d.a == self;
        if (!self_a && d.b != self) continue;
        const ColumnId& partner = self_a ? d.b : d.a;
        const std::string other = "`" + partner.str() + "`";
        bool determines = self_a ? d.fd_ab : d.fd_ba;
        bool determined = self_a ? d.fd_ba : d.fd_ab;
        if (determines && determined) {
            lines.push_back("Each " + me + " value maps to exactly one " + other + " value and vice versa (1:1).");
        } else if (determines) {
            lines.push_back("Each " + me + " value maps to exactly one " + other + " value, but one " + other +
                            " value can go with several " + me + " values (N:1, " + me + " is the many side).");
        } else if (determined) {
            lines.push_back("Each " + other + " value maps to exactly one " + me + " value, but one " + me +
                            " value can go with several " + other + " values (1:N, " + other +
                            " is the many side).");
        } else {
            lines.push_back(me + " and " + other + " do not determine each other (N:M).");
        }
    }
    for (const auto& r : profile.relations) {
        if (r.a != self && r.b != self) continue;
        const ColumnId& partner = r.a == self ? r.b : r.a;
        std::string text = r.kind == profile::RelationKind::Duplicate ? " holds the same values as "
                                                                      : " is similar to but differs from ";
        lines.push_back(me + text + "`" + partner.str() + "`" +
                        (r.join_path ? " (join: " + *r.join_path + ")." : "."));
    }
    if (lines.empty()) return me + " has no recorded dependencies.";
    return "Dependencies of " + me + ":\n" + util::join(lines, "\n");
}

}  // namespace mci::gen
