#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>

#include <json.hpp>

#include "mci/generation.hpp"
#include "mci/util.hpp"

namespace mci::gen {

namespace {

bool word_char(char c) { return std::isalnum(static_cast<unsigned char>(c)) || c == '_'; }

std::vector<std::string> skeleton_tokens(std::string_view skeleton) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : skeleton) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

}  // namespace

std::string mask_question(std::string_view q, const std::set<std::string>& schema_tokens) {
    std::vector<std::string> tokens;
    std::size_t i = 0;
    while (i < q.size()) {
        char c = q[i];
        if (c == '\'' || c == '"' || c == '`') {
            std::size_t close = q.find(c, i + 1);
            if (close != std::string_view::npos) {
                tokens.push_back("<STR>");
                i = close + 1;
                continue;
            }
            ++i;
            continue;
        }
        if (std::isdigit(static_cast<unsigned char>(c))) {
            while (i < q.size() && (std::isdigit(static_cast<unsigned char>(q[i])) ||
                                    (q[i] == '.' && i + 1 < q.size() &&
                                     std::isdigit(static_cast<unsigned char>(q[i + 1])))))
                ++i;
            if (i < q.size() && word_char(q[i])) {
                // Part of a word such as "3rd" or "A1B": keep it as a word.
                std::size_t start = i;
                while (start > 0 && word_char(q[start - 1])) --start;
                while (i < q.size() && word_char(q[i])) ++i;
                tokens.push_back(util::to_lower(q.substr(start, i - start)));
                continue;
            }
            tokens.push_back("<NUM>");
            continue;
        }
        if (word_char(c)) {
            std::size_t start = i;
            while (i < q.size() && word_char(q[i])) ++i;
            std::string w = util::to_lower(q.substr(start, i - start));
            tokens.push_back(schema_tokens.count(w) ? "<COL>" : w);
            continue;
        }
        ++i;
    }
    return util::join(tokens, " ");
}

std::set<std::string> schema_tokens(const db::RawSchema& schema) {
    std::set<std::string> out;
    auto add = [&](const std::string& name) {
        if (!name.empty() && std::all_of(name.begin(), name.end(), word_char)) out.insert(util::to_lower(name));
    };
    for (const auto& t : schema.tables) {
        add(t.name);
        for (const auto& c : t.columns) add(c.name);
    }
    return out;
}

FewShotStore::FewShotStore(std::vector<FewShotCase> cases) : cases_(std::move(cases)) {}

void FewShotStore::add(std::string question, std::string sql, const std::set<std::string>& tokens) {
    FewShotCase c;
    c.skeleton = mask_question(question, tokens);
    c.question = std::move(question);
    c.sql = std::move(sql);
    cases_.push_back(std::move(c));
}

FewShotStore FewShotStore::load(const std::filesystem::path& path, const std::set<std::string>& tokens) {
    std::ifstream in(path);
    if (!in) throw FileNotFound("few-shot store not found: " + path.string());
    FewShotStore store;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        try {
            auto j = nlohmann::json::parse(line);
            store.add(j.at("question").get<std::string>(), j.at("sql").get<std::string>(), tokens);
        } catch (const nlohmann::json::exception& e) {
            throw MalformedDataset(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
    return store;
}

std::vector<FewShotCase> retrieve_similar_cases(const FewShotStore& store, std::string_view question, std::size_t k,
                                                const std::set<std::string>& tokens) {
    const auto& cases = store.cases();
    if (cases.empty() || k == 0) return {};
    const std::string query = mask_question(question, tokens);
    auto query_terms = skeleton_tokens(query);
    std::sort(query_terms.begin(), query_terms.end());
    query_terms.erase(std::unique(query_terms.begin(), query_terms.end()), query_terms.end());

    std::vector<std::vector<std::string>> docs;
    std::map<std::string, std::size_t> df;
    double total = 0;
    for (const auto& c : cases) {
        docs.push_back(skeleton_tokens(c.skeleton));
        total += static_cast<double>(docs.back().size());
        std::set<std::string> seen(docs.back().begin(), docs.back().end());
        for (const auto& t : seen) ++df[t];
    }
    const double n = static_cast<double>(cases.size());
    const double avgdl = total / n;
    constexpr double k1 = 1.2, b = 0.75;

    std::vector<std::pair<double, std::size_t>> scored;
    for (std::size_t d = 0; d < docs.size(); ++d) {
        double score = 0;
        if (cases[d].skeleton == query) {
            score = std::numeric_limits<double>::infinity();
        } else {
            for (const auto& term : query_terms) {
                auto it = df.find(term);
                if (it == df.end()) continue;
                double tf = static_cast<double>(std::count(docs[d].begin(), docs[d].end(), term));
                if (tf == 0) continue;
                double idf = std::log((n - it->second + 0.5) / (it->second + 0.5) + 1.0);
                double dl = static_cast<double>(docs[d].size());
                score += idf * tf * (k1 + 1) / (tf + k1 * (1 - b + b * (avgdl > 0 ? dl / avgdl : 0)));
            }
        }
        if (score > 0) scored.emplace_back(score, d);
    }
    std::stable_sort(scored.begin(), scored.end(), [](const auto& x, const auto& y) { return x.first > y.first; });
    std::vector<FewShotCase> out;
    for (std::size_t i = 0; i < scored.size() && i < k; ++i) out.push_back(cases[scored[i].second]);
    return out;
}

}  // namespace mci::gen
