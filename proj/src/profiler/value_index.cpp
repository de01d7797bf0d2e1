#include <algorithm>
#include <cmath>
#include <set>

#include "mci/profiler.hpp"
#include "mci/util.hpp"

namespace mci::profile {

void ValueIndex::add_column(const ColumnId& column, std::vector<std::string> values) {
    std::sort(values.begin(), values.end());
    values.erase(std::unique(values.begin(), values.end()), values.end());

    Corpus corpus;
    corpus.docs = std::move(values);
    corpus.lengths.resize(corpus.docs.size());
    double total = 0;
    for (std::uint32_t d = 0; d < corpus.docs.size(); ++d) {
        auto tokens = util::alnum_tokens(corpus.docs[d]);
        corpus.lengths[d] = static_cast<std::uint32_t>(tokens.size());
        total += static_cast<double>(tokens.size());
        std::sort(tokens.begin(), tokens.end());
        for (std::size_t i = 0; i < tokens.size();) {
            std::size_t j = i;
            while (j < tokens.size() && tokens[j] == tokens[i]) ++j;
            corpus.postings[tokens[i]].push_back({d, static_cast<std::uint32_t>(j - i)});
            i = j;
        }
    }
    corpus.avgdl = corpus.docs.empty() ? 0.0 : total / static_cast<double>(corpus.docs.size());

    if (!corpora_.count(column)) order_.push_back(column);
    corpora_[column] = std::move(corpus);
}

std::size_t ValueIndex::document_count(const ColumnId& column) const {
    auto it = corpora_.find(column);
    return it == corpora_.end() ? 0 : it->second.docs.size();
}

std::vector<ValueIndex::Hit> ValueIndex::search(const ColumnId& column,
                                                const std::vector<std::string>& query_terms,
                                                std::size_t k) const {
    auto it = corpora_.find(column);
    if (it == corpora_.end() || k == 0) return {};
    const Corpus& c = it->second;
    const double n = static_cast<double>(c.docs.size());

    std::set<std::string> unique(query_terms.begin(), query_terms.end());
    std::map<std::uint32_t, double> scores;
    for (const auto& term : unique) {
        auto p = c.postings.find(term);
        if (p == c.postings.end()) continue;
        const double df = static_cast<double>(p->second.size());
        const double idf = std::log((n - df + 0.5) / (df + 0.5) + 1.0);
        for (const auto& posting : p->second) {
            const double tf = posting.tf;
            const double norm = kK1 * (1.0 - kB + kB * c.lengths[posting.doc] / c.avgdl);
            scores[posting.doc] += idf * tf * (kK1 + 1.0) / (tf + norm);
        }
    }

    std::vector<std::pair<std::uint32_t, double>> ranked(scores.begin(), scores.end());
    std::sort(ranked.begin(), ranked.end(), [](const auto& x, const auto& y) {
        if (x.second != y.second) return x.second > y.second;
        return x.first < y.first;
    });

    std::vector<Hit> out;
    for (const auto& [doc, score] : ranked) {
        if (out.size() >= k) break;
        out.push_back({c.docs[doc], score});
    }
    // Documents are kept in text order, so the zero-score fill is already
    // lexicographic.
    for (std::uint32_t d = 0; d < c.docs.size() && out.size() < k; ++d)
        if (!scores.count(d)) out.push_back({c.docs[d], 0.0});
    return out;
}

ValueIndex build_value_index(db::Database& db, const db::RawSchema& schema,
                             const std::vector<ColumnProfile>& profiles, const ProfileOptions& opts) {
    ValueIndex index;
    for (const auto& table : schema.tables) {
        for (const auto& col : table.columns) {
            ColumnId id{table.name, col.name};
            auto prof = std::find_if(profiles.begin(), profiles.end(),
                                     [&](const ColumnProfile& p) { return p.id() == id; });
            bool numeric = prof != profiles.end() ? prof->numeric : [&] {
                auto a = type_affinity(col.declared_type);
                return a == Affinity::Integer || a == Affinity::Real;
            }();
            if (numeric) continue;

            const std::string c = db::quote_ident(col.name);
            std::vector<std::string> values;
            db.for_each_row(
                "SELECT " + c + " FROM " + db::quote_ident(table.name) + " WHERE typeof(" + c +
                    ") = 'text' AND LENGTH(" + c + ") <= " + std::to_string(opts.index_max_value_length) +
                    " GROUP BY " + c + " ORDER BY COUNT(*) DESC, " + c + " LIMIT " +
                    std::to_string(opts.index_cap),
                [&](const db::Row& row) { values.push_back(std::get<std::string>(row.at(0))); },
                opts.timeout);
            if (!values.empty()) index.add_column(id, std::move(values));
        }
    }
    return index;
}

std::map<ColumnId, std::vector<std::string>> retrieve_examples(const ValueIndex& index,
                                                               std::string_view question, std::size_t k) {
    auto terms = util::alnum_tokens(question);
    std::map<ColumnId, std::vector<std::string>> out;
    for (const auto& col : index.columns()) {
        auto& values = out[col];
        for (auto& hit : index.search(col, terms, k)) values.push_back(std::move(hit.value));
    }
    return out;
}

}  // namespace mci::profile
