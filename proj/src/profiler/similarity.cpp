#include <algorithm>
#include <cmath>
#include <deque>
#include <map>
#include <set>

#include "mci/profiler.hpp"
#include "mci/util.hpp"

namespace mci::profile {

std::vector<float> TrigramEmbedder::embed(std::string_view text) const {
    std::vector<float> v(dims_, 0.0f);
    std::string padded = " " + std::string(text) + " ";
    for (std::size_t i = 0; i + 3 <= padded.size(); ++i) {
        // FNV-1a over the three bytes.
        std::uint32_t h = 2166136261u;
        for (std::size_t k = i; k < i + 3; ++k) {
            h ^= static_cast<unsigned char>(padded[k]);
            h *= 16777619u;
        }
        v[h % dims_] += 1.0f;
    }
    return v;
}

double cosine(const std::vector<float>& a, const std::vector<float>& b) {
    double dot = 0, na = 0, nb = 0;
    for (std::size_t i = 0; i < a.size() && i < b.size(); ++i) {
        dot += static_cast<double>(a[i]) * b[i];
        na += static_cast<double>(a[i]) * a[i];
        nb += static_cast<double>(b[i]) * b[i];
    }
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

namespace {

std::string split_words(std::string_view s) {
    std::string out;
    for (std::size_t i = 0; i < s.size(); ++i) {
        char c = s[i];
        bool boundary = i > 0 && std::isupper(static_cast<unsigned char>(c)) &&
                        (std::islower(static_cast<unsigned char>(s[i - 1])) ||
                         std::isdigit(static_cast<unsigned char>(s[i - 1])));
        if (boundary) out.push_back(' ');
        out.push_back(c);
    }
    return out;
}

const std::set<std::string>& stopwords() {
    static const std::set<std::string> words = {"the", "of", "a", "an", "s", "is", "in", "to", "and",
                                                "for", "this", "that", "which", "by", "on", "with"};
    return words;
}

}  // namespace

std::string similarity_text(const ColumnProfile& p) {
    std::string raw = split_words(p.table) + " " + split_words(p.column);
    if (p.description) raw += " " + *p.description;
    std::vector<std::string> kept;
    for (auto& w : util::alnum_tokens(raw))
        if (!stopwords().count(w)) kept.push_back(std::move(w));
    return util::join(kept, " ");
}

std::vector<std::pair<ColumnId, ColumnId>> similarity_candidates(const db::RawSchema& schema,
                                                                 const std::vector<ColumnProfile>& profiles,
                                                                 const Embedder& embedder,
                                                                 double threshold) {
    std::vector<const ColumnProfile*> cols;
    for (const auto& t : schema.tables)
        for (const auto& c : t.columns)
            for (const auto& p : profiles)
                if (p.table == t.name && p.column == c.name) cols.push_back(&p);

    std::vector<std::vector<float>> vecs;
    vecs.reserve(cols.size());
    for (const auto* p : cols) vecs.push_back(embedder.embed(similarity_text(*p)));

    std::vector<std::pair<ColumnId, ColumnId>> out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (std::size_t j = i + 1; j < cols.size(); ++j) {
            if (cols[i]->table == cols[j]->table) continue;
            if (cosine(vecs[i], vecs[j]) < threshold) continue;
            ColumnId a = cols[i]->id(), b = cols[j]->id();
            if (b < a) std::swap(a, b);
            out.emplace_back(std::move(a), std::move(b));
        }
    }
    std::sort(out.begin(), out.end());
    return out;
}

std::optional<std::string> fk_join_path(const db::RawSchema& schema, std::string_view from_table,
                                        std::string_view to_table) {
    struct Edge {
        std::string to;
        std::string condition;
    };
    std::map<std::string, std::vector<Edge>> graph;
    for (const auto& t : schema.tables) {
        for (const auto& fk : t.foreign_keys) {
            const auto* target = schema.find_table(fk.to_table);
            if (!target) continue;
            std::string cond = t.name + "." + fk.from_column + " = " + target->name + "." + fk.to_column;
            graph[util::to_lower(t.name)].push_back({util::to_lower(target->name), cond});
            graph[util::to_lower(target->name)].push_back({util::to_lower(t.name), cond});
        }
    }
    const std::string src = util::to_lower(from_table), dst = util::to_lower(to_table);
    if (src == dst) return std::nullopt;

    std::map<std::string, std::pair<std::string, std::string>> parent;  // node -> (prev, condition)
    std::deque<std::string> queue{src};
    std::set<std::string> seen{src};
    while (!queue.empty()) {
        auto node = queue.front();
        queue.pop_front();
        if (node == dst) break;
        for (const auto& e : graph[node]) {
            if (seen.insert(e.to).second) {
                parent[e.to] = {node, e.condition};
                queue.push_back(e.to);
            }
        }
    }
    if (!seen.count(dst)) return std::nullopt;
    std::vector<std::string> conds;
    for (std::string n = dst; n != src; n = parent[n].first) conds.push_back(parent[n].second);
    std::reverse(conds.begin(), conds.end());
    return util::join(conds, " AND ");
}

InterColumnRelation verify_column_relation(db::Database& db, const ColumnId& a, const ColumnId& b,
                                           std::optional<std::string> join_path,
                                           std::chrono::milliseconds timeout) {
    InterColumnRelation rel;
    rel.a = a;
    rel.b = b;
    rel.kind = RelationKind::Similar;
    rel.join_path = std::move(join_path);

    auto side = [](const ColumnId& c) {
        // Qualified, so a missing column is an error rather than a string literal.
        const auto col = db::quote_ident(c.table) + "." + db::quote_ident(c.column);
        return "SELECT " + col + " FROM " + db::quote_ident(c.table) + " WHERE " + col + " IS NOT NULL";
    };
    auto probe = [&](const ColumnId& x, const ColumnId& y) {
        auto r = db.query("SELECT COUNT(*) FROM (" + side(x) + " EXCEPT " + side(y) + ")", timeout);
        return std::get<std::int64_t>(r.rows.at(0).at(0));
    };
    try {
        auto has_values = [&](const ColumnId& c) {
            return !db.query(side(c) + " LIMIT 1", timeout).rows.empty();
        };
        if (!has_values(a) || !has_values(b)) {
            rel.note = "no non-null values to compare";
            return rel;
        }
        const auto only_a = probe(a, b);
        const auto only_b = probe(b, a);
        if (only_a == 0 && only_b == 0) rel.kind = RelationKind::Duplicate;
    } catch (const QueryFailure& e) {
        rel.kind = RelationKind::Similar;
        rel.note = std::string("verification failed: ") + e.what();
    }
    return rel;
}

}  // namespace mci::profile
