#include <algorithm>
#include <cmath>
#include <cstring>
#include <unordered_map>

#include "mci/profiler.hpp"

namespace mci::profile {

StrippedPartition StrippedPartition::from_codes(const std::vector<std::int64_t>& codes) {
    std::unordered_map<std::int64_t, std::uint32_t> slot;
    std::vector<std::vector<std::uint32_t>> groups;
    for (std::uint32_t row = 0; row < codes.size(); ++row) {
        if (codes[row] < 0) continue;
        auto [it, inserted] = slot.emplace(codes[row], static_cast<std::uint32_t>(groups.size()));
        if (inserted) groups.emplace_back();
        groups[it->second].push_back(row);
    }
    StrippedPartition p;
    for (auto& g : groups)
        if (g.size() >= 2) p.classes_.push_back(std::move(g));
    return p;
}

StrippedPartition StrippedPartition::product(const StrippedPartition& other, std::size_t row_count) const {
    std::vector<std::int32_t> owner(row_count, -1);
    for (std::size_t i = 0; i < classes_.size(); ++i)
        for (auto row : classes_[i]) owner[row] = static_cast<std::int32_t>(i);

    std::vector<std::vector<std::uint32_t>> buckets(classes_.size());
    StrippedPartition out;
    for (const auto& cls : other.classes_) {
        for (auto row : cls)
            if (owner[row] >= 0) buckets[owner[row]].push_back(row);
        for (auto row : cls) {
            if (owner[row] < 0) continue;
            auto& b = buckets[owner[row]];
            if (b.size() >= 2) out.classes_.push_back(b);
            b.clear();
        }
    }
    return out;
}

std::size_t StrippedPartition::error() const {
    std::size_t e = 0;
    for (const auto& c : classes_) e += c.size() - 1;
    return e;
}

bool pairwise_fd_codes(const std::vector<std::int64_t>& a, const std::vector<std::int64_t>& b) {
    const std::size_t n = a.size();
    std::vector<std::int64_t> ra(n), rb(n);
    for (std::size_t i = 0; i < n; ++i) {
        bool keep = a[i] >= 0 && b[i] >= 0;
        ra[i] = keep ? a[i] : -1;
        rb[i] = keep ? b[i] : -1;
    }
    auto pa = StrippedPartition::from_codes(ra);
    auto pb = StrippedPartition::from_codes(rb);
    return pa.error() == pa.product(pb, n).error();
}

namespace {

// Equal cells (with integer/real coercion) share a code; null is -1.
class CellEncoder {
public:
    std::int64_t encode(const db::Cell& c) {
        std::string key;
        if (std::holds_alternative<db::Null>(c)) return -1;
        if (const auto* i = std::get_if<std::int64_t>(&c)) {
            key = "n" + std::to_string(*i);
        } else if (const auto* d = std::get_if<double>(&c)) {
            double v = *d;
            if (std::nearbyint(v) == v && std::fabs(v) < 9.2e18) {
                key = "n" + std::to_string(static_cast<std::int64_t>(v));
            } else {
                char buf[sizeof(double)];
                std::memcpy(buf, &v, sizeof v);
                key = "r" + std::string(buf, sizeof buf);
            }
        } else if (const auto* s = std::get_if<std::string>(&c)) {
            key = "t" + *s;
        } else {
            const auto& bytes = std::get<db::Blob>(c).bytes;
            key = "b" + std::string(bytes.begin(), bytes.end());
        }
        auto [it, _] = ids_.emplace(std::move(key), static_cast<std::int64_t>(ids_.size()));
        return it->second;
    }

private:
    std::unordered_map<std::string, std::int64_t> ids_;
};

}  // namespace

bool pairwise_fd(const std::vector<std::pair<db::Cell, db::Cell>>& values) {
    CellEncoder ea, eb;
    std::vector<std::int64_t> a, b;
    a.reserve(values.size());
    b.reserve(values.size());
    for (const auto& [x, y] : values) {
        a.push_back(ea.encode(x));
        b.push_back(eb.encode(y));
    }
    return pairwise_fd_codes(a, b);
}

Cardinality classify_cardinality(bool fd_ab, bool fd_ba) {
    if (fd_ab && fd_ba) return Cardinality::OneToOne;
    if (fd_ab) return Cardinality::NToOne;
    if (fd_ba) return Cardinality::OneToN;
    return Cardinality::NToM;
}

std::vector<Dependency> mine_dependencies(db::Database& db, const db::TableDef& table,
                                          const std::vector<ColumnProfile>& profiles,
                                          const ProfileOptions& opts) {
    std::vector<const ColumnProfile*> cols;
    for (const auto& p : profiles)
        if (p.table == table.name && p.distinct_count >= 2) cols.push_back(&p);
    if (cols.size() < 2) return {};

    std::string sql = "SELECT ";
    for (std::size_t i = 0; i < cols.size(); ++i) {
        if (i) sql += ", ";
        sql += db::quote_ident(cols[i]->column);
    }
    sql += " FROM " + db::quote_ident(table.name) + " LIMIT " + std::to_string(opts.fd_row_limit);

    std::vector<CellEncoder> encoders(cols.size());
    std::vector<std::vector<std::int64_t>> codes(cols.size());
    db.for_each_row(
        sql,
        [&](const db::Row& row) {
            for (std::size_t i = 0; i < cols.size(); ++i) codes[i].push_back(encoders[i].encode(row[i]));
        },
        opts.timeout);
    const std::size_t n = codes[0].size();

    // Columns without nulls keep one partition for every pair they join.
    std::vector<bool> complete(cols.size());
    std::vector<StrippedPartition> full(cols.size());
    for (std::size_t i = 0; i < cols.size(); ++i) {
        complete[i] = std::none_of(codes[i].begin(), codes[i].end(), [](auto c) { return c < 0; });
        if (complete[i]) full[i] = StrippedPartition::from_codes(codes[i]);
    }

    std::vector<Dependency> out;
    for (std::size_t i = 0; i < cols.size(); ++i) {
        for (std::size_t j = i + 1; j < cols.size(); ++j) {
            Dependency d;
            d.a = cols[i]->id();
            d.b = cols[j]->id();
            if (complete[i] && complete[j]) {
                auto ab = full[i].product(full[j], n);
                d.fd_ab = full[i].error() == ab.error();
                d.fd_ba = full[j].error() == ab.error();
            } else {
                d.fd_ab = pairwise_fd_codes(codes[i], codes[j]);
                d.fd_ba = pairwise_fd_codes(codes[j], codes[i]);
            }
            d.cardinality = classify_cardinality(d.fd_ab, d.fd_ba);
            out.push_back(std::move(d));
        }
    }
    return out;
}

}  // namespace mci::profile
