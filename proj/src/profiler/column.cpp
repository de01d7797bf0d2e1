#include "mci/profiler.hpp"
#include "mci/util.hpp"

namespace mci::profile {

namespace {

long long as_count(const db::Cell& c) {
    if (const auto* v = std::get_if<std::int64_t>(&c)) return *v;
    return 0;
}

std::string cell_text(const db::Cell& c) {
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    return db::display(c);
}

bool looks_numeric(const db::Cell& c) {
    if (db::is_numeric(c)) return true;
    if (const auto* s = std::get_if<std::string>(&c)) return util::parse_number(util::trim(*s)).has_value();
    return false;
}

}  // namespace

ColumnProfile profile_column(db::Database& db, const db::TableDef& table, const db::ColumnDef& column,
                             const ProfileOptions& opts) {
    ColumnProfile p;
    p.table = table.name;
    p.column = column.name;
    p.declared_type = column.declared_type;
    p.primary_key = column.is_primary_key;

    const std::string t = db::quote_ident(table.name);
    const std::string c = db::quote_ident(column.name);

    auto counts = db.query("SELECT COUNT(*), COUNT(" + c + "), COUNT(DISTINCT " + c + ") FROM " + t,
                           opts.timeout);
    p.row_count = as_count(counts.rows.at(0).at(0));
    const long long non_null = as_count(counts.rows.at(0).at(1));
    p.null_count = p.row_count - non_null;
    p.distinct_count = as_count(counts.rows.at(0).at(2));

    Reservoir<db::Cell> sample(opts.sample_cap, opts.seed);
    db.for_each_row(
        "SELECT " + c + " FROM " + t + " WHERE " + c + " IS NOT NULL",
        [&](const db::Row& row) { sample.offer(row.at(0)); }, opts.timeout);
    const auto& cells = sample.items();

    Affinity aff = type_affinity(column.declared_type);
    if (aff == Affinity::Integer || aff == Affinity::Real) {
        p.numeric = true;
    } else if (!cells.empty()) {
        std::size_t numeric = 0;
        for (const auto& cell : cells) numeric += looks_numeric(cell);
        p.numeric = static_cast<double>(numeric) >= opts.numeric_share * static_cast<double>(cells.size());
    }

    if (p.numeric && non_null > 0) {
        auto r = db.query("SELECT MIN(v), MAX(v) FROM (SELECT CASE WHEN typeof(" + c +
                              ") IN ('integer', 'real') THEN " + c + " ELSE CAST(TRIM(" + c +
                              ") AS NUMERIC) END AS v FROM " + t + " WHERE " + c +
                              " IS NOT NULL AND typeof(" + c + ") <> 'blob')",
                          opts.timeout);
        const auto& lo = r.rows.at(0).at(0);
        const auto& hi = r.rows.at(0).at(1);
        if (db::is_numeric(lo) && db::is_numeric(hi)) p.range = std::make_pair(lo, hi);
    }

    if (non_null > 0) {
        auto r = db.query("SELECT MIN(LENGTH(" + c + ")), MAX(LENGTH(" + c + ")) FROM " + t + " WHERE " + c +
                              " IS NOT NULL",
                          opts.timeout);
        p.size_bounds = std::make_pair(as_count(r.rows.at(0).at(0)), as_count(r.rows.at(0).at(1)));
    }

    if (!p.numeric) {
        std::vector<std::string> texts;
        texts.reserve(cells.size());
        for (const auto& cell : cells)
            if (!std::holds_alternative<db::Blob>(cell)) texts.push_back(cell_text(cell));
        p.patterns = mine_patterns(texts, opts.sample_cap, opts.seed);
    }

    for (const auto& cell : cells) {
        if (p.sampled_examples.size() >= opts.example_count) break;
        if (std::holds_alternative<db::Blob>(cell)) continue;
        if (std::find(p.sampled_examples.begin(), p.sampled_examples.end(), cell) == p.sampled_examples.end())
            p.sampled_examples.push_back(cell);
    }
    return p;
}

ColumnProfile profile_column(db::Database& db, const db::RawSchema& schema, std::string_view table,
                             std::string_view column, const ProfileOptions& opts) {
    const auto* t = schema.find_table(table);
    if (!t) throw UnknownColumn("no table named '" + std::string(table) + "'");
    const auto* c = t->find_column(column);
    if (!c) throw UnknownColumn("no column " + std::string(table) + "." + std::string(column));
    return profile_column(db, *t, *c, opts);
}

}  // namespace mci::profile
