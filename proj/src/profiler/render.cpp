#include <algorithm>
#include <cmath>
#include <set>

#include "mci/profiler.hpp"
#include "mci/util.hpp"

namespace mci::profile {

namespace {

constexpr std::size_t kMaxPatterns = 3;
constexpr std::size_t kMaxDependencyNotes = 3;

std::string type_phrase(std::string_view declared) {
    std::string t = util::to_lower(util::trim(declared));
    if (t.empty()) return "value";
    switch (type_affinity(declared)) {
        case Affinity::Integer: return "integer";
        case Affinity::Real: return "real number";
        default: return t;
    }
}

std::string with_article(const std::string& noun) {
    static const std::string vowels = "aeiou";
    bool an = !noun.empty() && vowels.find(noun[0]) != std::string::npos;
    return (an ? "an " : "a ") + noun;
}

std::string number_text(const db::Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return util::group_thousands(std::to_string(*i));
    if (const auto* d = std::get_if<double>(&c)) return util::group_thousands(util::format_double(*d));
    return db::display(c);
}

std::string sql_string(std::string_view s) {
    std::string out = "'";
    for (char c : s) {
        if (c == '\'') out += "''";
        else out.push_back(c);
    }
    return out + "'";
}

std::string example_text(const db::Cell& c) {
    if (std::holds_alternative<std::string>(c)) return sql_string(std::get<std::string>(c));
    return number_text(c);
}

std::string enumerate(const std::vector<std::string>& items) {
    if (items.size() == 1) return items[0];
    std::string out;
    for (std::size_t i = 0; i + 1 < items.size(); ++i) {
        if (i) out += ", ";
        out += items[i];
    }
    return out + " and " + items.back();
}

std::string clean_description(std::string d) {
    d = util::trim(d);
    while (!d.empty() && (d.back() == '.' || d.back() == ' ')) d.pop_back();
    if (d.size() >= 2 && std::isupper(static_cast<unsigned char>(d[0])) &&
        std::islower(static_cast<unsigned char>(d[1])))
        d[0] = static_cast<char>(std::tolower(static_cast<unsigned char>(d[0])));
    return d;
}

std::string column_name(const ColumnId& c) { return "the `" + c.column + "` column in the `" + c.table + "` table"; }

std::string percent(long long part, long long whole) {
    return std::to_string(std::llround(100.0 * static_cast<double>(part) / static_cast<double>(whole))) + "%";
}

std::vector<std::string> dependency_notes(const ColumnProfile& col, const Profile& profile,
                                          const db::TableDef& table) {
    struct Note {
        bool partner_is_key;
        std::size_t order;
        std::string text;
    };
    std::vector<Note> notes;
    auto position = [&](const std::string& name) {
        for (std::size_t i = 0; i < table.columns.size(); ++i)
            if (table.columns[i].name == name) return i;
        return table.columns.size();
    };
    for (const auto& d : profile.dependencies) {
        bool self_a = d.a == col.id();
        if (!self_a && d.b != col.id()) continue;
        const ColumnId& partner = self_a ? d.b : d.a;
        bool determines = self_a ? d.fd_ab : d.fd_ba;   // col -> partner
        bool determined = self_a ? d.fd_ba : d.fd_ab;   // partner -> col
        const auto* pdef = table.find_column(partner.column);
        bool partner_key = pdef && pdef->is_primary_key;
        std::string text;
        if (determines && determined) {
            text = "Each value maps to exactly one `" + partner.column + "` value and vice versa (1:1).";
        } else if (determined) {
            text = "Multiple rows with different `" + partner.column + "` values may have the same `" +
                   col.column + "` value (N:1).";
        } else if (determines && !col.primary_key) {
            text = "Each value determines a single `" + partner.column + "` value, while one `" +
                   partner.column + "` value may appear with several values (N:1).";
        } else {
            continue;
        }
        notes.push_back({partner_key, position(partner.column), std::move(text)});
    }
    std::stable_sort(notes.begin(), notes.end(), [](const Note& x, const Note& y) {
        if (x.partner_is_key != y.partner_is_key) return x.partner_is_key;
        return x.order < y.order;
    });
    std::vector<std::string> out;
    for (std::size_t i = 0; i < notes.size() && i < kMaxDependencyNotes; ++i) out.push_back(notes[i].text);
    return out;
}

std::string render_column(const ColumnProfile& col, const Profile& profile, const db::TableDef& table,
                          ContextMode mode, const std::vector<std::string>* retrieved) {
    std::string text = "The `" + col.column + "` column in the `" + col.table + "` table is " +
                       with_article(type_phrase(col.declared_type));
    if (col.description && !util::trim(*col.description).empty())
        text += " that represents " + clean_description(*col.description);
    text += ".";

    std::vector<std::string> examples;
    if (retrieved && !col.numeric) {
        for (const auto& v : *retrieved) examples.push_back(sql_string(v));
    } else {
        for (const auto& c : col.sampled_examples) examples.push_back(example_text(c));
    }
    if (examples.size() == 1) text += " A typical example is " + examples[0] + ".";
    else if (!examples.empty()) text += " The typical examples are " + enumerate(examples) + ".";

    if (mode == ContextMode::Partial) return text;

    if (col.range)
        text += " It ranges from " + number_text(col.range->first) + " to " + number_text(col.range->second) + ".";

    if (!col.patterns.empty()) {
        long long total = 0;
        for (const auto& [_, n] : col.patterns) total += n;
        std::vector<std::string> shown;
        for (std::size_t i = 0; i < col.patterns.size() && i < kMaxPatterns; ++i)
            shown.push_back("`" + col.patterns[i].first + "` (" + percent(col.patterns[i].second, total) + ")");
        text += shown.size() == 1 ? " Its values follow the pattern " : " Its values follow the patterns ";
        text += enumerate(shown) + ".";
    }

    for (const auto& r : profile.relations) {
        if (r.a != col.id() && r.b != col.id()) continue;
        const ColumnId& partner = r.a == col.id() ? r.b : r.a;
        if (r.kind == RelationKind::Duplicate)
            text += " It holds the same values as " + column_name(partner) + ".";
        else
            text += " It is similar to " + column_name(partner) + ", but their values differ.";
    }

    for (const auto& note : dependency_notes(col, profile, table)) text += " " + note;
    return text;
}

}  // namespace

MetadataContext render_context(const db::RawSchema& schema, const Profile& profile, ContextMode mode,
                               const std::map<ColumnId, std::vector<std::string>>* examples) {
    MetadataContext ctx;
    ctx.mode = mode;
    ctx.relations = profile.relations;
    for (const auto& table : schema.tables) {
        for (const auto& c : table.columns) {
            ColumnId id{table.name, c.name};
            const auto* col = profile.find(id);
            if (!col) throw MissingProfile("no profile for column " + id.str());
            const std::vector<std::string>* retrieved = nullptr;
            if (examples) {
                auto it = examples->find(id);
                if (it != examples->end()) retrieved = &it->second;
            }
            ctx.per_column_text[id] = render_column(*col, profile, table, mode, retrieved);
        }
        if (mode == ContextMode::Complete) {
            const auto* tp = profile.find_table(table.name);
            if (tp && tp->description && !util::trim(*tp->description).empty())
                ctx.per_table_text[table.name] = util::trim(*tp->description);
        }
    }
    return ctx;
}

std::string render_schema(const db::RawSchema& schema, const MetadataContext& context, const ColumnSet* subset) {
    std::set<std::string> involved;
    if (subset)
        for (const auto& c : *subset) involved.insert(util::to_lower(c.table));
    auto table_in = [&](const std::string& name) { return !subset || involved.count(util::to_lower(name)); };

    // Columns needed to join the involved tables.
    std::set<ColumnId> join_columns;
    for (const auto& t : schema.tables) {
        if (!table_in(t.name)) continue;
        for (const auto& c : t.columns)
            if (c.is_primary_key) join_columns.insert({t.name, c.name});
        for (const auto& fk : t.foreign_keys) {
            const auto* target = schema.find_table(fk.to_table);
            if (!target || !table_in(target->name)) continue;
            join_columns.insert({t.name, fk.from_column});
            if (const auto* tc = target->find_column(fk.to_column)) join_columns.insert({target->name, tc->name});
        }
    }

    std::string out;
    for (const auto& t : schema.tables) {
        if (!table_in(t.name)) continue;
        out += "# Table: " + t.name + "\n";
        if (auto it = context.per_table_text.find(t.name); it != context.per_table_text.end())
            out += it->second + "\n";
        auto pk = t.primary_key();
        if (!pk.empty()) out += "Primary key: " + util::join(pk, ", ") + "\n";
        out += "Columns:\n";
        for (const auto& c : t.columns) {
            ColumnId id{t.name, c.name};
            if (subset && !subset->count(id) && !join_columns.count(id)) continue;
            out += "- `" + c.name + "` (" + (c.declared_type.empty() ? "ANY" : c.declared_type) + ")";
            if (auto it = context.per_column_text.find(id); it != context.per_column_text.end())
                out += ": " + it->second;
            out += "\n";
        }
        std::vector<std::string> fks;
        for (const auto& fk : t.foreign_keys) {
            const auto* target = schema.find_table(fk.to_table);
            if (!target || !table_in(target->name)) continue;
            fks.push_back(t.name + "." + fk.from_column + " = " + target->name + "." + fk.to_column);
        }
        if (!fks.empty()) out += "Foreign keys: " + util::join(fks, "; ") + "\n";
        out += "\n";
    }
    while (!out.empty() && out.back() == '\n') out.pop_back();
    return out;
}

}  // namespace mci::profile
