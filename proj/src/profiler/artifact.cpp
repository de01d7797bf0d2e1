#include <algorithm>

#include "mci/llm.hpp"
#include "mci/profiler.hpp"
#include "mci/util.hpp"

namespace mci::profile {

using nlohmann::json;

const ColumnProfile* Profile::find(const ColumnId& id) const {
    for (const auto& c : columns)
        if (c.table == id.table && c.column == id.column) return &c;
    for (const auto& c : columns)
        if (util::iequals(c.table, id.table) && util::iequals(c.column, id.column)) return &c;
    return nullptr;
}

const TableProfile* Profile::find_table(std::string_view table) const {
    for (const auto& t : tables)
        if (util::iequals(t.table, table)) return &t;
    return nullptr;
}

namespace {

json cell_json(const db::Cell& c) {
    if (const auto* i = std::get_if<std::int64_t>(&c)) return *i;
    if (const auto* d = std::get_if<double>(&c)) return *d;
    if (const auto* s = std::get_if<std::string>(&c)) return *s;
    if (const auto* b = std::get_if<db::Blob>(&c)) {
        static const char* hex = "0123456789abcdef";
        std::string h;
        for (auto byte : b->bytes) {
            h.push_back(hex[byte >> 4]);
            h.push_back(hex[byte & 15]);
        }
        return json{{"blob_hex", h}};
    }
    return nullptr;
}

db::Cell cell_from_json(const json& j) {
    if (j.is_null()) return db::Null{};
    if (j.is_number_integer()) return j.get<std::int64_t>();
    if (j.is_number()) return j.get<double>();
    if (j.is_string()) return j.get<std::string>();
    db::Blob b;
    const auto h = j.at("blob_hex").get<std::string>();
    for (std::size_t i = 0; i + 1 < h.size(); i += 2) b.bytes.push_back(static_cast<std::uint8_t>(std::stoi(h.substr(i, 2), nullptr, 16)));
    return b;
}

json column_id_json(const ColumnId& c) { return {{"table", c.table}, {"column", c.column}}; }
ColumnId column_id_from_json(const json& j) { return {j.at("table").get<std::string>(), j.at("column").get<std::string>()}; }

template <typename T>
json optional_json(const std::optional<T>& v) {
    return v ? json(*v) : json(nullptr);
}

std::optional<std::string> optional_string(const json& j, const char* key) {
    if (!j.contains(key) || j[key].is_null()) return std::nullopt;
    return j[key].get<std::string>();
}

}  // namespace

json to_json(const Profile& p) {
    json doc;
    doc["version"] = p.version;
    doc["schema_checksum"] = p.schema_checksum;
    doc["columns"] = json::array();
    for (const auto& c : p.columns) {
        json j;
        j["table"] = c.table;
        j["column"] = c.column;
        j["declared_type"] = c.declared_type;
        j["description"] = optional_json(c.description);
        j["numeric"] = c.numeric;
        j["primary_key"] = c.primary_key;
        j["range"] = c.range ? json::array({cell_json(c.range->first), cell_json(c.range->second)}) : json(nullptr);
        j["patterns"] = json::array();
        for (const auto& [pat, n] : c.patterns) j["patterns"].push_back(json::array({pat, n}));
        j["row_count"] = c.row_count;
        j["null_count"] = c.null_count;
        j["distinct_count"] = c.distinct_count;
        j["size_bounds"] =
            c.size_bounds ? json::array({c.size_bounds->first, c.size_bounds->second}) : json(nullptr);
        j["sampled_examples"] = json::array();
        for (const auto& e : c.sampled_examples) j["sampled_examples"].push_back(cell_json(e));
        doc["columns"].push_back(std::move(j));
    }
    doc["relations"] = json::array();
    for (const auto& r : p.relations) {
        doc["relations"].push_back({{"a", column_id_json(r.a)},
                                    {"b", column_id_json(r.b)},
                                    {"kind", to_string(r.kind)},
                                    {"join_path", optional_json(r.join_path)},
                                    {"fd_ab", r.fd_ab},
                                    {"fd_ba", r.fd_ba},
                                    {"cardinality", to_string(r.cardinality)},
                                    {"note", optional_json(r.note)}});
    }
    doc["tables"] = json::array();
    for (const auto& t : p.tables) {
        doc["tables"].push_back({{"table", t.table},
                                 {"row_count", t.row_count},
                                 {"column_count", t.column_count},
                                 {"description", optional_json(t.description)}});
    }
    doc["dependencies"] = json::array();
    for (const auto& d : p.dependencies) {
        doc["dependencies"].push_back({{"a", column_id_json(d.a)},
                                       {"b", column_id_json(d.b)},
                                       {"fd_ab", d.fd_ab},
                                       {"fd_ba", d.fd_ba},
                                       {"cardinality", to_string(d.cardinality)}});
    }
    return doc;
}

Profile profile_from_json(const json& doc) {
    Profile p;
    p.version = doc.at("version").get<int>();
    p.schema_checksum = doc.at("schema_checksum").get<std::string>();
    for (const auto& j : doc.at("columns")) {
        ColumnProfile c;
        c.table = j.at("table").get<std::string>();
        c.column = j.at("column").get<std::string>();
        c.declared_type = j.value("declared_type", "");
        c.description = optional_string(j, "description");
        c.numeric = j.value("numeric", false);
        c.primary_key = j.value("primary_key", false);
        if (j.contains("range") && !j["range"].is_null())
            c.range = std::make_pair(cell_from_json(j["range"][0]), cell_from_json(j["range"][1]));
        for (const auto& pat : j.value("patterns", json::array()))
            c.patterns.emplace_back(pat[0].get<std::string>(), pat[1].get<long long>());
        c.row_count = j.value("row_count", 0LL);
        c.null_count = j.value("null_count", 0LL);
        c.distinct_count = j.value("distinct_count", 0LL);
        if (j.contains("size_bounds") && !j["size_bounds"].is_null())
            c.size_bounds = std::make_pair(j["size_bounds"][0].get<long long>(), j["size_bounds"][1].get<long long>());
        for (const auto& e : j.value("sampled_examples", json::array())) c.sampled_examples.push_back(cell_from_json(e));
        p.columns.push_back(std::move(c));
    }
    for (const auto& j : doc.at("relations")) {
        InterColumnRelation r;
        r.a = column_id_from_json(j.at("a"));
        r.b = column_id_from_json(j.at("b"));
        r.kind = relation_kind_from_string(j.at("kind").get<std::string>());
        r.join_path = optional_string(j, "join_path");
        r.fd_ab = j.value("fd_ab", false);
        r.fd_ba = j.value("fd_ba", false);
        r.cardinality = cardinality_from_string(j.value("cardinality", "Unknown"));
        r.note = optional_string(j, "note");
        p.relations.push_back(std::move(r));
    }
    for (const auto& j : doc.at("tables")) {
        TableProfile t;
        t.table = j.at("table").get<std::string>();
        t.row_count = j.value("row_count", 0LL);
        t.column_count = j.value("column_count", 0LL);
        t.description = optional_string(j, "description");
        p.tables.push_back(std::move(t));
    }
    for (const auto& j : doc.value("dependencies", json::array())) {
        Dependency d;
        d.a = column_id_from_json(j.at("a"));
        d.b = column_id_from_json(j.at("b"));
        d.fd_ab = j.value("fd_ab", false);
        d.fd_ba = j.value("fd_ba", false);
        d.cardinality = cardinality_from_string(j.value("cardinality", "NToM"));
        p.dependencies.push_back(std::move(d));
    }
    return p;
}

void save_profile(const Profile& profile, const std::filesystem::path& path) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    util::write_file_atomic(path, to_json(profile).dump(1) + "\n");
}

Profile load_profile(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw FileNotFound("no metadata artifact at " + path.string());
    json doc;
    try {
        doc = json::parse(util::read_file(path));
        return profile_from_json(doc);
    } catch (const json::exception& e) {
        throw Error("malformed metadata artifact " + path.string() + ": " + e.what());
    }
}

namespace {

// RFC 4180 records; tolerant of a UTF-8 BOM and bare LF line ends.
std::vector<std::vector<std::string>> parse_csv(std::string_view text) {
    if (text.substr(0, 3) == "\xEF\xBB\xBF") text.remove_prefix(3);
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool any = false;
    for (std::size_t i = 0; i < text.size(); ++i) {
        char c = text[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < text.size() && text[i + 1] == '"') {
                    field.push_back('"');
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                field.push_back(c);
            }
            continue;
        }
        if (c == '"') {
            quoted = true;
            any = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            any = true;
        } else if (c == '\n' || c == '\r') {
            if (c == '\r' && i + 1 < text.size() && text[i + 1] == '\n') ++i;
            if (any || !field.empty()) {
                row.push_back(std::move(field));
                rows.push_back(std::move(row));
            }
            row.clear();
            field.clear();
            any = false;
        } else {
            field.push_back(c);
            any = true;
        }
    }
    if (any || !field.empty()) {
        row.push_back(std::move(field));
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

Descriptions load_bird_descriptions(const std::filesystem::path& dir, const db::RawSchema& schema) {
    Descriptions out;
    if (!std::filesystem::is_directory(dir)) return out;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        if (entry.path().extension() != ".csv") continue;
        const auto* table = schema.find_table(util::trim(entry.path().stem().string()));
        if (!table) continue;
        auto rows = parse_csv(util::read_file(entry.path()));
        if (rows.empty()) continue;
        auto col_index = [&](std::string_view name) -> std::optional<std::size_t> {
            for (std::size_t i = 0; i < rows[0].size(); ++i)
                if (util::iequals(util::trim(rows[0][i]), name)) return i;
            return std::nullopt;
        };
        auto orig = col_index("original_column_name");
        auto readable = col_index("column_name");
        auto desc = col_index("column_description");
        if (!orig) continue;
        for (std::size_t r = 1; r < rows.size(); ++r) {
            const auto& row = rows[r];
            auto at = [&](std::optional<std::size_t> i) {
                return i && *i < row.size() ? util::trim(row[*i]) : std::string();
            };
            const auto* col = table->find_column(at(orig));
            if (!col) continue;
            std::string text = at(desc);
            if (text.empty()) text = at(readable);
            if (!text.empty()) out.columns[{table->name, col->name}] = text;
        }
    }
    return out;
}

std::string describe_table(llm::Gateway& gateway, const db::TableDef& table,
                           const std::vector<ColumnProfile>& profiles) {
    std::string prompt =
        "Write one paragraph describing the `" + table.name +
        "` table of a relational database. Cover the table's function, its key columns and the questions it can "
        "help answer. Reply with the paragraph only.\n\nColumns:\n";
    for (const auto& c : table.columns) {
        prompt += "- " + c.name + " (" + (c.declared_type.empty() ? "ANY" : c.declared_type) + ")";
        if (c.is_primary_key) prompt += ", primary key";
        auto it = std::find_if(profiles.begin(), profiles.end(),
                               [&](const ColumnProfile& p) { return p.table == table.name && p.column == c.name; });
        if (it != profiles.end()) {
            if (it->description) prompt += ": " + *it->description;
            if (!it->sampled_examples.empty()) {
                std::vector<std::string> ex;
                for (const auto& e : it->sampled_examples) ex.push_back(db::display(e));
                prompt += " [examples: " + util::join(ex, ", ") + "]";
            }
        }
        prompt += "\n";
    }
    auto reply = gateway.complete({{llm::Role::User, prompt}}, 0.0);
    return util::trim(reply.text);
}

Profile build_profile(const std::filesystem::path& db_path, const BuildOptions& opts) {
    const auto& po = opts.profile;
    Profile p;
    auto db = db::open_database(db_path);
    p.schema_checksum = util::sha256_file(db_path);
    auto schema = db.introspect_schema();

    auto desc_dir = opts.descriptions_dir.value_or(db_path.parent_path() / "database_description");
    Descriptions desc = load_bird_descriptions(desc_dir, schema);

    for (const auto& t : schema.tables) {
        long long rows = 0;
        for (const auto& c : t.columns) {
            auto prof = profile_column(db, t, c, po);
            if (auto it = desc.columns.find(prof.id()); it != desc.columns.end()) prof.description = it->second;
            rows = prof.row_count;
            p.columns.push_back(std::move(prof));
        }
        TableProfile tp;
        tp.table = t.name;
        tp.row_count = rows;
        tp.column_count = static_cast<long long>(t.columns.size());
        if (auto it = desc.tables.find(t.name); it != desc.tables.end()) tp.description = it->second;
        p.tables.push_back(std::move(tp));
    }

    for (const auto& t : schema.tables) {
        auto deps = mine_dependencies(db, t, p.columns, po);
        p.dependencies.insert(p.dependencies.end(), deps.begin(), deps.end());
    }

    TrigramEmbedder embedder;
    for (const auto& [a, b] : similarity_candidates(schema, p.columns, embedder, po.similarity_threshold))
        p.relations.push_back(verify_column_relation(db, a, b, fk_join_path(schema, a.table, b.table), po.timeout));

    if (opts.gateway) {
        for (std::size_t i = 0; i < schema.tables.size(); ++i) {
            try {
                p.tables[i].description = describe_table(*opts.gateway, schema.tables[i], p.columns);
            } catch (const Error&) {
                // The profile stays valid without a table description.
            }
        }
    }
    return p;
}

Profile ensure_profile(const std::filesystem::path& db_path, const std::filesystem::path& artifact_path,
                       const BuildOptions& opts) {
    if (std::filesystem::exists(artifact_path)) {
        try {
            auto cached = load_profile(artifact_path);
            if (cached.version == kArtifactVersion && cached.schema_checksum == util::sha256_file(db_path))
                return cached;
        } catch (const Error&) {
        }
    }
    auto fresh = build_profile(db_path, opts);
    save_profile(fresh, artifact_path);
    return fresh;
}

}  // namespace mci::profile
