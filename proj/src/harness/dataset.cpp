#include <map>

#include "mci/harness.hpp"
#include "mci/util.hpp"

namespace mci::harness {

namespace {

std::string record_label(std::size_t index, const nlohmann::json& rec) {
    std::string dump = rec.dump();
    if (dump.size() > 200) dump = dump.substr(0, 200) + "...";
    return "record " + std::to_string(index) + " " + dump;
}

std::string text_field(const nlohmann::json& rec, std::initializer_list<const char*> keys, bool required,
                       const std::string& label) {
    for (const char* k : keys) {
        if (rec.contains(k) && rec.at(k).is_string()) return rec.at(k).get<std::string>();
    }
    if (required) throw MalformedDataset("missing field '" + std::string(*keys.begin()) + "' in " + label);
    return {};
}

nlohmann::json read_json(const std::filesystem::path& path) {
    try {
        return nlohmann::json::parse(util::read_file(path));
    } catch (const nlohmann::json::parse_error& e) {
        throw MalformedDataset(path.string() + " is not valid JSON: " + e.what());
    }
}

}  // namespace

std::vector<BenchmarkSample> load_dataset(const std::filesystem::path& dir,
                                          const std::optional<std::filesystem::path>& gold_override) {
    if (!std::filesystem::is_directory(dir)) throw MalformedDataset("dataset directory not found: " + dir.string());

    std::filesystem::path questions;
    for (const char* name : {"dev.json", "test.json"}) {
        if (std::filesystem::exists(dir / name)) {
            questions = dir / name;
            break;
        }
    }
    if (questions.empty()) throw MalformedDataset("no dev.json or test.json in " + dir.string());

    std::filesystem::path databases;
    for (const char* name : {"dev_databases", "test_databases", "database", "databases"}) {
        if (std::filesystem::is_directory(dir / name)) {
            databases = dir / name;
            break;
        }
    }
    if (databases.empty()) throw MalformedDataset("no databases directory (dev_databases/ or database/) in " + dir.string());

    auto doc = read_json(questions);
    if (!doc.is_array()) throw MalformedDataset(questions.string() + " must hold a JSON list");

    std::vector<BenchmarkSample> out;
    out.reserve(doc.size());
    for (std::size_t i = 0; i < doc.size(); ++i) {
        const auto& rec = doc[i];
        const auto label = record_label(i, rec);
        if (!rec.is_object()) throw MalformedDataset("not an object: " + label);
        BenchmarkSample s;
        if (rec.contains("question_id")) {
            if (!rec.at("question_id").is_number_integer()) throw MalformedDataset("bad question_id in " + label);
            s.question_id = rec.at("question_id").get<long long>();
        } else {
            s.question_id = static_cast<long long>(i);
        }
        s.db_id = text_field(rec, {"db_id"}, true, label);
        s.question = text_field(rec, {"question"}, true, label);
        s.evidence = text_field(rec, {"evidence"}, false, label);
        s.gold_sql = text_field(rec, {"SQL", "query", "sql"}, true, label);
        if (rec.contains("difficulty") && rec.at("difficulty").is_string())
            s.difficulty = rec.at("difficulty").get<std::string>();
        s.db_path = databases / s.db_id / (s.db_id + ".sqlite");
        if (!std::filesystem::exists(s.db_path))
            throw MalformedDataset("database " + s.db_path.string() + " not found for " + label);
        out.push_back(std::move(s));
    }

    if (gold_override) {
        if (!std::filesystem::exists(*gold_override))
            throw FileNotFound("gold override not found: " + gold_override->string());
        auto fixes = read_json(*gold_override);
        if (!fixes.is_array()) throw MalformedDataset(gold_override->string() + " must hold a JSON list");
        std::map<long long, std::size_t> by_id;
        for (std::size_t i = 0; i < out.size(); ++i) by_id[out[i].question_id] = i;
        for (std::size_t i = 0; i < fixes.size(); ++i) {
            const auto& fix = fixes[i];
            const auto label = record_label(i, fix);
            if (!fix.is_object() || !fix.contains("question_id") || !fix.at("question_id").is_number_integer())
                throw MalformedDataset("gold override needs an integer question_id: " + label);
            auto it = by_id.find(fix.at("question_id").get<long long>());
            if (it == by_id.end()) throw MalformedDataset("gold override names an unknown question_id: " + label);
            auto& s = out[it->second];
            if (auto q = text_field(fix, {"question"}, false, label); !q.empty()) s.question = q;
            if (fix.contains("evidence") && fix.at("evidence").is_string())
                s.evidence = fix.at("evidence").get<std::string>();
            if (auto g = text_field(fix, {"SQL", "query", "sql"}, false, label); !g.empty()) s.gold_sql = g;
        }
    }
    return out;
}

}  // namespace mci::harness
