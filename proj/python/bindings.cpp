#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "mci/harness.hpp"
#include "mci/sql/parser.hpp"
#include "mci/sql/references.hpp"

namespace py = pybind11;
using namespace mci;

namespace {

py::object to_python(const nlohmann::json& doc) { return py::module_::import("json").attr("loads")(doc.dump()); }

nlohmann::json from_python(const py::object& obj) {
    return nlohmann::json::parse(py::module_::import("json").attr("dumps")(obj).cast<std::string>());
}

py::object cell_to_python(const db::Cell& c) {
    return std::visit(
        [](const auto& v) -> py::object {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, db::Null>) return py::none();
            else if constexpr (std::is_same_v<T, db::Blob>)
                return py::bytes(reinterpret_cast<const char*>(v.bytes.data()), v.bytes.size());
            else return py::cast(v);
        },
        c);
}

py::dict outcome_to_python(const db::ExecutionOutcome& o) {
    py::dict d;
    d["state"] = std::string(db::to_string(o.state));
    py::list rows;
    if (o.result) {
        for (const auto& r : o.result->rows) {
            py::list row;
            for (const auto& c : r) row.append(cell_to_python(c));
            rows.append(py::tuple(row));
        }
        d["columns"] = o.result->columns;
        d["total_row_count"] = o.result->total_row_count;
        d["truncated"] = o.result->truncated;
    }
    d["rows"] = rows;
    d["error"] = o.error_message ? py::cast(*o.error_message) : py::none();
    return d;
}

std::vector<std::pair<std::string, std::string>> column_pairs(const ColumnSet& cols) {
    std::vector<std::pair<std::string, std::string>> out;
    for (const auto& c : cols) out.emplace_back(c.table, c.column);
    return out;
}

ColumnSet column_set(const std::vector<std::pair<std::string, std::string>>& cols) {
    ColumnSet out;
    for (const auto& [t, c] : cols) out.insert({t, c});
    return out;
}

harness::Config config_from(const py::object& config) {
    if (config.is_none()) return {};
    if (py::isinstance<py::str>(config) || py::hasattr(config, "__fspath__"))
        return harness::load_config(py::str(config).cast<std::string>());
    return harness::config_from_json(from_python(config));
}

profile::Profile profile_for(const harness::Config& cfg, const std::filesystem::path& db_path) {
    return profile::ensure_profile(db_path, harness::profile_path(cfg, db_path));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
    m.doc() = "Bindings for the MCI-SQL text-to-SQL pipeline";

    auto base = py::register_exception<Error>(m, "MciError");
    py::register_exception<sql::ParseError>(m, "ParseError", base);
    py::register_exception<ConfigError>(m, "ConfigError", base);
    py::register_exception<llm::GatewayError>(m, "GatewayError", base);

    m.def("parses", [](const std::string& s) { return sql::parses(s); }, py::arg("sql"));
    m.def(
        "normalize", [](const std::string& s) { return sql::normalized(sql::parse_select(s)); }, py::arg("sql"));
    m.def(
        "references",
        [](const std::string& s, const std::filesystem::path& db_path) {
            db::Database database(db_path);
            return column_pairs(sql::extract_references(s, database.introspect_schema()));
        },
        py::arg("sql"), py::arg("db_path"));
    m.def(
        "linking_score",
        [](const std::vector<std::pair<std::string, std::string>>& gold,
           const std::vector<std::pair<std::string, std::string>>& predicted) {
            auto s = sql::linking_score(column_set(gold), column_set(predicted));
            py::dict d;
            d["precision"] = s.precision;
            d["recall"] = s.recall;
            d["f1"] = s.f1;
            return d;
        },
        py::arg("gold"), py::arg("predicted"));

    m.def(
        "execute",
        [](const std::filesystem::path& db_path, const std::string& s, double timeout_s, std::size_t row_cap) {
            db::Database database(db_path);
            auto timeout = std::chrono::milliseconds(static_cast<long long>(timeout_s * 1000));
            return outcome_to_python(database.execute(s, timeout, row_cap));
        },
        py::arg("db_path"), py::arg("sql"), py::arg("timeout") = 30.0, py::arg("row_cap") = db::kPipelineRowCap);
    m.def(
        "execution_match",
        [](const std::filesystem::path& db_path, const std::string& predicted, const std::string& gold,
           bool strict_multiset) {
            db::Database database(db_path);
            std::vector<std::pair<db::ExecutionOutcome, db::ExecutionOutcome>> pair;
            pair.emplace_back(database.execute(predicted, db::kDefaultTimeout, db::kScoringRowCap),
                              database.execute(gold, db::kDefaultTimeout, db::kScoringRowCap));
            return db::execution_accuracy(pair, {strict_multiset}) == 1.0;
        },
        py::arg("db_path"), py::arg("predicted"), py::arg("gold"), py::arg("strict_multiset") = false);

    m.def("abstract_pattern", &profile::abstract_pattern, py::arg("value"));
    m.def(
        "mine_patterns", [](const std::vector<std::string>& v) { return profile::mine_patterns(v); },
        py::arg("values"));
    m.def(
        "build_profile",
        [](const std::filesystem::path& db_path, std::optional<std::filesystem::path> artifact) {
            auto p = artifact ? profile::ensure_profile(db_path, *artifact) : profile::build_profile(db_path);
            return to_python(profile::to_json(p));
        },
        py::arg("db_path"), py::arg("artifact_path") = py::none());
    m.def(
        "render_schema",
        [](const std::filesystem::path& db_path, const std::string& mode, const py::object& config) {
            auto cfg = config_from(config);
            db::Database database(db_path);
            auto schema = database.introspect_schema();
            auto ctx = profile::render_context(schema, profile_for(cfg, db_path),
                                               profile::context_mode_from_string(mode));
            return profile::render_schema(schema, ctx);
        },
        py::arg("db_path"), py::arg("mode") = "Complete", py::arg("config") = py::none());

    m.def(
        "vote",
        [](const std::filesystem::path& db_path, const py::list& candidates) {
            db::Database database(db_path);
            std::vector<select::CandidateSql> list;
            int ordinal = 0;
            for (const auto& item : candidates) {
                auto d = item.cast<py::dict>();
                select::CandidateSql c;
                c.sql = d["sql"].cast<std::string>();
                c.mode = profile::context_mode_from_string(
                    d.contains("mode") ? d["mode"].cast<std::string>() : std::string("Complete"));
                c.temperature = d.contains("temperature") ? d["temperature"].cast<double>() : 0.0;
                c.ordinal = d.contains("ordinal") ? d["ordinal"].cast<int>() : ordinal;
                c.outcome = database.execute(c.sql);
                list.push_back(std::move(c));
                ++ordinal;
            }
            return select::vote_detail(list).winner;
        },
        py::arg("db_path"), py::arg("candidates"));

    m.def(
        "default_schedule",
        [] {
            py::list out;
            for (const auto& e : select::default_schedule()) {
                py::dict d;
                d["mode"] = profile::to_string(e.mode);
                d["temperature"] = e.temperature;
                out.append(d);
            }
            return out;
        });

    m.def(
        "load_dataset",
        [](const std::filesystem::path& dir, std::optional<std::filesystem::path> gold_override) {
            py::list out;
            for (const auto& s : harness::load_dataset(dir, gold_override)) {
                py::dict d;
                d["question_id"] = s.question_id;
                d["db_id"] = s.db_id;
                d["question"] = s.question;
                d["evidence"] = s.evidence;
                d["gold_sql"] = s.gold_sql;
                d["difficulty"] = s.difficulty ? py::cast(*s.difficulty) : py::none();
                d["db_path"] = s.db_path.string();
                out.append(d);
            }
            return out;
        },
        py::arg("dataset_dir"), py::arg("gold_override") = py::none());

    m.def(
        "load_config", [](const std::filesystem::path& path) { return to_python(harness::to_json(harness::load_config(path))); },
        py::arg("path"));

    m.def(
        "ask",
        [](const std::filesystem::path& db_path, const std::string& question, const std::string& evidence,
           const py::object& config) {
            auto cfg = config_from(config);
            nlohmann::json doc;
            {
                py::gil_scoped_release release;
                auto provider = harness::make_provider(cfg);
                harness::ResourceCache cache(cfg, provider);
                auto res = cache.get(db_path);
                db::Database database(db_path);
                auto assets = harness::load_assets(cfg);
                auto r = harness::answer_question(cfg, provider, assets, *res, database, question, evidence,
                                                  select::candidate_schedule(cfg.schedule));
                nlohmann::json candidates = nlohmann::json::array();
                for (const auto& c : r.candidates) candidates.push_back(harness::to_json(c));
                doc = {{"final_sql", r.final_sql}, {"winner", r.winner}, {"candidates", candidates}};
            }
            return to_python(doc);
        },
        py::arg("db_path"), py::arg("question"), py::arg("evidence") = "", py::arg("config") = py::none());

    m.def(
        "bench",
        [](const std::filesystem::path& dataset_dir, const std::filesystem::path& run_dir, const py::object& config) {
            auto cfg = config_from(config);
            nlohmann::json doc;
            {
                py::gil_scoped_release release;
                auto report = harness::run_benchmark(cfg, harness::load_dataset(dataset_dir), run_dir);
                doc = harness::report_to_json(report);
            }
            return to_python(doc);
        },
        py::arg("dataset_dir"), py::arg("run_dir"), py::arg("config") = py::none());
}
