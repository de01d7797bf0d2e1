#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <thread>

#include "mci/harness.hpp"
#include "mci/util.hpp"

namespace mci::harness {

namespace {

nlohmann::json phase_json(const PhaseUsage& p, bool with_time) {
    nlohmann::json j = {{"calls", p.calls}, {"input_tokens", p.input_tokens}, {"output_tokens", p.output_tokens}};
    if (with_time) j["seconds"] = p.seconds;
    return j;
}

PhaseUsage phase_from_json(const nlohmann::json& j) {
    PhaseUsage p;
    p.calls = j.value("calls", 0LL);
    p.input_tokens = j.value("input_tokens", 0LL);
    p.output_tokens = j.value("output_tokens", 0LL);
    p.seconds = j.value("seconds", 0.0);
    return p;
}

void finish(DifficultyStats& s) { s.ex = s.count ? static_cast<double>(s.correct) / static_cast<double>(s.count) : 0.0; }

nlohmann::json stats_json(const DifficultyStats& s) {
    return {{"count", s.count}, {"correct", s.correct}, {"ex", s.ex}};
}

std::string percent(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f%%", 100.0 * x);
    return buf;
}

std::string fixed(double x, int digits) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", digits, x);
    return buf;
}

std::filesystem::path record_path(const std::filesystem::path& run_dir, long long question_id) {
    return run_dir / "samples" / (std::to_string(question_id) + ".json");
}

std::optional<SampleRecord> read_record(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) return std::nullopt;
    try {
        return sample_record_from_json(nlohmann::json::parse(util::read_file(path)));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

nlohmann::json transcript_json(const llm::ChatTranscript& t) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : t.messages) messages.push_back({{"role", llm::to_string(m.role)}, {"content", m.content}});
    nlohmann::json injections = nlohmann::json::array();
    for (const auto& [index, kind] : t.injections) injections.push_back({{"index", index}, {"kind", kind}});
    return {{"messages", messages}, {"injections", injections}, {"output_tokens", t.total_output_tokens}};
}

}  // namespace

nlohmann::json to_json(const SampleRecord& r) {
    nlohmann::json phases = nlohmann::json::object();
    for (const auto& [name, p] : r.phases) phases[name] = phase_json(p, true);
    return {{"question_id", r.question_id},
            {"db_id", r.db_id},
            {"difficulty", r.difficulty ? nlohmann::json(*r.difficulty) : nlohmann::json(nullptr)},
            {"question", r.question},
            {"gold_sql", r.gold_sql},
            {"final_sql", r.final_sql},
            {"ex_correct", r.ex_correct},
            {"interaction_count", r.interaction_count},
            {"output_tokens", r.output_tokens},
            {"error", r.error},
            {"phases", phases},
            {"candidates", r.candidates}};
}

SampleRecord sample_record_from_json(const nlohmann::json& j) {
    SampleRecord r;
    r.question_id = j.at("question_id").get<long long>();
    r.db_id = j.at("db_id").get<std::string>();
    if (j.contains("difficulty") && j.at("difficulty").is_string()) r.difficulty = j.at("difficulty").get<std::string>();
    r.question = j.value("question", "");
    r.gold_sql = j.value("gold_sql", "");
    r.final_sql = j.value("final_sql", "");
    r.ex_correct = j.at("ex_correct").get<bool>();
    r.interaction_count = j.value("interaction_count", 0);
    r.output_tokens = j.value("output_tokens", 0LL);
    r.error = j.value("error", "");
    if (j.contains("phases"))
        for (const auto& [name, p] : j.at("phases").items()) r.phases[name] = phase_from_json(p);
    if (j.contains("candidates")) r.candidates = j.at("candidates");
    return r;
}

RunReport aggregate(std::vector<SampleRecord> records) {
    RunReport rep;
    for (const auto& name : phase_names()) rep.phase_totals[name];
    for (const auto& r : records) {
        ++rep.overall.count;
        rep.overall.correct += r.ex_correct;
        if (r.difficulty) {
            auto& d = rep.by_difficulty[*r.difficulty];
            ++d.count;
            d.correct += r.ex_correct;
        }
        auto& h = rep.by_interaction_count[r.interaction_count];
        ++h.count;
        h.correct += r.ex_correct;
        for (const auto& [name, p] : r.phases) {
            rep.phase_totals[name] += p;
            rep.seconds += p.seconds;
        }
        rep.output_tokens += r.output_tokens;
    }
    finish(rep.overall);
    for (auto& [_, d] : rep.by_difficulty) finish(d);
    for (auto& [_, h] : rep.by_interaction_count) finish(h);
    rep.per_sample = std::move(records);
    return rep;
}

nlohmann::json report_to_json(const RunReport& rep) {
    nlohmann::json samples = nlohmann::json::array();
    for (const auto& r : rep.per_sample) {
        samples.push_back({{"question_id", r.question_id},
                           {"db_id", r.db_id},
                           {"difficulty", r.difficulty ? nlohmann::json(*r.difficulty) : nlohmann::json(nullptr)},
                           {"final_sql", r.final_sql},
                           {"ex_correct", r.ex_correct},
                           {"interaction_count", r.interaction_count},
                           {"output_tokens", r.output_tokens},
                           {"error", r.error}});
    }
    nlohmann::json by_difficulty = nlohmann::json::object();
    for (const auto& [name, d] : rep.by_difficulty) by_difficulty[name] = stats_json(d);
    nlohmann::json by_interactions = nlohmann::json::object();
    for (const auto& [n, d] : rep.by_interaction_count) by_interactions[std::to_string(n)] = stats_json(d);
    nlohmann::json phases = nlohmann::json::object();
    for (const auto& [name, p] : rep.phase_totals) phases[name] = phase_json(p, false);
    return {{"samples", samples},
            {"ex", stats_json(rep.overall)},
            {"ex_by_difficulty", by_difficulty},
            {"ex_by_interaction_count", by_interactions},
            {"tokens", {{"output_tokens", rep.output_tokens}, {"phases", phases}}}};
}

std::string summary_text(const RunReport& rep) {
    std::string s = "Samples: " + std::to_string(rep.overall.count) + "\n";
    s += "EX: " + percent(rep.overall.ex) + " (" + std::to_string(rep.overall.correct) + "/" +
         std::to_string(rep.overall.count) + ")\n";
    for (const auto& [name, d] : rep.by_difficulty)
        s += "EX " + name + ": " + percent(d.ex) + " (" + std::to_string(d.correct) + "/" + std::to_string(d.count) +
             ")\n";
    s += "By interaction count:\n";
    for (const auto& [n, d] : rep.by_interaction_count)
        s += "  " + std::to_string(n) + ": " + std::to_string(d.count) + " samples, EX " + percent(d.ex) + "\n";
    long long errors = 0;
    for (const auto& r : rep.per_sample) errors += !r.error.empty();
    s += "Errors: " + std::to_string(errors) + "\n";
    s += "Output tokens: " + std::to_string(rep.output_tokens) + "\n";
    return s;
}

std::vector<CostRow> cost_report(const RunReport& rep, const Config& config) {
    static const std::vector<std::pair<std::string, std::string>> rows = {
        {"schema_linking", "Schema Linking"},
        {"sql_generation", "SQL Generation"},
        {"function_alignment", "SQL Function Alignment"},
        {"output_alignment", "SQL Output Alignment"},
        {"selection", "SQL Selection"}};
    const double n = static_cast<double>(rep.per_sample.size());
    std::vector<CostRow> out;
    CostRow total{"Pipeline", 0.0, 0.0, 0.0};
    for (const auto& [key, label] : rows) {
        PhaseUsage p;
        if (auto it = rep.phase_totals.find(key); it != rep.phase_totals.end()) p = it->second;
        CostRow row{label, 0.0, 0.0, 0.0};
        if (n > 0) {
            row.seconds = p.seconds / n;
            row.output_tokens = static_cast<double>(p.output_tokens) / n;
            row.cost = (static_cast<double>(p.input_tokens) * config.price_input_per_1k +
                        static_cast<double>(p.output_tokens) * config.price_output_per_1k) /
                       1000.0 / n;
        }
        total.seconds += row.seconds;
        total.output_tokens += row.output_tokens;
        total.cost += row.cost;
        out.push_back(row);
    }
    out.insert(out.begin(), total);
    return out;
}

std::string cost_text(const std::vector<CostRow>& rows) {
    std::string s = "Phase                   Time (s)  Output Token  Cost ($)\n";
    for (const auto& r : rows) {
        std::string name = r.phase;
        name.resize(22, ' ');
        std::string t = fixed(r.seconds, 3), o = fixed(r.output_tokens, 1), c = fixed(r.cost, 4);
        s += name + "  " + std::string(8 - std::min<std::size_t>(8, t.size()), ' ') + t + "  " +
             std::string(12 - std::min<std::size_t>(12, o.size()), ' ') + o + "  " +
             std::string(8 - std::min<std::size_t>(8, c.size()), ' ') + c + "\n";
    }
    return s;
}

SampleRecord evaluate_sample(const Config& config, const std::shared_ptr<llm::Provider>& provider,
                             const PipelineAssets& assets, ResourceCache& resources, const BenchmarkSample& sample,
                             const select::Schedule& schedule, const std::filesystem::path* transcript_dir) {
    SampleRecord r;
    r.question_id = sample.question_id;
    r.db_id = sample.db_id;
    r.difficulty = sample.difficulty;
    r.question = sample.question;
    r.gold_sql = sample.gold_sql;
    const std::chrono::milliseconds timeout = std::chrono::seconds(config.sql_timeout_seconds);
    try {
        auto res = resources.get(sample.db_path);
        db::Database db(sample.db_path);
        auto qr = answer_question(config, provider, assets, *res, db, sample.question, sample.evidence, schedule);
        r.final_sql = qr.final_sql;
        r.phases = qr.phases;
        for (const auto& c : qr.candidates) r.candidates.push_back(to_json(c));
        if (qr.winner >= 0) r.interaction_count = qr.candidates[qr.winner].interaction_count;
        for (const auto& [_, p] : qr.phases) r.output_tokens += p.output_tokens;
        if (transcript_dir) {
            nlohmann::json doc = nlohmann::json::array();
            for (const auto& t : qr.transcripts) doc.push_back(transcript_json(t));
            util::write_file_atomic(*transcript_dir / (std::to_string(sample.question_id) + ".json"), doc.dump(1));
        }

        auto gold = db.execute(sample.gold_sql, timeout, db::kScoringRowCap);
        auto pred = db.execute(r.final_sql, timeout, db::kScoringRowCap);
        if (!gold.ok()) {
            r.error = "gold SQL failed: " + gold.error_message.value_or("");
        } else if (pred.ok()) {
            db::CompareOptions opts;
            opts.strict_multiset = config.strict_multiset;
            try {
                r.ex_correct = db::results_equivalent(*pred.result, *gold.result, opts);
            } catch (const IncomparableTruncated& e) {
                r.error = e.what();
            }
        }
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        r.error = e.what();
        r.ex_correct = false;
    }
    return r;
}

std::vector<SampleRecord> load_records(const std::filesystem::path& run_dir) {
    std::vector<SampleRecord> out;
    const auto dir = run_dir / "samples";
    if (!std::filesystem::is_directory(dir)) return out;
    std::vector<std::filesystem::path> files;
    for (const auto& e : std::filesystem::directory_iterator(dir))
        if (e.path().extension() == ".json") files.push_back(e.path());
    for (const auto& f : files)
        if (auto r = read_record(f)) out.push_back(std::move(*r));
    std::sort(out.begin(), out.end(),
              [](const SampleRecord& a, const SampleRecord& b) { return a.question_id < b.question_id; });
    return out;
}

RunReport run_benchmark(const Config& config, const std::vector<BenchmarkSample>& samples,
                        const std::filesystem::path& run_dir, std::shared_ptr<llm::Provider> provider) {
    if (samples.empty()) throw EmptyInput("benchmark has no samples");
    if (!provider) provider = make_provider(config);
    const auto schedule = select::candidate_schedule(config.schedule);
    const auto assets = load_assets(config);
    const auto transcripts = run_dir / "transcripts";
    std::filesystem::create_directories(run_dir / "samples");
    std::filesystem::create_directories(transcripts);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < samples.size(); ++i)
        if (!read_record(record_path(run_dir, samples[i].question_id))) pending.push_back(i);

    ResourceCache resources(config, provider);
    std::atomic<std::size_t> next{0};
    std::atomic<bool> abort{false};
    std::exception_ptr failure;
    std::mutex failure_mu;
    auto worker = [&] {
        while (!abort) {
            std::size_t k = next++;
            if (k >= pending.size()) return;
            const auto& s = samples[pending[k]];
            try {
                auto rec = evaluate_sample(config, provider, assets, resources, s, schedule, &transcripts);
                util::write_file_atomic(record_path(run_dir, s.question_id), to_json(rec).dump(1));
            } catch (...) {
                std::lock_guard lock(failure_mu);
                if (!failure) failure = std::current_exception();
                abort = true;
            }
        }
    };
    const std::size_t width = std::min<std::size_t>(static_cast<std::size_t>(config.workers), pending.size());
    if (width <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t i = 0; i < width; ++i) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    if (failure) std::rethrow_exception(failure);

    std::vector<SampleRecord> records;
    for (const auto& s : samples) {
        auto r = read_record(record_path(run_dir, s.question_id));
        if (!r) throw Error("missing sample record for question " + std::to_string(s.question_id));
        records.push_back(std::move(*r));
    }
    auto report = aggregate(std::move(records));

    util::write_file_atomic(run_dir / "report.json", report_to_json(report).dump(2) + "\n");
    util::write_file_atomic(run_dir / "summary.txt", summary_text(report));
    auto cost = cost_report(report, config);
    nlohmann::json cost_doc = nlohmann::json::array();
    for (const auto& row : cost)
        cost_doc.push_back(
            {{"phase", row.phase}, {"seconds", row.seconds}, {"output_tokens", row.output_tokens}, {"cost", row.cost}});
    util::write_file_atomic(run_dir / "cost.json", cost_doc.dump(2) + "\n");
    util::write_file_atomic(run_dir / "cost.txt", cost_text(cost));
    nlohmann::json timings = nlohmann::json::array();
    for (const auto& r : report.per_sample) {
        nlohmann::json phases = nlohmann::json::object();
        for (const auto& [name, p] : r.phases) phases[name] = p.seconds;
        timings.push_back({{"question_id", r.question_id}, {"phases", phases}});
    }
    util::write_file_atomic(run_dir / "timings.json",
                            nlohmann::json{{"total_seconds", report.seconds}, {"samples", timings}}.dump(2) + "\n");
    return report;
}

}  // namespace mci::harness
