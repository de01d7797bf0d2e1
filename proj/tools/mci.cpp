#include <chrono>
#include <cstdio>
#include <iostream>

#include <CLI11.hpp>

#include "mci/harness.hpp"
#include "mci/util.hpp"

namespace {

using mci::harness::Config;

struct Common {
    std::string config_file;
    std::string cache_dir;
    std::string cache_mode;
    std::string model;
    std::string endpoint;
    std::string profile_dir;
    bool profile_on_demand = false;
};

struct AskArgs {
    std::string db;
    std::string question;
    std::string evidence;
    std::string mode = "complete";
    bool single = false;
    bool json = false;
};

struct BenchArgs {
    std::string dataset;
    std::string gold_override;
    std::string schedule;
    std::string run_dir = "mci-run";
    int workers = 0;
    bool no_alignment = false;
};

Config resolve(const Common& c) {
    Config cfg = c.config_file.empty() ? Config{} : mci::harness::load_config(c.config_file);
    nlohmann::json patch = mci::harness::to_json(cfg);
    if (!c.cache_dir.empty()) patch["cache_dir"] = c.cache_dir;
    if (!c.cache_mode.empty()) patch["cache_mode"] = c.cache_mode;
    if (!c.model.empty()) patch["model"] = c.model;
    if (!c.endpoint.empty()) patch["endpoint"] = c.endpoint;
    if (!c.profile_dir.empty()) patch["profile_dir"] = c.profile_dir;
    if (c.profile_on_demand) patch["profile_on_demand"] = true;
    return mci::harness::config_from_json(patch);
}

std::vector<std::filesystem::path> find_databases(const std::filesystem::path& root) {
    std::vector<std::filesystem::path> out;
    auto is_db = [](const std::filesystem::path& p) {
        auto ext = p.extension().string();
        return ext == ".sqlite" || ext == ".db" || ext == ".sqlite3";
    };
    if (std::filesystem::is_regular_file(root)) return {root};
    if (!std::filesystem::is_directory(root)) throw mci::FileNotFound("no such database directory: " + root.string());
    for (auto it = std::filesystem::recursive_directory_iterator(root); it != std::filesystem::recursive_directory_iterator(); ++it) {
        if (it.depth() > 1) it.disable_recursion_pending();
        if (it->is_regular_file() && is_db(it->path())) out.push_back(it->path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

int run_profile(const Common& common, const std::string& db_dir, bool describe) {
    Config cfg = resolve(common);
    std::shared_ptr<mci::llm::Provider> provider;
    std::unique_ptr<mci::llm::Gateway> gateway;
    if (describe) {
        provider = mci::harness::make_provider(cfg);
        gateway = std::make_unique<mci::llm::Gateway>(provider, cfg.model);
    }
    auto dbs = find_databases(db_dir);
    if (dbs.empty()) throw mci::EmptyInput("no databases under " + db_dir);
    for (const auto& path : dbs) {
        auto start = std::chrono::steady_clock::now();
        mci::profile::BuildOptions opts;
        opts.profile.similarity_threshold = cfg.similarity_threshold;
        opts.gateway = gateway.get();
        auto profile = mci::profile::build_profile(path, opts);
        auto out = mci::harness::profile_path(cfg, path);
        if (!out.parent_path().empty()) std::filesystem::create_directories(out.parent_path());
        mci::profile::save_profile(profile, out);
        double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        std::printf("%s: %zu columns, %zu relations, %zu dependencies, %.2fs -> %s\n", path.string().c_str(),
                    profile.columns.size(), profile.relations.size(), profile.dependencies.size(), secs,
                    out.string().c_str());
    }
    return 0;
}

int run_ask(Config cfg, const AskArgs& a) {
    auto provider = mci::harness::make_provider(cfg);
    auto schedule = a.single ? mci::select::Schedule{{mci::profile::context_mode_from_string(a.mode), 0.1}}
                             : mci::select::candidate_schedule(cfg.schedule);
    mci::harness::ResourceCache cache(cfg, provider);
    auto res = cache.get(a.db);
    mci::db::Database db(a.db);
    auto assets = mci::harness::load_assets(cfg);
    auto result = mci::harness::answer_question(cfg, provider, assets, *res, db, a.question, a.evidence, schedule);
    if (a.json) {
        nlohmann::json candidates = nlohmann::json::array();
        for (const auto& c : result.candidates) candidates.push_back(mci::harness::to_json(c));
        std::cout << nlohmann::json{{"final_sql", result.final_sql}, {"winner", result.winner},
                                    {"candidates", candidates}}
                         .dump(2)
                  << "\n";
    } else {
        std::cout << result.final_sql << "\n";
    }
    return 0;
}

int run_bench(Config cfg, const BenchArgs& b) {
    if (!b.schedule.empty()) cfg.schedule = b.schedule;
    if (b.workers > 0) cfg.workers = b.workers;
    if (b.no_alignment) cfg.function_alignment = cfg.output_alignment = false;
    std::optional<std::filesystem::path> gold;
    if (!b.gold_override.empty()) gold = b.gold_override;
    auto samples = mci::harness::load_dataset(b.dataset, gold);
    auto report = mci::harness::run_benchmark(cfg, samples, b.run_dir);
    std::cout << mci::harness::summary_text(report);
    return 0;
}

void add_common(CLI::App& app, Common& c) {
    app.add_option("--config", c.config_file, "JSON config file");
    app.add_option("--cache-dir", c.cache_dir, "Record/replay cache directory");
    app.add_option("--cache-mode", c.cache_mode, "replay-only, replay or record");
    app.add_option("--model", c.model, "Model name");
    app.add_option("--endpoint", c.endpoint, "Chat-completions endpoint");
    app.add_option("--profile-dir", c.profile_dir, "Directory holding metadata artifacts");
}

void add_ask(CLI::App& app, AskArgs& a, bool required) {
    app.add_option("--db", a.db, "SQLite database file")->required(required);
    app.add_option("--question", a.question, "Natural-language question")->required(required);
    app.add_option("--evidence", a.evidence, "External knowledge hint");
    app.add_option("--mode", a.mode, "Metadata mode for --single")->check(CLI::IsMember({"complete", "partial"}));
    app.add_flag("--single", a.single, "Generate one candidate instead of the voting schedule");
    app.add_flag("--json", a.json, "Print all candidates as JSON");
}

void add_bench(CLI::App& app, BenchArgs& b, bool required) {
    app.add_option("--dataset", b.dataset, "Dataset directory (BIRD or Spider layout)")->required(required);
    app.add_option("--gold-override", b.gold_override, "JSON list of gold corrections keyed by question_id");
    app.add_option("--schedule", b.schedule, "default, single or a JSON schedule file");
    app.add_option("--workers", b.workers, "Parallel samples");
    app.add_option("--run-dir", b.run_dir, "Output directory; completed samples are skipped on rerun");
    app.add_flag("--no-alignment", b.no_alignment, "Disable both alignment stages");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"MCI-SQL text-to-SQL pipeline"};
    app.require_subcommand(1);
    Common common;
    add_common(app, common);

    std::string db_dir;
    bool describe = false;
    auto* profile = app.add_subcommand("profile", "Build metadata artifacts for every database under a directory");
    profile->add_option("db-dir", db_dir, "Database file or directory")->required();
    profile->add_flag("--describe", describe, "Ask the model for table descriptions");

    AskArgs ask_args;
    auto* ask = app.add_subcommand("ask", "Answer one question");
    add_ask(*ask, ask_args, true);
    ask->add_flag("--profile-on-demand", common.profile_on_demand, "Build missing metadata artifacts");

    BenchArgs bench_args;
    auto* bench = app.add_subcommand("bench", "Run a benchmark and report execution accuracy");
    add_bench(*bench, bench_args, true);
    bench->add_flag("--profile-on-demand", common.profile_on_demand, "Build missing metadata artifacts");

    AskArgs replay_ask;
    BenchArgs replay_bench;
    std::string replay_cache;
    auto* replay = app.add_subcommand("replay", "Rerun ask or bench from a recorded cache only");
    replay->add_option("--cache-dir", replay_cache, "Recorded cache directory")->required();
    add_ask(*replay, replay_ask, false);
    add_bench(*replay, replay_bench, false);
    replay->add_flag("--profile-on-demand", common.profile_on_demand, "Build missing metadata artifacts");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*profile) return run_profile(common, db_dir, describe);
        if (*ask) return run_ask(resolve(common), ask_args);
        if (*bench) return run_bench(resolve(common), bench_args);
        if (*replay) {
            common.cache_dir = replay_cache;
            Config cfg = resolve(common);
            cfg.provider = "replay";
            if (!replay_bench.dataset.empty()) return run_bench(cfg, replay_bench);
            if (!replay_ask.db.empty() && !replay_ask.question.empty()) return run_ask(cfg, replay_ask);
            std::cerr << "error: replay needs --dataset, or --db with --question\n";
            return 2;
        }
    } catch (const mci::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
