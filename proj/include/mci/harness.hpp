#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mci/alignment.hpp"
#include "mci/dbcore.hpp"
#include "mci/generation.hpp"
#include "mci/linking.hpp"
#include "mci/llm.hpp"
#include "mci/profiler.hpp"
#include "mci/selection.hpp"

namespace mci::harness {

struct Config {
    // Model access.
    std::string provider = "http";  // http | replay
    std::string provider_id = "openai-compatible";
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string model = "gpt-4o";
    std::optional<std::filesystem::path> cache_dir;
    llm::CacheMode cache_mode = llm::CacheMode::Replay;
    int request_timeout_seconds = 120;
    int max_retries = 3;

    // Pipeline.
    std::string schedule = "default";  // default | single | path to a JSON schedule
    int max_rounds = 6;
    std::size_t feedback_rows = gen::kDefaultFeedbackRows;
    std::size_t example_values = 3;
    std::size_t few_shot_k = gen::kDefaultCaseCount;
    std::optional<std::filesystem::path> few_shot_path;
    int sql_timeout_seconds = 30;
    bool function_alignment = true;
    bool output_alignment = true;
    std::optional<std::filesystem::path> rule_catalog;
    std::optional<std::filesystem::path> example_bank;
    bool summarize_rules = false;

    // Profiling.
    double similarity_threshold = 0.65;
    bool describe_tables = false;
    std::optional<std::filesystem::path> profile_dir;  // default: next to each database
    bool profile_on_demand = false;

    // Benchmark.
    int workers = 1;
    bool strict_multiset = false;
    double price_input_per_1k = 0.0;
    double price_output_per_1k = 0.0;
};

Config config_from_json(const nlohmann::json& doc);
nlohmann::json to_json(const Config& config);
Config load_config(const std::filesystem::path& path);

std::shared_ptr<llm::Provider> make_provider(const Config& config);

// Artifact location for one database file.
std::filesystem::path profile_path(const Config& config, const std::filesystem::path& db_path);

struct DatabaseResources {
    std::filesystem::path db_path;
    db::RawSchema schema;
    profile::Profile profile;
    profile::ValueIndex values;
    std::set<std::string> schema_tokens;
};

// Loads (or builds on demand) the per-database artifacts once; shared by workers.
class ResourceCache {
public:
    ResourceCache(Config config, std::shared_ptr<llm::Provider> provider);
    std::shared_ptr<const DatabaseResources> get(const std::filesystem::path& db_path);

private:
    Config config_;
    std::shared_ptr<llm::Provider> provider_;
    std::mutex mu_;
    std::map<std::filesystem::path, std::shared_ptr<std::once_flag>> flags_;
    std::map<std::filesystem::path, std::shared_ptr<const DatabaseResources>> loaded_;
};

struct PhaseUsage {
    long long calls = 0;
    long long input_tokens = 0;
    long long output_tokens = 0;
    double seconds = 0.0;

    PhaseUsage& operator+=(const PhaseUsage& o);
};

inline const std::vector<std::string>& phase_names() {
    static const std::vector<std::string> names = {"schema_linking", "sql_generation", "function_alignment",
                                                   "output_alignment", "selection"};
    return names;
}

struct CandidateRecord {
    int ordinal = 0;
    profile::ContextMode mode = profile::ContextMode::Complete;
    double temperature = 0.0;
    std::string sql_d;
    bool draft_parsed = false;
    int draft_attempts = 0;
    bool full_schema = false;
    std::vector<std::string> linked_columns;
    std::string sql_g;
    std::string verdict;
    std::string branch;
    int interaction_count = 0;
    bool budget_exhausted = false;
    gen::RuleSet rules;
    std::string sql_f;
    std::string function_rejected;
    std::string sql_o;
    std::string output_rejected;
    std::string state;
    std::string error;
};

nlohmann::json to_json(const CandidateRecord& c);

struct QuestionResult {
    std::string final_sql;
    int winner = -1;
    std::vector<CandidateRecord> candidates;
    std::map<std::string, PhaseUsage> phases;
    std::vector<llm::ChatTranscript> transcripts;  // one per candidate that reached generation
};

struct PipelineAssets {
    std::vector<std::string> rule_catalog;
    std::vector<align::OutputExample> example_bank;
    std::optional<gen::FewShotStore> few_shots;
};

PipelineAssets load_assets(const Config& config);

QuestionResult answer_question(const Config& config, const std::shared_ptr<llm::Provider>& provider,
                               const PipelineAssets& assets, const DatabaseResources& resources,
                               db::Database& db, const std::string& question, const std::string& evidence,
                               const select::Schedule& schedule);

struct BenchmarkSample {
    long long question_id = 0;
    std::string db_id;
    std::string question;
    std::string evidence;
    std::string gold_sql;
    std::optional<std::string> difficulty;
    std::filesystem::path db_path;
};

// BIRD (dev.json + dev_databases/) or Spider (dev.json + database/) layout.
std::vector<BenchmarkSample> load_dataset(const std::filesystem::path& dir,
                                          const std::optional<std::filesystem::path>& gold_override = std::nullopt);

struct SampleRecord {
    long long question_id = 0;
    std::string db_id;
    std::optional<std::string> difficulty;
    std::string question;
    std::string gold_sql;
    std::string final_sql;
    bool ex_correct = false;
    int interaction_count = 0;
    long long output_tokens = 0;
    std::string error;
    std::map<std::string, PhaseUsage> phases;
    nlohmann::json candidates = nlohmann::json::array();
};

nlohmann::json to_json(const SampleRecord& r);
SampleRecord sample_record_from_json(const nlohmann::json& doc);

struct DifficultyStats {
    long long count = 0;
    long long correct = 0;
    double ex = 0.0;
};

struct RunReport {
    std::vector<SampleRecord> per_sample;
    DifficultyStats overall;
    std::map<std::string, DifficultyStats> by_difficulty;
    std::map<int, DifficultyStats> by_interaction_count;
    std::map<std::string, PhaseUsage> phase_totals;
    long long output_tokens = 0;
    double seconds = 0.0;
};

RunReport aggregate(std::vector<SampleRecord> records);

// Timing-free, so replayed runs serialize byte-identically.
nlohmann::json report_to_json(const RunReport& report);
std::string summary_text(const RunReport& report);

struct CostRow {
    std::string phase;
    double seconds = 0.0;
    double output_tokens = 0.0;
    double cost = 0.0;
};

// Per-question averages laid out like the pipeline block of the cost table.
std::vector<CostRow> cost_report(const RunReport& report, const Config& config = {});
std::string cost_text(const std::vector<CostRow>& rows);

SampleRecord evaluate_sample(const Config& config, const std::shared_ptr<llm::Provider>& provider,
                             const PipelineAssets& assets, ResourceCache& resources, const BenchmarkSample& sample,
                             const select::Schedule& schedule, const std::filesystem::path* transcript_dir = nullptr);

// Runs every sample not already recorded under run_dir/samples and writes
// report.json, summary.txt, cost.json/cost.txt and timings.json.
RunReport run_benchmark(const Config& config, const std::vector<BenchmarkSample>& samples,
                        const std::filesystem::path& run_dir, std::shared_ptr<llm::Provider> provider = nullptr);

std::vector<SampleRecord> load_records(const std::filesystem::path& run_dir);

}  // namespace mci::harness
