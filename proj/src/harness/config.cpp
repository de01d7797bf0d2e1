#include <set>

#include "mci/harness.hpp"
#include "mci/util.hpp"

namespace mci::harness {

namespace {

std::string cache_mode_name(llm::CacheMode m) {
    switch (m) {
        case llm::CacheMode::ReplayOnly: return "replay-only";
        case llm::CacheMode::Replay: return "replay";
        case llm::CacheMode::Record: return "record";
    }
    return "replay";
}

llm::CacheMode cache_mode_from(const std::string& s) {
    if (s == "replay-only") return llm::CacheMode::ReplayOnly;
    if (s == "replay") return llm::CacheMode::Replay;
    if (s == "record") return llm::CacheMode::Record;
    throw ConfigError("unknown cache_mode '" + s + "' (expected replay-only, replay or record)");
}

template <typename T>
void read(const nlohmann::json& doc, const char* key, T& field) {
    if (doc.contains(key)) field = doc.at(key).get<T>();
}

void read_path(const nlohmann::json& doc, const char* key, std::optional<std::filesystem::path>& field) {
    if (!doc.contains(key)) return;
    if (doc.at(key).is_null()) field.reset();
    else field = doc.at(key).get<std::string>();
}

nlohmann::json path_or_null(const std::optional<std::filesystem::path>& p) {
    return p ? nlohmann::json(p->string()) : nlohmann::json(nullptr);
}

}  // namespace

Config config_from_json(const nlohmann::json& doc) {
    if (!doc.is_object()) throw ConfigError("config must be a JSON object");
    static const std::set<std::string> known = {
        "provider", "provider_id", "endpoint", "model", "cache_dir", "cache_mode", "request_timeout_seconds",
        "max_retries", "schedule", "max_rounds", "feedback_rows", "example_values", "few_shot_k",
        "few_shot_path", "sql_timeout_seconds", "function_alignment", "output_alignment", "rule_catalog",
        "example_bank", "summarize_rules", "similarity_threshold", "describe_tables", "profile_dir",
        "profile_on_demand", "workers", "strict_multiset", "price_input_per_1k", "price_output_per_1k"};
    for (const auto& [key, _] : doc.items())
        if (!known.count(key)) throw ConfigError("unknown config key '" + key + "'");

    Config c;
    try {
        read(doc, "provider", c.provider);
        read(doc, "provider_id", c.provider_id);
        read(doc, "endpoint", c.endpoint);
        read(doc, "model", c.model);
        read_path(doc, "cache_dir", c.cache_dir);
        if (doc.contains("cache_mode")) c.cache_mode = cache_mode_from(doc.at("cache_mode").get<std::string>());
        read(doc, "request_timeout_seconds", c.request_timeout_seconds);
        read(doc, "max_retries", c.max_retries);
        read(doc, "schedule", c.schedule);
        read(doc, "max_rounds", c.max_rounds);
        read(doc, "feedback_rows", c.feedback_rows);
        read(doc, "example_values", c.example_values);
        read(doc, "few_shot_k", c.few_shot_k);
        read_path(doc, "few_shot_path", c.few_shot_path);
        read(doc, "sql_timeout_seconds", c.sql_timeout_seconds);
        read(doc, "function_alignment", c.function_alignment);
        read(doc, "output_alignment", c.output_alignment);
        read_path(doc, "rule_catalog", c.rule_catalog);
        read_path(doc, "example_bank", c.example_bank);
        read(doc, "summarize_rules", c.summarize_rules);
        read(doc, "similarity_threshold", c.similarity_threshold);
        read(doc, "describe_tables", c.describe_tables);
        read_path(doc, "profile_dir", c.profile_dir);
        read(doc, "profile_on_demand", c.profile_on_demand);
        read(doc, "workers", c.workers);
        read(doc, "strict_multiset", c.strict_multiset);
        read(doc, "price_input_per_1k", c.price_input_per_1k);
        read(doc, "price_output_per_1k", c.price_output_per_1k);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("bad config value: ") + e.what());
    }
    if (c.provider != "http" && c.provider != "replay")
        throw ConfigError("unknown provider '" + c.provider + "' (expected http or replay)");
    if (c.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    if (c.workers < 1) throw ConfigError("workers must be at least 1");
    return c;
}

nlohmann::json to_json(const Config& c) {
    return {{"provider", c.provider},
            {"provider_id", c.provider_id},
            {"endpoint", c.endpoint},
            {"model", c.model},
            {"cache_dir", path_or_null(c.cache_dir)},
            {"cache_mode", cache_mode_name(c.cache_mode)},
            {"request_timeout_seconds", c.request_timeout_seconds},
            {"max_retries", c.max_retries},
            {"schedule", c.schedule},
            {"max_rounds", c.max_rounds},
            {"feedback_rows", c.feedback_rows},
            {"example_values", c.example_values},
            {"few_shot_k", c.few_shot_k},
            {"few_shot_path", path_or_null(c.few_shot_path)},
            {"sql_timeout_seconds", c.sql_timeout_seconds},
            {"function_alignment", c.function_alignment},
            {"output_alignment", c.output_alignment},
            {"rule_catalog", path_or_null(c.rule_catalog)},
            {"example_bank", path_or_null(c.example_bank)},
            {"summarize_rules", c.summarize_rules},
            {"similarity_threshold", c.similarity_threshold},
            {"describe_tables", c.describe_tables},
            {"profile_dir", path_or_null(c.profile_dir)},
            {"profile_on_demand", c.profile_on_demand},
            {"workers", c.workers},
            {"strict_multiset", c.strict_multiset},
            {"price_input_per_1k", c.price_input_per_1k},
            {"price_output_per_1k", c.price_output_per_1k}};
}

Config load_config(const std::filesystem::path& path) {
    if (!std::filesystem::exists(path)) throw ConfigError("config file not found: " + path.string());
    try {
        return config_from_json(nlohmann::json::parse(util::read_file(path)));
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

std::shared_ptr<llm::Provider> make_provider(const Config& config) {
    if (config.provider == "replay") {
        if (!config.cache_dir) throw ConfigError("provider 'replay' needs cache_dir");
        return std::make_shared<llm::ReplayCache>(*config.cache_dir, llm::CacheMode::ReplayOnly, config.provider_id);
    }
    llm::HttpConfig http;
    http.endpoint = config.endpoint;
    http.timeout = std::chrono::seconds(config.request_timeout_seconds);
    http.max_retries = config.max_retries;
    auto live = std::make_shared<llm::HttpProvider>(http);
    if (!config.cache_dir) return live;
    return std::make_shared<llm::ReplayCache>(*config.cache_dir, config.cache_mode, config.provider_id, live);
}

std::filesystem::path profile_path(const Config& config, const std::filesystem::path& db_path) {
    const std::string name = db_path.stem().string() + ".profile.json";
    if (config.profile_dir) return *config.profile_dir / name;
    return db_path.parent_path() / name;
}

PhaseUsage& PhaseUsage::operator+=(const PhaseUsage& o) {
    calls += o.calls;
    input_tokens += o.input_tokens;
    output_tokens += o.output_tokens;
    seconds += o.seconds;
    return *this;
}

}  // namespace mci::harness
