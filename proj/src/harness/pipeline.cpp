#include <chrono>

#include "mci/harness.hpp"
#include "mci/util.hpp"

namespace mci::harness {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

void charge(PhaseUsage& phase, const llm::Gateway& gateway, Clock::time_point start) {
    auto u = gateway.usage();
    phase.calls += u.calls;
    phase.input_tokens += u.input_tokens;
    phase.output_tokens += u.output_tokens;
    phase.seconds += seconds_since(start);
}

nlohmann::json rules_json(const gen::RuleSet& r) {
    return {{"condition_rules", r.condition_rules},
            {"table_rules", r.table_rules},
            {"negative_constraints", r.negative_constraints},
            {"notes", r.notes}};
}

}  // namespace

nlohmann::json to_json(const CandidateRecord& c) {
    return {{"ordinal", c.ordinal},
            {"mode", profile::to_string(c.mode)},
            {"temperature", c.temperature},
            {"sql_d", c.sql_d},
            {"draft_parsed", c.draft_parsed},
            {"draft_attempts", c.draft_attempts},
            {"full_schema", c.full_schema},
            {"linked_columns", c.linked_columns},
            {"sql_g", c.sql_g},
            {"verdict", c.verdict},
            {"branch", c.branch},
            {"interaction_count", c.interaction_count},
            {"budget_exhausted", c.budget_exhausted},
            {"rules", rules_json(c.rules)},
            {"sql_f", c.sql_f},
            {"function_rejected", c.function_rejected},
            {"sql_o", c.sql_o},
            {"output_rejected", c.output_rejected},
            {"state", c.state},
            {"error", c.error}};
}

ResourceCache::ResourceCache(Config config, std::shared_ptr<llm::Provider> provider)
    : config_(std::move(config)), provider_(std::move(provider)) {}

std::shared_ptr<const DatabaseResources> ResourceCache::get(const std::filesystem::path& db_path) {
    std::shared_ptr<std::once_flag> flag;
    {
        std::lock_guard lock(mu_);
        auto& f = flags_[db_path];
        if (!f) f = std::make_shared<std::once_flag>();
        flag = f;
    }
    std::call_once(*flag, [&] {
        auto res = std::make_shared<DatabaseResources>();
        res->db_path = db_path;
        const auto artifact = profile_path(config_, db_path);

        profile::BuildOptions opts;
        opts.profile.similarity_threshold = config_.similarity_threshold;
        std::unique_ptr<llm::Gateway> describer;
        if (config_.describe_tables && provider_) {
            describer = std::make_unique<llm::Gateway>(provider_, config_.model);
            opts.gateway = describer.get();
        }
        if (config_.profile_on_demand) {
            res->profile = profile::ensure_profile(db_path, artifact, opts);
        } else {
            if (!std::filesystem::exists(artifact))
                throw ConfigError("no metadata artifact " + artifact.string() + " for " + db_path.string() +
                                  "; run `mci profile` first or enable profile_on_demand");
            res->profile = profile::load_profile(artifact);
            if (res->profile.version != profile::kArtifactVersion ||
                res->profile.schema_checksum != util::sha256_file(db_path))
                throw ConfigError("metadata artifact " + artifact.string() + " is stale for " + db_path.string());
        }

        db::Database db(db_path);
        res->schema = db.introspect_schema();
        res->values = profile::build_value_index(db, res->schema, res->profile.columns, opts.profile);
        res->schema_tokens = gen::schema_tokens(res->schema);
        std::lock_guard lock(mu_);
        loaded_[db_path] = std::move(res);
    });
    std::lock_guard lock(mu_);
    auto it = loaded_.find(db_path);
    if (it == loaded_.end()) throw ConfigError("metadata for " + db_path.string() + " failed to load earlier");
    return it->second;
}

PipelineAssets load_assets(const Config& config) {
    PipelineAssets a;
    a.rule_catalog = config.rule_catalog ? align::load_rule_catalog(*config.rule_catalog) : align::default_rule_catalog();
    a.example_bank = config.example_bank ? align::load_example_bank(*config.example_bank) : align::default_example_bank();
    if (config.few_shot_path) a.few_shots = gen::FewShotStore::load(*config.few_shot_path);
    return a;
}

QuestionResult answer_question(const Config& config, const std::shared_ptr<llm::Provider>& provider,
                               const PipelineAssets& assets, const DatabaseResources& res, db::Database& db,
                               const std::string& question, const std::string& evidence,
                               const select::Schedule& schedule) {
    if (schedule.empty()) throw ConfigError("candidate schedule is empty");
    QuestionResult out;
    for (const auto& name : phase_names()) out.phases[name];
    const std::chrono::milliseconds sql_timeout = std::chrono::seconds(config.sql_timeout_seconds);

    auto examples = profile::retrieve_examples(res.values, question, config.example_values);
    std::map<profile::ContextMode, profile::MetadataContext> contexts;
    for (const auto& entry : schedule)
        if (!contexts.count(entry.mode))
            contexts[entry.mode] = profile::render_context(res.schema, res.profile, entry.mode, &examples);

    std::vector<gen::FewShotCase> cases;
    if (assets.few_shots)
        cases = gen::retrieve_similar_cases(*assets.few_shots, question, config.few_shot_k, res.schema_tokens);

    std::vector<select::CandidateSql> candidates;
    for (std::size_t i = 0; i < schedule.size(); ++i) {
        const auto& entry = schedule[i];
        CandidateRecord rec;
        rec.ordinal = static_cast<int>(i);
        rec.mode = entry.mode;
        rec.temperature = entry.temperature;
        const auto& ctx = contexts.at(entry.mode);

        auto start = Clock::now();
        llm::Gateway link_gw(provider, config.model);
        auto link = linking::link_schema(link_gw, question, evidence, ctx, res.schema, entry.temperature);
        charge(out.phases["schema_linking"], link_gw, start);
        rec.sql_d = link.draft.sql;
        rec.draft_parsed = link.draft.parsed;
        rec.draft_attempts = link.draft.attempts;
        rec.full_schema = link.schema.full_schema;
        for (const auto& c : link.schema.columns) rec.linked_columns.push_back(c.str());

        start = Clock::now();
        llm::Gateway gen_gw(provider, config.model);
        gen::GenerationPlan plan;
        plan.max_rounds = config.max_rounds;
        plan.temperature = entry.temperature;
        plan.feedback_rows = config.feedback_rows;
        plan.timeout = sql_timeout;
        auto generated = gen::run_generation(gen_gw, db, question, evidence, link.schema.rendered_text, link.draft.sql,
                                             cases, plan, &res.profile, &res.schema);
        if (config.summarize_rules) generated.rules = gen::summarize_rules(gen_gw, generated.rules, question);
        charge(out.phases["sql_generation"], gen_gw, start);
        rec.sql_g = generated.sql_g;
        rec.verdict = gen::to_string(generated.verdict);
        rec.branch = gen::to_string(generated.branch);
        rec.interaction_count = generated.interaction_count;
        rec.budget_exhausted = generated.budget_exhausted;
        rec.rules = generated.rules;
        out.transcripts.push_back(std::move(generated.transcript));

        rec.sql_f = rec.sql_g;
        if (config.function_alignment) {
            start = Clock::now();
            llm::Gateway gw(provider, config.model);
            auto r = align::align_functions(gw, rec.sql_g, rec.rules, question, assets.rule_catalog, &db);
            charge(out.phases["function_alignment"], gw, start);
            rec.sql_f = r.sql;
            rec.function_rejected = r.rejected;
        }
        rec.sql_o = rec.sql_f;
        if (config.output_alignment) {
            start = Clock::now();
            llm::Gateway gw(provider, config.model);
            auto r = align::align_output(gw, rec.sql_f, question, assets.example_bank, &db);
            charge(out.phases["output_alignment"], gw, start);
            rec.sql_o = r.sql;
            rec.output_rejected = r.rejected;
        }

        start = Clock::now();
        select::CandidateSql cand;
        cand.sql = rec.sql_o;
        cand.mode = entry.mode;
        cand.temperature = entry.temperature;
        cand.ordinal = rec.ordinal;
        cand.outcome = db.execute(cand.sql, sql_timeout, db::kScoringRowCap);
        rec.state = std::string(db::to_string(cand.outcome.state));
        out.phases["selection"].seconds += seconds_since(start);
        candidates.push_back(std::move(cand));
        out.candidates.push_back(std::move(rec));
    }

    auto start = Clock::now();
    db::CompareOptions opts;
    opts.strict_multiset = config.strict_multiset;
    auto result = select::vote_detail(candidates, opts);
    out.phases["selection"].seconds += seconds_since(start);
    out.winner = static_cast<int>(result.winner);
    out.final_sql = candidates[result.winner].sql;
    return out;
}

}  // namespace mci::harness
