#include <fstream>
#include <sstream>

#include <json.hpp>

#include "mci/llm.hpp"
#include "mci/util.hpp"

namespace mci::llm {

using nlohmann::json;

std::string to_string(Role role) {
    switch (role) {
        case Role::System: return "system";
        case Role::User: return "user";
        case Role::Assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(std::string_view s) {
    if (s == "system") return Role::System;
    if (s == "assistant") return Role::Assistant;
    if (s == "user") return Role::User;
    throw Error("unknown chat role '" + std::string(s) + "'");
}

long long estimate_tokens(std::string_view text) {
    long long n = 0;
    bool in_word = false;
    for (char c : text) {
        bool space = std::isspace(static_cast<unsigned char>(c)) != 0;
        if (!space && !in_word) ++n;
        in_word = !space;
    }
    return n;
}

std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop) {
    size_t cut = std::string::npos;
    for (const auto& marker : stop) {
        if (marker.empty()) continue;
        size_t pos = text.find(marker);
        if (pos < cut) cut = pos;
    }
    if (cut != std::string::npos) text.resize(cut);
    return text;
}

ScriptedProvider::ScriptedProvider(std::vector<std::string> script) : script_(std::move(script)) {}

Completion ScriptedProvider::complete(const Request& request) {
    std::lock_guard lock(mu_);
    requests_.push_back(request);
    if (next_ >= script_.size())
        throw GatewayError(GatewayError::Kind::ScriptExhausted,
                           "scripted provider exhausted after " + std::to_string(script_.size()) +
                               " responses");
    Completion c;
    c.text = script_[next_++];
    c.output_tokens = estimate_tokens(c.text);
    return c;
}

size_t ScriptedProvider::consumed() const {
    std::lock_guard lock(mu_);
    return next_;
}

Completion FunctionProvider::complete(const Request& request) {
    Completion c;
    c.text = fn_(request);
    c.output_tokens = estimate_tokens(c.text);
    return c;
}

namespace {

json messages_json(const std::vector<ChatMessage>& messages) {
    json arr = json::array();
    for (const auto& m : messages) arr.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    return arr;
}

}  // namespace

std::string cache_key(std::string_view provider_id, std::string_view model_id,
                      const std::vector<ChatMessage>& messages, double temperature) {
    // nlohmann orders object keys, which makes dump() canonical.
    json doc = {{"provider", provider_id},
                {"model", model_id},
                {"temperature", util::format_double(temperature)},
                {"messages", messages_json(messages)}};
    return util::sha256_hex(doc.dump());
}

ReplayCache::ReplayCache(std::filesystem::path dir, CacheMode mode, std::string provider_id,
                         std::shared_ptr<Provider> upstream)
    : dir_(std::move(dir)), mode_(mode), provider_id_(std::move(provider_id)), upstream_(std::move(upstream)) {
    if (mode_ != CacheMode::ReplayOnly && !upstream_)
        throw ConfigError("recording cache needs an upstream provider");
}

std::filesystem::path ReplayCache::entry_path(const std::string& key) const {
    return dir_ / key.substr(0, 2) / (key + ".json");
}

Completion ReplayCache::complete(const Request& request) {
    const std::string key = cache_key(provider_id_, request.model, request.messages, request.temperature);
    const auto path = entry_path(key);

    if (mode_ != CacheMode::Record && std::filesystem::exists(path)) {
        json doc = json::parse(util::read_file(path));
        Completion c;
        c.text = doc.at("response").get<std::string>();
        c.output_tokens = doc.value("output_tokens", estimate_tokens(c.text));
        c.input_tokens = doc.value("input_tokens", 0LL);
        c.from_cache = true;
        ++hits_;
        return c;
    }
    ++misses_;
    if (mode_ == CacheMode::ReplayOnly)
        throw GatewayError(GatewayError::Kind::CacheMiss, "no cached response for request " + key);

    Completion c = upstream_->complete(request);
    json doc = {{"key", key},
                {"provider", provider_id_},
                {"model", request.model},
                {"temperature", request.temperature},
                {"messages", messages_json(request.messages)},
                {"response", c.text},
                {"output_tokens", c.output_tokens},
                {"input_tokens", c.input_tokens}};
    std::lock_guard lock(write_mu_);
    std::filesystem::create_directories(path.parent_path());
    util::write_file_atomic(path, doc.dump(2) + "\n");
    return c;
}

Gateway::Gateway(std::shared_ptr<Provider> provider, std::string model)
    : provider_(std::move(provider)), model_(std::move(model)) {}

Completion Gateway::complete(const std::vector<ChatMessage>& messages, double temperature,
                             const std::vector<std::string>& stop) {
    Request req{model_, messages, temperature, stop};
    Completion c = provider_->complete(req);
    c.text = truncate_at_stop(std::move(c.text), stop);
    if (util::trim(c.text).empty())
        throw GatewayError(GatewayError::Kind::EmptyCompletion, "provider returned an empty completion");
    if (c.input_tokens == 0) {
        for (const auto& m : messages) c.input_tokens += estimate_tokens(m.content);
    }
    ++calls_;
    input_tokens_ += c.input_tokens;
    output_tokens_ += c.output_tokens;
    return c;
}

Usage Gateway::usage() const { return {calls_.load(), input_tokens_.load(), output_tokens_.load()}; }

std::string complete(Provider& provider, const std::vector<ChatMessage>& messages, double temperature,
                     const std::vector<std::string>& stop_markers, const std::string& model) {
    Request req{model, messages, temperature, stop_markers};
    return truncate_at_stop(provider.complete(req).text, stop_markers);
}

size_t ChatTranscript::rounds() const {
    size_t n = 0;
    for (const auto& m : messages) n += m.role == Role::Assistant;
    return n;
}

const ChatMessage* ChatTranscript::last_assistant() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it)
        if (it->role == Role::Assistant) return &*it;
    return nullptr;
}

ChatTranscript run_chained_session(Gateway& gateway, const SessionPlan& plan, const Controller& controller) {
    if (plan.max_rounds < 1) throw ConfigError("max_rounds must be at least 1");
    ChatTranscript t;
    if (!plan.system_prompt.empty()) t.messages.push_back({Role::System, plan.system_prompt});
    t.messages.push_back({Role::User, plan.initial_prompt});

    for (int round = 1; round <= plan.max_rounds; ++round) {
        Completion c = gateway.complete(t.messages, plan.temperature, plan.stop_markers);
        t.total_output_tokens += c.output_tokens;
        t.messages.push_back({Role::Assistant, c.text});
        auto next = controller(t, c.text);
        if (!next) return t;
        if (round == plan.max_rounds) break;
        t.injections.emplace_back(t.messages.size(), next->kind);
        t.messages.push_back({Role::User, std::move(next->content)});
    }
    throw RoundBudgetExhausted(std::move(t));
}

}  // namespace mci::llm
