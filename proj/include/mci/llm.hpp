#pragma once

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mci/error.hpp"

namespace mci::llm {

enum class Role { System, User, Assistant };

std::string to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
    Role role = Role::User;
    std::string content;

    bool operator==(const ChatMessage&) const = default;
};

class GatewayError : public Error {
public:
    enum class Kind { Network, Auth, RateLimit, CacheMiss, ScriptExhausted, Protocol, EmptyCompletion };

    GatewayError(Kind kind, const std::string& message,
                 std::optional<std::chrono::seconds> retry_after = std::nullopt)
        : Error(message), kind_(kind), retry_after_(retry_after) {}

    Kind kind() const { return kind_; }
    std::optional<std::chrono::seconds> retry_after() const { return retry_after_; }

private:
    Kind kind_;
    std::optional<std::chrono::seconds> retry_after_;
};

struct Request {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;
    std::vector<std::string> stop;
};

struct Completion {
    std::string text;
    long long output_tokens = 0;  // provider-reported or estimated
    long long input_tokens = 0;
    bool from_cache = false;
};

class Provider {
public:
    virtual ~Provider() = default;
    virtual std::string id() const = 0;
    virtual Completion complete(const Request& request) = 0;
};

// Returns canned responses strictly in order; throws once the script runs out.
class ScriptedProvider : public Provider {
public:
    explicit ScriptedProvider(std::vector<std::string> script);

    std::string id() const override { return "scripted"; }
    Completion complete(const Request& request) override;

    size_t consumed() const;
    const std::vector<Request>& requests() const { return requests_; }

private:
    mutable std::mutex mu_;
    std::vector<std::string> script_;
    size_t next_ = 0;
    std::vector<Request> requests_;
};

// Answers through a user callback; handy for fixtures that key off the prompt.
class FunctionProvider : public Provider {
public:
    using Fn = std::function<std::string(const Request&)>;
    FunctionProvider(std::string id, Fn fn) : id_(std::move(id)), fn_(std::move(fn)) {}

    std::string id() const override { return id_; }
    Completion complete(const Request& request) override;

private:
    std::string id_;
    Fn fn_;
};

struct HttpConfig {
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key;  // defaults to $MCI_API_KEY
    std::chrono::seconds timeout{120};
    int max_retries = 3;
};

// OpenAI-compatible chat-completions client.
class HttpProvider : public Provider {
public:
    explicit HttpProvider(HttpConfig config);

    std::string id() const override { return "openai-compatible"; }
    Completion complete(const Request& request) override;

private:
    HttpConfig config_;
};

std::string cache_key(std::string_view provider_id, std::string_view model_id,
                      const std::vector<ChatMessage>& messages, double temperature);

enum class CacheMode {
    ReplayOnly,  // misses raise GatewayError(CacheMiss)
    Replay,      // misses go upstream and are recorded
    Record,      // always go upstream, overwrite entries
};

// Content-addressed request/response store, one JSON file per request.
class ReplayCache : public Provider {
public:
    ReplayCache(std::filesystem::path dir, CacheMode mode, std::string provider_id,
                std::shared_ptr<Provider> upstream = nullptr);

    std::string id() const override { return provider_id_; }
    Completion complete(const Request& request) override;

    std::filesystem::path entry_path(const std::string& key) const;
    size_t hits() const { return hits_; }
    size_t misses() const { return misses_; }

private:
    std::filesystem::path dir_;
    CacheMode mode_;
    std::string provider_id_;
    std::shared_ptr<Provider> upstream_;
    std::mutex write_mu_;
    std::atomic<size_t> hits_{0};
    std::atomic<size_t> misses_{0};
};

long long estimate_tokens(std::string_view text);

// Cuts text at the first occurrence of any stop marker.
std::string truncate_at_stop(std::string text, const std::vector<std::string>& stop);

struct Usage {
    long long calls = 0;
    long long input_tokens = 0;
    long long output_tokens = 0;
};

// Provider plus model choice and usage counters. Shareable across threads.
class Gateway {
public:
    Gateway(std::shared_ptr<Provider> provider, std::string model);

    Completion complete(const std::vector<ChatMessage>& messages, double temperature,
                        const std::vector<std::string>& stop = {});

    const std::string& model() const { return model_; }
    Provider& provider() { return *provider_; }
    Usage usage() const;

private:
    std::shared_ptr<Provider> provider_;
    std::string model_;
    std::atomic<long long> calls_{0};
    std::atomic<long long> input_tokens_{0};
    std::atomic<long long> output_tokens_{0};
};

std::string complete(Provider& provider, const std::vector<ChatMessage>& messages, double temperature,
                     const std::vector<std::string>& stop_markers, const std::string& model = "default");

struct ChatTranscript {
    std::vector<ChatMessage> messages;
    std::vector<std::pair<size_t, std::string>> injections;  // (message index, kind)
    long long total_output_tokens = 0;

    size_t rounds() const;  // assistant turns
    const ChatMessage* last_assistant() const;
};

struct SessionPlan {
    std::string system_prompt;  // optional
    std::string initial_prompt;
    std::vector<std::string> stop_markers;
    int max_rounds = 6;
    double temperature = 0.0;
};

struct Injection {
    std::string kind;
    std::string content;
};

// Returns the next instruction, or nullopt to terminate the session.
using Controller =
    std::function<std::optional<Injection>(const ChatTranscript&, const std::string& last_reply)>;

class RoundBudgetExhausted : public Error {
public:
    explicit RoundBudgetExhausted(ChatTranscript partial)
        : Error("session hit its round budget after " + std::to_string(partial.rounds()) + " rounds"),
          transcript_(std::move(partial)) {}
    const ChatTranscript& transcript() const { return transcript_; }

private:
    ChatTranscript transcript_;
};

ChatTranscript run_chained_session(Gateway& gateway, const SessionPlan& plan, const Controller& controller);

}  // namespace mci::llm
