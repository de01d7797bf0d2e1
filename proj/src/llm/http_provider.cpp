#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <regex>
#include <thread>

#include <json.hpp>

#include "mci/llm.hpp"

namespace mci::llm {

namespace {

struct Endpoint {
    std::string base;  // scheme://host[:port]
    std::string path;
};

Endpoint split_endpoint(const std::string& url) {
    static const std::regex re(R"(^(https?://[^/]+)(/.*)?$)");
    std::smatch m;
    if (!std::regex_match(url, m, re)) throw ConfigError("malformed endpoint URL: " + url);
    return {m[1].str(), m[2].matched ? m[2].str() : "/"};
}

}  // namespace

HttpProvider::HttpProvider(HttpConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
        if (const char* key = std::getenv("MCI_API_KEY")) config_.api_key = key;
    }
}

Completion HttpProvider::complete(const Request& request) {
    if (config_.api_key.empty())
        throw GatewayError(GatewayError::Kind::Auth, "MCI_API_KEY is not set");

    nlohmann::json body = {{"model", request.model}, {"temperature", request.temperature}};
    body["messages"] = nlohmann::json::array();
    for (const auto& m : request.messages)
        body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
    // The API accepts at most four stop sequences.
    if (!request.stop.empty()) {
        auto stop = nlohmann::json::array();
        for (size_t i = 0; i < request.stop.size() && i < 4; ++i) stop.push_back(request.stop[i]);
        body["stop"] = stop;
    }

    const Endpoint ep = split_endpoint(config_.endpoint);
    httplib::Client cli(ep.base);
    cli.set_connection_timeout(config_.timeout);
    cli.set_read_timeout(config_.timeout);
    cli.set_bearer_token_auth(config_.api_key);

    for (int attempt = 0;; ++attempt) {
        auto res = cli.Post(ep.path, body.dump(), "application/json");
        std::optional<std::chrono::seconds> retry_after;
        GatewayError::Kind kind = GatewayError::Kind::Network;
        std::string message;

        if (!res) {
            message = "request failed: " + httplib::to_string(res.error());
        } else if (res->status == 200) {
            auto doc = nlohmann::json::parse(res->body, nullptr, false);
            if (doc.is_discarded() || !doc.contains("choices") || doc["choices"].empty())
                throw GatewayError(GatewayError::Kind::Protocol, "unexpected response body");
            Completion c;
            const auto& content = doc["choices"][0]["message"]["content"];
            c.text = content.is_string() ? content.get<std::string>() : "";
            if (doc.contains("usage")) {
                c.output_tokens = doc["usage"].value("completion_tokens", 0LL);
                c.input_tokens = doc["usage"].value("prompt_tokens", 0LL);
            }
            if (c.output_tokens == 0) c.output_tokens = estimate_tokens(c.text);
            return c;
        } else {
            message = "HTTP " + std::to_string(res->status) + ": " + res->body.substr(0, 300);
            if (res->status == 401 || res->status == 403) {
                throw GatewayError(GatewayError::Kind::Auth, message);
            } else if (res->status == 429) {
                kind = GatewayError::Kind::RateLimit;
                if (res->has_header("Retry-After")) {
                    try {
                        retry_after = std::chrono::seconds(std::stol(res->get_header_value("Retry-After")));
                    } catch (const std::exception&) {
                    }
                }
            } else if (res->status < 500) {
                throw GatewayError(GatewayError::Kind::Protocol, message);
            }
        }

        if (attempt >= config_.max_retries) throw GatewayError(kind, message, retry_after);
        auto wait = retry_after.value_or(std::chrono::seconds(1LL << attempt));
        std::this_thread::sleep_for(std::min(wait, std::chrono::seconds(60)));
    }
}

}  // namespace mci::llm
