// HTTP transports for the hosted provider families. All three speak JSON
// over a chat-style endpoint; only envelope and auth header differ. These
// paths are exercised by the env-gated live smoke test, never by the
// offline suites.

#include "dre/errors.hpp"
#include "dre/llm_gateway.hpp"

// httplib drags in resolv.h, whose _res macro mangles Eigen internals;
// keep it after every Eigen-bearing header.
#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include <cstdlib>
#include <nlohmann/json.hpp>

namespace dre::gateway {

using json = nlohmann::json;

namespace {

std::string env_or_throw(const std::string& name) {
    const char* value = std::getenv(name.c_str());
    if (value == nullptr || *value == '\0')
        throw MissingCredentials("environment variable " + name + " is not set");
    return value;
}

std::string api_key(const ProviderConfig& config, const char* default_env) {
    return env_or_throw(config.api_key_env.empty() ? default_env
                                                   : config.api_key_env);
}

struct ParsedUrl {
    std::string origin;  // scheme://host[:port]
    std::string path;    // leading path prefix, no trailing slash
};

ParsedUrl split_url(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos)
        throw ConfigError("base_url must include a scheme: " + url);
    auto path_begin = url.find('/', scheme_end + 3);
    if (path_begin == std::string::npos) return {url, ""};
    std::string path = url.substr(path_begin);
    while (!path.empty() && path.back() == '/') path.pop_back();
    return {url.substr(0, path_begin), path};
}

json post_json(const ProviderConfig& config, const std::string& base_url,
               const std::string& path, const httplib::Headers& headers,
               const json& body) {
    ParsedUrl url = split_url(base_url);
    httplib::Client client(url.origin);
    client.set_connection_timeout(static_cast<time_t>(config.timeout_seconds));
    client.set_read_timeout(static_cast<time_t>(config.timeout_seconds));
    client.set_write_timeout(static_cast<time_t>(config.timeout_seconds));

    auto result = client.Post(url.path + path, headers, body.dump(),
                              "application/json");
    if (!result)
        throw ProviderTransport::TransientFailure(
            "connection failure: " + httplib::to_string(result.error()));
    if (result->status >= 500 || result->status == 429)
        throw ProviderTransport::TransientFailure(
            "provider status " + std::to_string(result->status));
    if (result->status != 200)
        throw ProviderError("provider status " + std::to_string(result->status) +
                            ": " + result->body.substr(0, 200));
    try {
        return json::parse(result->body);
    } catch (const json::exception& e) {
        throw ProviderError(std::string("invalid provider JSON: ") + e.what());
    }
}

class OpenAiTransport final : public ProviderTransport {
public:
    explicit OpenAiTransport(bool require_key) : require_key_(require_key) {}

    std::string complete_once(const ProviderConfig& config,
                              const LlmRequest& request) override {
        httplib::Headers headers;
        if (require_key_)
            headers.emplace("Authorization", "Bearer " + api_key(config, "OPENAI_API_KEY"));
        json body;
        body["model"] = config.model_name;
        body["temperature"] = config.temperature;
        body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});

        std::string base = config.base_url.empty() ? "https://api.openai.com"
                                                   : config.base_url;
        json reply = post_json(config, base, "/v1/chat/completions", headers, body);
        try {
            return reply.at("choices").at(0).at("message").at("content").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError(std::string("unexpected completion shape: ") + e.what());
        }
    }

private:
    bool require_key_;
};

class AnthropicTransport final : public ProviderTransport {
public:
    std::string complete_once(const ProviderConfig& config,
                              const LlmRequest& request) override {
        httplib::Headers headers{
            {"x-api-key", api_key(config, "ANTHROPIC_API_KEY")},
            {"anthropic-version", "2023-06-01"},
        };
        json body;
        body["model"] = config.model_name;
        body["temperature"] = config.temperature;
        body["max_tokens"] = 1024;
        body["messages"] = json::array({{{"role", "user"}, {"content", request.prompt}}});

        std::string base = config.base_url.empty() ? "https://api.anthropic.com"
                                                   : config.base_url;
        json reply = post_json(config, base, "/v1/messages", headers, body);
        try {
            return reply.at("content").at(0).at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError(std::string("unexpected completion shape: ") + e.what());
        }
    }
};

class GeminiTransport final : public ProviderTransport {
public:
    std::string complete_once(const ProviderConfig& config,
                              const LlmRequest& request) override {
        std::string key = api_key(config, "GEMINI_API_KEY");
        json body;
        body["contents"] = json::array(
            {{{"parts", json::array({{{"text", request.prompt}}})}}});
        body["generationConfig"] = {{"temperature", config.temperature}};

        std::string base = config.base_url.empty()
                               ? "https://generativelanguage.googleapis.com"
                               : config.base_url;
        std::string path = "/v1beta/models/" + config.model_name +
                           ":generateContent?key=" + key;
        json reply = post_json(config, base, path, {}, body);
        try {
            return reply.at("candidates").at(0).at("content").at("parts").at(0)
                .at("text").get<std::string>();
        } catch (const json::exception& e) {
            throw ProviderError(std::string("unexpected completion shape: ") + e.what());
        }
    }
};

}  // namespace

std::shared_ptr<ProviderTransport> make_http_transport(Provider provider) {
    switch (provider) {
        case Provider::kOpenAiCompatible:
            return std::make_shared<OpenAiTransport>(/*require_key=*/true);
        case Provider::kLocalHttp:
            return std::make_shared<OpenAiTransport>(/*require_key=*/false);
        case Provider::kAnthropicCompatible:
            return std::make_shared<AnthropicTransport>();
        case Provider::kGeminiCompatible:
            return std::make_shared<GeminiTransport>();
        case Provider::kMock:
            break;
    }
    throw ConfigError("no HTTP transport for provider " +
                      provider_to_string(provider));
}

}  // namespace dre::gateway
