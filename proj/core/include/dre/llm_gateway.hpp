#pragma once

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "dre/prompts.hpp"

namespace dre::gateway {

enum class Provider {
    kOpenAiCompatible,
    kAnthropicCompatible,
    kGeminiCompatible,
    kLocalHttp,
    kMock,
};

Provider provider_from_string(const std::string& name);
std::string provider_to_string(Provider provider);

enum class RequestMode { kSlide, kDre, kGenerate, kCheck };

std::string mode_to_string(RequestMode mode);
RequestMode mode_from_string(const std::string& name);

struct ProviderConfig {
    Provider provider = Provider::kMock;
    std::string model_name = "mock-judge";
    double temperature = 0.0;
    int max_retries = 2;
    double timeout_seconds = 60.0;
    int concurrency_limit = 4;
    // openai-compatible / local endpoints; defaults per provider otherwise.
    std::string base_url;
    // Name of the env var holding the key; empty picks the provider default
    // (OPENAI_API_KEY / ANTHROPIC_API_KEY / GEMINI_API_KEY).
    std::string api_key_env;
    // Empty disables the on-disk response cache.
    std::filesystem::path cache_dir;
    // Exponential backoff base; tests set 0 to skip sleeping.
    double backoff_base_seconds = 0.5;
    // Scripted replies for the mock provider (JSONL).
    std::filesystem::path mock_replies_path;

    void validate() const;
};

struct LlmRequest {
    std::string prompt;
    RequestMode mode = RequestMode::kSlide;
    std::string example_id;
    // Generation/check retries need fresh samples; evaluation modes keep
    // the cache-first contract.
    bool use_cache = true;
};

// sha256 over provider | model | prompt | temperature.
std::string cache_key(const ProviderConfig& config, const LlmRequest& request);

struct Completion {
    std::string text;
    bool cached = false;
};

enum class ParseMethod { kStructured, kFallback };

struct LlmJudgment {
    double score_llm = 0.0;               // clamped to [0, 5]
    std::optional<double> s_inf;          // present iff mode == dre, in [0, 1]
    std::string raw_text;
    ParseMethod parse_method = ParseMethod::kStructured;
    bool cached = false;
};

// "LLM Overall Score: <x>" (+ "Influence degree: <y>" in dre mode) on
// labeled lines; otherwise a fallback scan for the last in-range number.
// Throws UnparseableJudgment when no candidate exists.
LlmJudgment parse_judgment(const std::string& raw, RequestMode mode);

// First standalone yes/no token, case-insensitive.
bool parse_yes_no(const std::string& raw);

// One raw model call. Implementations throw TransientFailure for retryable
// conditions and ProviderError for fatal ones.
class ProviderTransport {
public:
    struct TransientFailure : std::runtime_error {
        using std::runtime_error::runtime_error;
    };

    virtual ~ProviderTransport() = default;
    virtual std::string complete_once(const ProviderConfig& config,
                                      const LlmRequest& request) = 0;
};

// Deterministic scripted transport for tests and offline runs. Replies are
// keyed by (example_id, mode); per-key FIFO sequences model multi-attempt
// flows, and kFailToken entries raise a transient failure.
class MockTransport final : public ProviderTransport {
public:
    static constexpr const char* kFailToken = "<<transient-failure>>";

    void script(const std::string& example_id, RequestMode mode,
                std::string reply);
    void script_sequence(const std::string& example_id, RequestMode mode,
                         std::vector<std::string> replies);
    void set_default_reply(std::string reply);

    int calls() const;
    std::string complete_once(const ProviderConfig& config,
                              const LlmRequest& request) override;

private:
    mutable std::mutex mutex_;
    std::unordered_map<std::string, std::vector<std::string>> sequences_;
    std::optional<std::string> default_reply_;
    int calls_ = 0;
};

// Builds a MockTransport from a JSONL script of
// {"example_id": str, "mode": "slide"|"dre"|"generate"|"check",
//  "reply": str} rows. Repeated (example_id, mode) rows form a reply
// sequence; example_id "*" sets the default reply.
std::shared_ptr<MockTransport> load_mock_replies(
    const std::filesystem::path& path);

// Provider client: cache lookup, bounded concurrency, retry with
// exponential backoff. Safe for concurrent callers.
class LlmClient {
public:
    explicit LlmClient(ProviderConfig config,
                       std::shared_ptr<ProviderTransport> transport = nullptr);

    const ProviderConfig& config() const { return config_; }
    ProviderTransport& transport() { return *transport_; }

    Completion complete(const LlmRequest& request);

    // complete + parse; one retry with an appended format reminder when the
    // reply does not parse.
    LlmJudgment judge(const LlmRequest& request);

    int provider_calls() const;
    int cache_hits() const;

private:
    Completion complete_uncached(const LlmRequest& request);

    ProviderConfig config_;
    std::shared_ptr<ProviderTransport> transport_;

    struct Limiter;
    std::shared_ptr<Limiter> limiter_;

    mutable std::mutex stats_mutex_;
    int provider_calls_ = 0;
    int cache_hits_ = 0;
};

}  // namespace dre::gateway
