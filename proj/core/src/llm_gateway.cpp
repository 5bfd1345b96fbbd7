#include "dre/llm_gateway.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <condition_variable>
#include <cstdlib>
#include <regex>
#include <thread>

#include <nlohmann/json.hpp>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::gateway {

using json = nlohmann::json;

Provider provider_from_string(const std::string& name) {
    if (name == "openai_compatible") return Provider::kOpenAiCompatible;
    if (name == "anthropic_compatible") return Provider::kAnthropicCompatible;
    if (name == "gemini_compatible") return Provider::kGeminiCompatible;
    if (name == "local_http") return Provider::kLocalHttp;
    if (name == "mock") return Provider::kMock;
    throw ConfigError("unknown provider: " + name);
}

std::string provider_to_string(Provider provider) {
    switch (provider) {
        case Provider::kOpenAiCompatible: return "openai_compatible";
        case Provider::kAnthropicCompatible: return "anthropic_compatible";
        case Provider::kGeminiCompatible: return "gemini_compatible";
        case Provider::kLocalHttp: return "local_http";
        case Provider::kMock: return "mock";
    }
    return "unknown";
}

std::string mode_to_string(RequestMode mode) {
    switch (mode) {
        case RequestMode::kSlide: return "slide";
        case RequestMode::kDre: return "dre";
        case RequestMode::kGenerate: return "generate";
        case RequestMode::kCheck: return "check";
    }
    return "unknown";
}

RequestMode mode_from_string(const std::string& name) {
    if (name == "slide") return RequestMode::kSlide;
    if (name == "dre") return RequestMode::kDre;
    if (name == "generate") return RequestMode::kGenerate;
    if (name == "check") return RequestMode::kCheck;
    throw ConfigError("unknown request mode: " + name);
}

std::shared_ptr<MockTransport> load_mock_replies(
    const std::filesystem::path& path) {
    auto transport = std::make_shared<MockTransport>();
    size_t line_no = 0;
    for (const auto& line : util::read_lines(path)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecord("mock replies line " + std::to_string(line_no) +
                                  ": " + e.what());
        }
        std::string example_id = j.at("example_id").get<std::string>();
        std::string reply = j.at("reply").get<std::string>();
        if (example_id == "*") {
            transport->set_default_reply(reply);
        } else {
            transport->script(example_id,
                              mode_from_string(j.at("mode").get<std::string>()),
                              reply);
        }
    }
    return transport;
}

void ProviderConfig::validate() const {
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (concurrency_limit < 1) throw ConfigError("concurrency_limit must be >= 1");
    if (max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (timeout_seconds <= 0.0) throw ConfigError("timeout_seconds must be positive");
}

std::string cache_key(const ProviderConfig& config, const LlmRequest& request) {
    std::string material = provider_to_string(config.provider) + "|" +
                           config.model_name + "|" + request.prompt + "|" +
                           util::format_double(config.temperature);
    return util::sha256_hex(material);
}

// --- judgment parsing -------------------------------------------------------

namespace {

std::optional<double> find_labeled_number(const std::string& raw,
                                          const char* label_pattern) {
    std::regex re(std::string(label_pattern) +
                      R"(\s*[:=]?\s*\**\s*(-?\d+(?:\.\d+)?))",
                  std::regex::icase);
    std::smatch match;
    if (std::regex_search(raw, match, re)) return std::stod(match[1].str());
    return std::nullopt;
}

std::vector<double> all_numbers(const std::string& raw) {
    std::vector<double> out;
    std::regex re(R"((-?\d+(?:\.\d+)?))");
    for (auto it = std::sregex_iterator(raw.begin(), raw.end(), re);
         it != std::sregex_iterator(); ++it)
        out.push_back(std::stod((*it)[1].str()));
    return out;
}

std::optional<double> last_in_range(const std::vector<double>& values, double lo,
                                    double hi) {
    for (auto it = values.rbegin(); it != values.rend(); ++it)
        if (*it >= lo && *it <= hi) return *it;
    return std::nullopt;
}

}  // namespace

LlmJudgment parse_judgment(const std::string& raw, RequestMode mode) {
    if (mode != RequestMode::kSlide && mode != RequestMode::kDre)
        throw UnparseableJudgment("parse_judgment supports slide/dre modes only");
    if (util::trim(raw).empty())
        throw UnparseableJudgment("empty provider reply");

    LlmJudgment judgment;
    judgment.raw_text = raw;

    auto labeled_score = find_labeled_number(raw, R"(llm\s+overall\s+score)");
    auto labeled_inf = find_labeled_number(raw, R"(influence\s+degree)");

    bool structured = labeled_score.has_value() &&
                      (mode == RequestMode::kSlide || labeled_inf.has_value());

    std::vector<double> numbers;
    if (!structured) numbers = all_numbers(raw);

    std::optional<double> score =
        labeled_score ? labeled_score : last_in_range(numbers, 0.0, 5.0);
    if (!score)
        throw UnparseableJudgment("no overall score found in reply: " +
                                  raw.substr(0, std::min<size_t>(raw.size(), 120)));
    judgment.score_llm = std::clamp(*score, 0.0, 5.0);

    if (mode == RequestMode::kDre) {
        std::optional<double> inf =
            labeled_inf ? labeled_inf : last_in_range(numbers, 0.0, 1.0);
        if (!inf)
            throw UnparseableJudgment("no influence degree found in reply: " +
                                      raw.substr(0, std::min<size_t>(raw.size(), 120)));
        judgment.s_inf = std::clamp(*inf, 0.0, 1.0);
    }

    judgment.parse_method =
        structured ? ParseMethod::kStructured : ParseMethod::kFallback;
    return judgment;
}

bool parse_yes_no(const std::string& raw) {
    std::regex re(R"(\b(yes|no)\b)", std::regex::icase);
    std::smatch match;
    if (!std::regex_search(raw, match, re))
        throw UnparseableJudgment("no yes/no answer in reply: " +
                                  raw.substr(0, std::min<size_t>(raw.size(), 120)));
    std::string token = util::lowercase(match[1].str());
    return token == "yes";
}

// --- mock transport ---------------------------------------------------------

void MockTransport::script(const std::string& example_id, RequestMode mode,
                           std::string reply) {
    script_sequence(example_id, mode, {std::move(reply)});
}

void MockTransport::script_sequence(const std::string& example_id,
                                    RequestMode mode,
                                    std::vector<std::string> replies) {
    std::lock_guard lock(mutex_);
    auto& queue = sequences_[example_id + "|" + mode_to_string(mode)];
    for (auto& r : replies) queue.push_back(std::move(r));
}

void MockTransport::set_default_reply(std::string reply) {
    std::lock_guard lock(mutex_);
    default_reply_ = std::move(reply);
}

int MockTransport::calls() const {
    std::lock_guard lock(mutex_);
    return calls_;
}

std::string MockTransport::complete_once(const ProviderConfig& config,
                                         const LlmRequest& request) {
    (void)config;
    std::lock_guard lock(mutex_);
    ++calls_;
    auto it = sequences_.find(request.example_id + "|" + mode_to_string(request.mode));
    std::string reply;
    if (it != sequences_.end() && !it->second.empty()) {
        reply = it->second.front();
        // Keep the last entry as the steady-state reply so cache-miss
        // re-requests after the scripted sequence stay deterministic.
        if (it->second.size() > 1) it->second.erase(it->second.begin());
    } else if (default_reply_) {
        reply = *default_reply_;
    } else {
        throw ProviderError("mock transport has no reply for example \"" +
                            request.example_id + "\" in mode " +
                            mode_to_string(request.mode));
    }
    if (reply == kFailToken) throw TransientFailure("scripted transient failure");
    return reply;
}

// --- client -----------------------------------------------------------------

struct LlmClient::Limiter {
    std::mutex mutex;
    std::condition_variable cv;
    int in_flight = 0;
    int limit = 1;

    void acquire() {
        std::unique_lock lock(mutex);
        cv.wait(lock, [&] { return in_flight < limit; });
        ++in_flight;
    }
    void release() {
        {
            std::lock_guard lock(mutex);
            --in_flight;
        }
        cv.notify_one();
    }
};

// Defined in providers.cpp.
std::shared_ptr<ProviderTransport> make_http_transport(Provider provider);

namespace {

std::filesystem::path cache_path(const ProviderConfig& config,
                                 const std::string& key) {
    return config.cache_dir / (key + ".json");
}

}  // namespace

LlmClient::LlmClient(ProviderConfig config,
                     std::shared_ptr<ProviderTransport> transport)
    : config_(std::move(config)), transport_(std::move(transport)) {
    config_.validate();
    if (!transport_) {
        if (config_.provider == Provider::kMock)
            transport_ = config_.mock_replies_path.empty()
                             ? std::make_shared<MockTransport>()
                             : load_mock_replies(config_.mock_replies_path);
        else
            transport_ = make_http_transport(config_.provider);
    }
    limiter_ = std::make_shared<Limiter>();
    limiter_->limit = config_.concurrency_limit;
}

Completion LlmClient::complete(const LlmRequest& request) {
    const bool caching = request.use_cache && !config_.cache_dir.empty();
    std::string key;
    if (caching) {
        key = cache_key(config_, request);
        auto path = cache_path(config_, key);
        if (std::filesystem::exists(path)) {
            try {
                json entry = json::parse(util::read_file(path));
                std::lock_guard lock(stats_mutex_);
                ++cache_hits_;
                return {entry.at("raw_text").get<std::string>(), true};
            } catch (const std::exception&) {
                // Unreadable entry: fall through and refetch.
            }
        }
    }

    Completion completion = complete_uncached(request);

    if (caching) {
        json entry;
        entry["provider"] = provider_to_string(config_.provider);
        entry["model"] = config_.model_name;
        entry["mode"] = mode_to_string(request.mode);
        entry["example_id"] = request.example_id;
        entry["temperature"] = config_.temperature;
        entry["prompt_sha256"] = util::sha256_hex(request.prompt);
        entry["raw_text"] = completion.text;
        entry["timestamp"] = static_cast<std::int64_t>(
            std::chrono::duration_cast<std::chrono::seconds>(
                std::chrono::system_clock::now().time_since_epoch())
                .count());
        util::atomic_write_file(cache_path(config_, key), entry.dump());
    }
    return completion;
}

Completion LlmClient::complete_uncached(const LlmRequest& request) {
    limiter_->acquire();
    struct Release {
        Limiter* l;
        ~Release() { l->release(); }
    } release{limiter_.get()};

    std::string last_error;
    for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
        if (attempt > 0 && config_.backoff_base_seconds > 0.0) {
            double seconds =
                config_.backoff_base_seconds * std::pow(2.0, attempt - 1);
            std::this_thread::sleep_for(
                std::chrono::milliseconds(static_cast<long>(seconds * 1000)));
        }
        try {
            std::string text = transport_->complete_once(config_, request);
            std::lock_guard lock(stats_mutex_);
            ++provider_calls_;
            return {std::move(text), false};
        } catch (const ProviderTransport::TransientFailure& e) {
            {
                std::lock_guard lock(stats_mutex_);
                ++provider_calls_;
            }
            last_error = e.what();
        }
    }
    throw ProviderError("provider failed after " +
                        std::to_string(config_.max_retries + 1) +
                        " attempts: " + last_error);
}

LlmJudgment LlmClient::judge(const LlmRequest& request) {
    Completion completion = complete(request);
    try {
        LlmJudgment judgment = parse_judgment(completion.text, request.mode);
        judgment.cached = completion.cached;
        return judgment;
    } catch (const UnparseableJudgment&) {
        LlmRequest reminder = request;
        reminder.prompt += "\n\nYour previous answer could not be parsed. "
                           "Answer again using exactly the labeled line format";
        reminder.prompt += request.mode == RequestMode::kDre
                               ? ":\nInfluence degree: <value>\nLLM Overall Score: <value>"
                               : ":\nLLM Overall Score: <value>";
        Completion retry = complete(reminder);
        LlmJudgment judgment = parse_judgment(retry.text, request.mode);
        judgment.cached = retry.cached;
        return judgment;
    }
}

int LlmClient::provider_calls() const {
    std::lock_guard lock(stats_mutex_);
    return provider_calls_;
}

int LlmClient::cache_hits() const {
    std::lock_guard lock(stats_mutex_);
    return cache_hits_;
}

}  // namespace dre::gateway
