#include "dre/augment.hpp"

#include <regex>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::corpus {

namespace {

bool is_section_header(const std::string& lower_line, const char* keyword) {
    return lower_line.find(keyword) != std::string::npos &&
           lower_line.find("response") != std::string::npos;
}

std::vector<std::string> extract_entries(std::span<const std::string> lines) {
    static const std::regex numbered(R"(^\s*\d+\s*[.)]\s*(.*\S)\s*$)");
    std::vector<std::string> from_numbers;
    std::vector<std::string> from_plain;
    for (const auto& line : lines) {
        std::string trimmed = util::trim(line);
        if (trimmed.empty()) continue;
        std::smatch match;
        if (std::regex_match(trimmed, match, numbered))
            from_numbers.push_back(match[1].str());
        from_plain.push_back(trimmed);
    }
    return from_numbers.empty() ? from_plain : from_numbers;
}

}  // namespace

std::pair<std::vector<std::string>, std::vector<std::string>>
parse_generation_reply(const std::string& raw) {
    std::vector<std::string> lines;
    {
        std::string current;
        for (char c : raw) {
            if (c == '\n') {
                lines.push_back(current);
                current.clear();
            } else if (c != '\r') {
                current.push_back(c);
            }
        }
        lines.push_back(current);
    }

    // Locate the two section headers.
    long pos_header = -1, adv_header = -1;
    for (size_t i = 0; i < lines.size(); ++i) {
        std::string lower = util::lowercase(util::trim(lines[i]));
        if (pos_header < 0 && is_section_header(lower, "positive"))
            pos_header = static_cast<long>(i);
        else if (pos_header >= 0 && adv_header < 0 &&
                 (is_section_header(lower, "adversarial") ||
                  is_section_header(lower, "negative")))
            adv_header = static_cast<long>(i);
    }
    if (pos_header < 0 || adv_header < 0)
        throw GenerationParseFailure(
            "reply lacks positive/adversarial section headers");

    std::span<const std::string> all(lines);
    auto positives = extract_entries(
        all.subspan(pos_header + 1, adv_header - pos_header - 1));
    auto adversarials = extract_entries(all.subspan(adv_header + 1));

    if (positives.size() != 5 || adversarials.size() != 5)
        throw GenerationParseFailure(
            "expected 5+5 responses, got " + std::to_string(positives.size()) +
            "+" + std::to_string(adversarials.size()));
    return {std::move(positives), std::move(adversarials)};
}

namespace {

bool majority_check(const DialogueExample& example,
                    std::span<const std::string> responses,
                    scoring::ResponseClass cls, gateway::LlmClient& checker,
                    const gateway::PromptTemplates& templates) {
    std::string context = flatten_context(example);
    size_t yes = 0;
    for (const auto& response : responses) {
        gateway::LlmRequest request;
        request.prompt = gateway::build_check_prompt(context, response, cls, templates);
        request.mode = gateway::RequestMode::kCheck;
        request.example_id = example.id;
        request.use_cache = false;
        if (gateway::parse_yes_no(checker.complete(request).text)) ++yes;
    }
    return 2 * yes > responses.size();
}

}  // namespace

AugmentationRecord augment_example(const DialogueExample& example,
                                   gateway::LlmClient& generator,
                                   gateway::LlmClient& checker, int max_retries,
                                   const gateway::PromptTemplates& templates) {
    if (example.context.empty())
        throw EmptyText("augment_example needs a non-empty context");
    if (max_retries < 1) throw ConfigError("max_retries must be >= 1");

    AugmentationRecord record;
    record.context_id = example.id;

    std::string last_parse_error;
    for (int attempt = 1; attempt <= max_retries; ++attempt) {
        record.attempts = attempt;

        gateway::LlmRequest request;
        request.prompt =
            gateway::build_generate_prompt(flatten_context(example), templates);
        request.mode = gateway::RequestMode::kGenerate;
        request.example_id = example.id;
        request.use_cache = false;

        std::string reply = generator.complete(request).text;
        std::vector<std::string> positives, adversarials;
        try {
            std::tie(positives, adversarials) = parse_generation_reply(reply);
        } catch (const GenerationParseFailure& e) {
            last_parse_error = e.what();
            if (attempt == max_retries)
                throw GenerationParseFailure("example \"" + example.id +
                                             "\": " + last_parse_error);
            continue;
        }

        record.generated_positives = std::move(positives);
        record.generated_adversarials = std::move(adversarials);

        bool pos_ok = majority_check(example, record.generated_positives,
                                     scoring::ResponseClass::kPositive, checker,
                                     templates);
        bool adv_ok = majority_check(example, record.generated_adversarials,
                                     scoring::ResponseClass::kNegative, checker,
                                     templates);
        if (pos_ok && adv_ok) {
            record.check_passed = true;
            return record;
        }
    }

    if (record.generated_positives.empty())
        throw GenerationParseFailure("example \"" + example.id +
                                     "\": " + last_parse_error);
    record.check_passed = false;
    record.review_flag = true;
    return record;
}

FilterResult slm_filter(std::span<const DialogueExample> examples,
                        scoring::SlmScorer& scorer, double threshold) {
    if (threshold < 0.0 || threshold > 2.0)
        throw OutOfRange("filter threshold must lie in [0, 2]");

    FilterResult result;
    for (const auto& ex : examples) {
        std::string context = flatten_context(ex);
        DialogueExample kept = ex;
        kept.positives.clear();
        kept.adversarial_negatives.clear();

        FilterRecord record;
        record.id = ex.id;

        for (const auto& r : ex.positives) {
            if (scorer.score(ex.id, context, r).score >= threshold)
                kept.positives.push_back(r);
            else
                ++record.dropped_positives;
        }
        for (const auto& r : ex.adversarial_negatives) {
            if (scorer.score(ex.id, context, r).score < threshold)
                kept.adversarial_negatives.push_back(r);
            else
                ++record.dropped_adversarials;
        }

        record.review_flag =
            kept.positives.empty() || kept.adversarial_negatives.empty();
        result.examples.push_back(std::move(kept));
        result.records.push_back(std::move(record));
    }
    return result;
}

}  // namespace dre::corpus
