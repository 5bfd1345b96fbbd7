#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dre/corpus.hpp"
#include "dre/llm_gateway.hpp"
#include "dre/scoring.hpp"

namespace dre::corpus {

struct AugmentationRecord {
    std::string context_id;
    int attempts = 0;
    std::vector<std::string> generated_positives;
    std::vector<std::string> generated_adversarials;
    bool check_passed = false;
    bool review_flag = false;
};

// Splits a generation reply into exactly five positives and five
// adversarial negatives. Primary path: numbered lines under the two labeled
// sections; fallback: plain non-empty lines under the sections. Throws
// GenerationParseFailure otherwise.
std::pair<std::vector<std::string>, std::vector<std::string>>
parse_generation_reply(const std::string& raw);

// Generate-then-check loop: ask the generator for 5+5 responses, validate
// each class with the checker (majority yes per class), retry up to
// max_retries attempts. Parse failures consume attempts and throw once
// exhausted; a never-passing check returns a record with
// check_passed=false and the review flag raised.
//
// Generation and check requests bypass the response cache: the loop only
// makes progress if a retry can produce a fresh sample.
AugmentationRecord augment_example(const DialogueExample& example,
                                   gateway::LlmClient& generator,
                                   gateway::LlmClient& checker, int max_retries,
                                   const gateway::PromptTemplates& templates);

struct FilterRecord {
    std::string id;
    int dropped_positives = 0;
    int dropped_adversarials = 0;
    bool review_flag = false;  // a class was filtered down to nothing
};

struct FilterResult {
    std::vector<DialogueExample> examples;
    std::vector<FilterRecord> records;
};

// Keeps positives scoring >= threshold and adversarials scoring below it.
// Examples losing an entire class stay in the corpus, flagged for review.
FilterResult slm_filter(std::span<const DialogueExample> examples,
                        scoring::SlmScorer& scorer, double threshold);

}  // namespace dre::corpus
