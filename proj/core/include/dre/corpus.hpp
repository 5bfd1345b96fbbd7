#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace dre::corpus {

// One dialogue turn. Speakers follow the two-party convention used across
// the corpora: "FS" (first speaker) and "SS" (second speaker).
struct Turn {
    std::string speaker;  // "FS" | "SS"
    std::string text;

    bool operator==(const Turn&) const = default;
};

struct DialogueExample {
    std::string id;
    std::vector<Turn> context;
    std::vector<std::string> positives;
    std::vector<std::string> adversarial_negatives;
    std::optional<std::vector<std::string>> random_negatives;
    std::optional<double> human_score;  // Likert, [1, 5]

    bool operator==(const DialogueExample&) const = default;
};

// A contrastive training unit: one context, one matching response, one
// lexically-overlapping-but-irrelevant response.
struct Triplet {
    std::string context;  // flattened turns, "FS: ...\nSS: ..."
    std::string positive;
    std::string adversarial;
    std::string source_id;
};

enum class Pairing { kAligned, kCartesian };

// "FS: <text>\nSS: <text>..." — the canonical single-string form used for
// both encoding and prompt interpolation.
std::string flatten_context(const DialogueExample& example);

// JSONL, one example per line. Loading validates the schema and throws
// MalformedRecord (with line number) or DuplicateId.
std::vector<DialogueExample> load_corpus(const std::filesystem::path& path);
void save_corpus(std::span<const DialogueExample> examples,
                 const std::filesystem::path& path);

// Aligned mode pairs positives[k] with adversarial_negatives[k] up to the
// shorter list; cartesian emits every combination. The seed fixes the
// output order (epoch shuffling), not the pair set.
std::vector<Triplet> make_triplets(std::span<const DialogueExample> examples,
                                   Pairing pairing, std::uint64_t seed);

// Uniform sample without replacement, deterministic under seed. When
// review_path is given, writes a JSONL review sheet with an empty
// "review" slot per example for annotators to fill in.
std::vector<DialogueExample> sample_for_review(
    std::span<const DialogueExample> examples, std::size_t n,
    std::uint64_t seed,
    const std::optional<std::filesystem::path>& review_path = std::nullopt);

}  // namespace dre::corpus
