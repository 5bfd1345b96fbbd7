#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dre/corpus.hpp"
#include "dre/model.hpp"

namespace dre::scoring {

enum class StatsSource { kTrainSet, kEvalSet };

// Min/max calibration range for raw cosine distances.
struct DistanceStats {
    double d_min = 0.0;
    double d_max = 0.0;
    StatsSource source = StatsSource::kTrainSet;

    void validate() const;
};

// One response's scorer outputs. score = 1 - s_d + s_p, so the composite
// lives in [0, 2]: small calibrated distance and high positive probability
// both push it up.
struct SlmScore {
    double d = 0.0;    // raw cosine distance, [0, 2]
    double s_d = 0.0;  // min-max calibrated distance, clamped to [0, 1]
    double s_p = 0.0;  // P(positive-robust) from the classifier
    double score = 0.0;
};

enum class ResponseClass { kPositive, kNegative };

// Calibration stats persisted in a trained checkpoint.
DistanceStats stats_from_checkpoint(const training::SlmModel& model);

// Recomputes d_min/d_max over every (context, response) pair of `examples`
// (positives and adversarial negatives; random negatives included when
// present).
DistanceStats calibrate(const training::SlmModel& model,
                        std::span<const corpus::DialogueExample> examples);

// Calibration + composite from an already-measured distance and
// positive-class probability. Degenerate stats (d_max == d_min) pin s_d to
// the neutral 0.5 instead of failing.
SlmScore compose_score(double distance, const DistanceStats& stats,
                       double positive_probability);

// Full scorer path: encode, split, measure, classify, compose.
SlmScore slm_score(const training::SlmModel& model, const DistanceStats& stats,
                   const std::string& context, const std::string& response);

// Positive iff score >= threshold ("below threshold" reads negative).
ResponseClass classify_with_threshold(double score, double threshold);

// Scoring interface the fusion pipeline consumes. Implemented by the
// checkpoint-backed scorer and by a replay scorer over a score dump, so
// fusion can rerun without re-encoding.
class SlmScorer {
public:
    virtual ~SlmScorer() = default;
    virtual SlmScore score(const std::string& example_id,
                           const std::string& context,
                           const std::string& response) = 0;
};

class CheckpointScorer final : public SlmScorer {
public:
    CheckpointScorer(training::SlmModel model, DistanceStats stats);

    SlmScore score(const std::string& example_id, const std::string& context,
                   const std::string& response) override;

    const training::SlmModel& model() const { return model_; }
    const DistanceStats& stats() const { return stats_; }

private:
    training::SlmModel model_;
    DistanceStats stats_;
};

// Replays (d, s_p) rows from a score dump keyed by (example_id, response);
// recomposes s_d and the composite from the given stats.
class ReplayScorer final : public SlmScorer {
public:
    ReplayScorer(const std::filesystem::path& dump_path, DistanceStats stats);

    SlmScore score(const std::string& example_id, const std::string& context,
                   const std::string& response) override;

private:
    struct Key {
        std::string example_id;
        std::string response;
        bool operator==(const Key&) const = default;
    };
    struct KeyHash {
        size_t operator()(const Key& k) const;
    };
    std::unordered_map<Key, std::pair<double, double>, KeyHash> rows_;
    DistanceStats stats_;
};

}  // namespace dre::scoring
