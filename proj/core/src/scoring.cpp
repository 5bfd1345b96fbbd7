#include "dre/scoring.hpp"

#include <algorithm>
#include <limits>

#include <nlohmann/json.hpp>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::scoring {

using json = nlohmann::json;

void DistanceStats::validate() const {
    if (d_min > d_max) throw OutOfRange("distance stats with d_min > d_max");
    if (d_min < 0.0 || d_max > 2.0)
        throw OutOfRange("distance stats outside [0, 2]");
}

DistanceStats stats_from_checkpoint(const training::SlmModel& model) {
    if (!model.trained)
        throw UntrainedScorer("checkpoint carries no calibration stats");
    DistanceStats stats{model.train_d_min, model.train_d_max, StatsSource::kTrainSet};
    stats.validate();
    return stats;
}

DistanceStats calibrate(const training::SlmModel& model,
                        std::span<const corpus::DialogueExample> examples) {
    if (!model.trained) throw UntrainedScorer("calibrate requires a trained model");
    if (examples.empty()) throw EmptyEvaluationSet("calibrate on empty example set");

    double d_min = std::numeric_limits<double>::infinity();
    double d_max = -std::numeric_limits<double>::infinity();
    bool any = false;
    for (const auto& ex : examples) {
        enc::Embedding context = model.encode(corpus::flatten_context(ex));
        auto measure = [&](const std::string& response) {
            enc::Embedding full = model.encode(response);
            auto [robust, non_robust] = model.separate_response(full);
            (void)non_robust;
            double d = enc::cosine_distance(context, robust);
            d_min = std::min(d_min, d);
            d_max = std::max(d_max, d);
            any = true;
        };
        for (const auto& r : ex.positives) measure(r);
        for (const auto& r : ex.adversarial_negatives) measure(r);
        if (ex.random_negatives)
            for (const auto& r : *ex.random_negatives) measure(r);
    }
    if (!any) throw EmptyEvaluationSet("examples contain no responses");
    return {d_min, d_max, StatsSource::kEvalSet};
}

SlmScore compose_score(double distance, const DistanceStats& stats,
                       double positive_probability) {
    stats.validate();
    SlmScore s;
    s.d = distance;
    s.s_p = positive_probability;
    double range = stats.d_max - stats.d_min;
    if (range < 1e-9) {
        s.s_d = 0.5;
    } else {
        s.s_d = (distance - stats.d_min) / range;
        s.s_d = std::clamp(s.s_d, 0.0, 1.0);
    }
    s.score = 1.0 - s.s_d + s.s_p;
    return s;
}

SlmScore slm_score(const training::SlmModel& model, const DistanceStats& stats,
                   const std::string& context, const std::string& response) {
    if (!model.trained) throw UntrainedScorer("slm_score requires a trained model");
    enc::Embedding h_context = model.encode(context);
    enc::Embedding h_response = model.encode(response);
    auto [robust, non_robust] = model.separate_response(h_response);
    (void)non_robust;
    double distance = enc::cosine_distance(h_context, robust);
    Eigen::Vector3d prob = model.classify_embeddings(h_context, robust);
    return compose_score(distance, stats, prob[1]);
}

ResponseClass classify_with_threshold(double score, double threshold) {
    if (threshold < 0.0 || threshold > 2.0)
        throw OutOfRange("threshold must lie in [0, 2]");
    return score >= threshold ? ResponseClass::kPositive : ResponseClass::kNegative;
}

CheckpointScorer::CheckpointScorer(training::SlmModel model, DistanceStats stats)
    : model_(std::move(model)), stats_(stats) {
    if (!model_.trained)
        throw UntrainedScorer("CheckpointScorer requires a trained model");
    stats_.validate();
}

SlmScore CheckpointScorer::score(const std::string& example_id,
                                 const std::string& context,
                                 const std::string& response) {
    (void)example_id;
    return slm_score(model_, stats_, context, response);
}

size_t ReplayScorer::KeyHash::operator()(const Key& k) const {
    return util::fnv1a64(k.example_id) ^ (util::fnv1a64(k.response) << 1);
}

ReplayScorer::ReplayScorer(const std::filesystem::path& dump_path,
                           DistanceStats stats)
    : stats_(stats) {
    stats_.validate();
    size_t line_no = 0;
    for (const auto& line : util::read_lines(dump_path)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecord("score dump line " + std::to_string(line_no) +
                                  ": " + e.what());
        }
        Key key{j.at("id").get<std::string>(), j.at("response").get<std::string>()};
        rows_[key] = {j.at("d").get<double>(), j.at("s_p").get<double>()};
    }
}

SlmScore ReplayScorer::score(const std::string& example_id,
                             const std::string& context,
                             const std::string& response) {
    (void)context;
    auto it = rows_.find(Key{example_id, response});
    if (it == rows_.end())
        throw EmptyEvaluationSet("no replay row for example \"" + example_id +
                                 "\" with the given response");
    return compose_score(it->second.first, stats_, it->second.second);
}

}  // namespace dre::scoring
