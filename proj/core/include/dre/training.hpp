#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "dre/corpus.hpp"
#include "dre/losses.hpp"
#include "dre/model.hpp"

namespace dre::training {

struct TrainingConfig {
    double margin_triplet = 0.5;
    double margin_pair = 0.5;
    int epochs = 20;
    int batch_size = 32;
    // Toy-backend default. Pretrained sentence encoders want ~2e-5.
    double learning_rate = 1e-2;
    std::uint64_t seed = 0;
    corpus::Pairing pairing = corpus::Pairing::kAligned;
    // Stop after this many epochs without triplet-accuracy improvement;
    // 0 disables.
    int early_stop_patience = 3;

    void validate() const;
    std::string canonical_string() const;
    std::string hash() const;
};

// Mean parameter gradients over a batch.
struct Gradients {
    Eigen::MatrixXd w_encoder;
    Eigen::MatrixXd w_robust;
    Eigen::MatrixXd w_non_robust;
    Eigen::MatrixXd w_classifier;
    Eigen::Vector3d b_classifier;
};

// Backend features are fixed during training, so they are computed once per
// unique text and reused across epochs.
class FeatureCache {
public:
    explicit FeatureCache(const enc::EncoderBackend& backend) : backend_(backend) {}
    const Eigen::VectorXd& get(const std::string& text);

private:
    const enc::EncoderBackend& backend_;
    std::unordered_map<std::string, Eigen::VectorXd> cache_;
};

// Mean loss parts over the batch; when `grads` is non-null, also the
// analytic gradients of the total loss with respect to every trainable
// tensor (the finite-difference acceptance check drives this function).
LossReport batch_loss_and_gradients(const SlmModel& model,
                                    std::span<const corpus::Triplet> batch,
                                    const TrainingConfig& config,
                                    FeatureCache& features,
                                    Gradients* grads);

// One CSV row per completed epoch.
struct EpochMetrics {
    int epoch = 0;
    LossReport losses;
    double triplet_accuracy = 0.0;
    double cls_accuracy = 0.0;
};

// Fraction of triplets whose positive robust embedding sits closer to the
// context than the adversarial robust embedding.
double triplet_accuracy(const SlmModel& model,
                        std::span<const corpus::Triplet> triplets);

// Argmax accuracy over the four classifier instances of each triplet.
double classifier_accuracy(const SlmModel& model,
                           std::span<const corpus::Triplet> triplets);

std::string metrics_to_csv(std::span<const EpochMetrics> rows);

// Full training run: Adam over adapter, heads and classifier; per-epoch
// metrics; distance calibration from the training set; checkpoint written
// to `checkpoint_path` and metrics CSV to `metrics_path` (either may be
// empty to skip the write). Deterministic for a fixed seed and backend.
CheckpointMeta train(std::span<const corpus::Triplet> triplets,
                     std::shared_ptr<enc::EncoderBackend> backend,
                     const TrainingConfig& config,
                     const std::filesystem::path& checkpoint_path,
                     const std::filesystem::path& metrics_path,
                     SlmModel* out_model = nullptr,
                     std::vector<EpochMetrics>* out_metrics = nullptr);

}  // namespace dre::training
