#pragma once

#include <Eigen/Core>

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <utility>

#include "dre/encoder.hpp"

namespace dre::training {

// The trainable scorer stack: a linear adapter over fixed backend features,
// the two disentangle heads, and a 3-class linear classifier reading
// concat(context, robust-response). All tensors are double precision.
struct SlmModel {
    std::shared_ptr<enc::EncoderBackend> backend;
    Eigen::MatrixXd w_encoder;     // d x d adapter, applied to backend features
    enc::DisentangleHeads heads;   // robust / non_robust projections, d x d
    Eigen::MatrixXd w_classifier;  // 3 x 2d
    Eigen::Vector3d b_classifier;
    bool trained = false;

    // Min/max context<->robust-response cosine distance over the training
    // set, persisted for score calibration.
    double train_d_min = 0.0;
    double train_d_max = 0.0;
    std::string config_hash;

    int dim() const { return backend ? backend->dimension() : 0; }

    // backend features -> adapter -> unit sphere.
    enc::Embedding encode(const std::string& text) const;

    std::pair<enc::Embedding, enc::Embedding> separate_response(
        const enc::Embedding& response) const;

    enc::EmbeddingBundle encode_bundle(const enc::Embedding& context,
                                       const std::string& response) const;

    // Class probabilities over {adversarial-robust, positive-robust,
    // non-robust} from already-computed embeddings. Always usable.
    Eigen::Vector3d classify_embeddings(const enc::Embedding& context,
                                        const enc::Embedding& robust) const;

    // Probabilities for a raw (context, response) pair. Throws
    // UntrainedScorer before training.
    Eigen::Vector3d classify(const std::string& context,
                             const std::string& response) const;
};

// Identity adapter, noise-broken heads, small random classifier. All draws
// come from the seed in a fixed order.
SlmModel make_model(std::shared_ptr<enc::EncoderBackend> backend,
                    std::uint64_t seed);

struct CheckpointMeta {
    std::filesystem::path path;
    int epochs_run = 0;
    double final_triplet_accuracy = 0.0;
    double final_cls_accuracy = 0.0;
    double d_min = 0.0;
    double d_max = 0.0;
    std::string config_hash;
};

// Single-file archive: 8-byte magic "DRECKPT1", a little-endian uint64
// manifest length, a JSON manifest, then row-major float64 little-endian
// tensor blobs at manifest-declared offsets.
void save_checkpoint(const SlmModel& model, const CheckpointMeta& meta,
                     const std::filesystem::path& path);
SlmModel load_checkpoint(const std::filesystem::path& path,
                         CheckpointMeta* meta = nullptr);

}  // namespace dre::training
