#include "dre/losses.hpp"

#include <algorithm>
#include <cmath>

#include "dre/errors.hpp"

namespace dre::training {

double triplet_loss(const enc::Embedding& context, const enc::Embedding& positive,
                    const enc::Embedding& adversarial, double margin) {
    double d_pos = enc::cosine_distance(context, positive);
    double d_adv = enc::cosine_distance(context, adversarial);
    return std::max(d_pos - d_adv + margin, 0.0);
}

double pair_loss(double distance, int z, double margin) {
    double hinge = std::max(margin - distance, 0.0);
    return z * distance * distance + (1 - z) * hinge * hinge;
}

std::tuple<double, double, double> disentangle_losses(
    const enc::EmbeddingBundle& pos_bundle, const enc::EmbeddingBundle& adv_bundle,
    double margin) {
    double d1 = enc::cosine_distance(pos_bundle.robust, pos_bundle.non_robust);
    double d2 = enc::cosine_distance(adv_bundle.robust, adv_bundle.non_robust);
    double d3 = enc::cosine_distance(pos_bundle.robust, adv_bundle.robust);
    return {pair_loss(d1, 0, margin), pair_loss(d2, 0, margin),
            pair_loss(d3, 0, margin)};
}

Eigen::Vector3d softmax3(const Eigen::Vector3d& logits) {
    Eigen::Vector3d shifted = logits.array() - logits.maxCoeff();
    Eigen::Vector3d exps = shifted.array().exp();
    return exps / exps.sum();
}

double classifier_loss(const Eigen::Vector3d& logits, TripletClassLabel label) {
    Eigen::Vector3d shifted = logits.array() - logits.maxCoeff();
    double log_sum = std::log(shifted.array().exp().sum());
    return log_sum - shifted[static_cast<int>(label)];
}

double total_loss(const LossReport& parts) {
    return parts.triplet + parts.ins_same_pos + parts.ins_same_neg +
           parts.out_robust + parts.cls;
}

}  // namespace dre::training
