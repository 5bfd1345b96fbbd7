#pragma once

#include <Eigen/Core>

#include <tuple>

#include "dre/encoder.hpp"

namespace dre::training {

// Classifier target classes. Robust sub-embeddings carry the class signal;
// both non-robust views share the residual class.
enum class TripletClassLabel : int {
    kAdversarialRobust = 0,
    kPositiveRobust = 1,
    kNonRobust = 2,
};

// Per-batch loss decomposition. `total` is always the plain sum of the five
// parts; they enter the objective with equal weight.
struct LossReport {
    double triplet = 0.0;
    double ins_same_pos = 0.0;
    double ins_same_neg = 0.0;
    double out_robust = 0.0;
    double cls = 0.0;
    double total = 0.0;
};

// Margin loss over cosine distances: max(d(c,p) - d(c,a) + margin, 0).
// Computed on full (pre-disentanglement) embeddings.
double triplet_loss(const enc::Embedding& context, const enc::Embedding& positive,
                    const enc::Embedding& adversarial, double margin);

// z*d^2 + (1-z)*max(margin-d, 0)^2. With z=0 this pushes a pair apart until
// their distance clears the margin.
double pair_loss(double distance, int z, double margin);

// The three separation terms, all with z=0:
//   d1 = d(pos.robust, pos.non_robust)
//   d2 = d(adv.robust, adv.non_robust)
//   d3 = d(pos.robust, adv.robust)
// Returns (ins_same_pos, ins_same_neg, out_robust).
std::tuple<double, double, double> disentangle_losses(
    const enc::EmbeddingBundle& pos_bundle, const enc::EmbeddingBundle& adv_bundle,
    double margin);

// 3-class cross-entropy on raw logits (softmax applied internally).
double classifier_loss(const Eigen::Vector3d& logits, TripletClassLabel label);

// Numerically stable softmax over 3 logits.
Eigen::Vector3d softmax3(const Eigen::Vector3d& logits);

double total_loss(const LossReport& parts);

}  // namespace dre::training
