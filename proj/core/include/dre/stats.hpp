#pragma once

#include <span>
#include <vector>

#include "dre/scoring.hpp"

namespace dre::stats {

// Sample Pearson correlation. Throws LengthMismatch / ConstantInput — a
// constant sequence is a pipeline bug here, not a zero correlation.
double pearson(std::span<const double> xs, std::span<const double> ys);

// Pearson over average ranks; ties share their mean rank.
double spearman(std::span<const double> xs, std::span<const double> ys);

// Mean rank per element (1-based), ties averaged.
std::vector<double> average_ranks(std::span<const double> values);

// Chance-corrected agreement between two label sequences.
// Throws DegenerateAgreement when expected agreement is 1.
double cohens_kappa(std::span<const int> a, std::span<const int> b);

struct AccuracyReport {
    double positive_acc = 0.0;  // percent
    double negative_acc = 0.0;  // percent
    double overall_acc = 0.0;   // percent
    int n_pos = 0;
    int n_neg = 0;
};

// Per-class and overall accuracy, in percent.
AccuracyReport classification_accuracy(
    std::span<const scoring::ResponseClass> predictions,
    std::span<const scoring::ResponseClass> gold);

struct SweepPoint {
    double threshold = 0.0;
    double accuracy = 0.0;  // fraction in [0, 1]
};

struct SweepResult {
    std::vector<SweepPoint> curve;
    double best_threshold = 0.0;
    double best_accuracy = 0.0;  // argmax ties resolve to the smallest threshold
};

SweepResult threshold_sweep(std::span<const double> scores,
                            std::span<const scoring::ResponseClass> gold,
                            std::span<const double> thresholds);

// The default sweep grid: 0.1 .. 1.9 in steps of 0.1.
std::vector<double> default_threshold_grid();

}  // namespace dre::stats
