#include "dre/stats.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "dre/errors.hpp"

namespace dre::stats {

namespace {

void check_paired(size_t nx, size_t ny, size_t min_len) {
    if (nx != ny)
        throw LengthMismatch("sequence lengths differ: " + std::to_string(nx) +
                             " vs " + std::to_string(ny));
    if (nx < min_len)
        throw LengthMismatch("need at least " + std::to_string(min_len) +
                             " paired values, got " + std::to_string(nx));
}

}  // namespace

double pearson(std::span<const double> xs, std::span<const double> ys) {
    check_paired(xs.size(), ys.size(), 2);
    const double n = static_cast<double>(xs.size());
    double mean_x = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double mean_y = std::accumulate(ys.begin(), ys.end(), 0.0) / n;

    double cov = 0.0, var_x = 0.0, var_y = 0.0;
    for (size_t i = 0; i < xs.size(); ++i) {
        double dx = xs[i] - mean_x;
        double dy = ys[i] - mean_y;
        cov += dx * dy;
        var_x += dx * dx;
        var_y += dy * dy;
    }
    if (var_x == 0.0 || var_y == 0.0)
        throw ConstantInput("correlation undefined for a constant sequence");
    return cov / std::sqrt(var_x * var_y);
}

std::vector<double> average_ranks(std::span<const double> values) {
    std::vector<size_t> order(values.size());
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return values[a] < values[b]; });

    std::vector<double> ranks(values.size(), 0.0);
    size_t i = 0;
    while (i < order.size()) {
        size_t j = i;
        while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
        // Entries i..j are tied; all get the mean of ranks i+1..j+1.
        double mean_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (size_t k = i; k <= j; ++k) ranks[order[k]] = mean_rank;
        i = j + 1;
    }
    return ranks;
}

double spearman(std::span<const double> xs, std::span<const double> ys) {
    check_paired(xs.size(), ys.size(), 2);
    std::vector<double> rank_x = average_ranks(xs);
    std::vector<double> rank_y = average_ranks(ys);
    return pearson(rank_x, rank_y);
}

double cohens_kappa(std::span<const int> a, std::span<const int> b) {
    check_paired(a.size(), b.size(), 1);
    const double n = static_cast<double>(a.size());

    std::map<int, double> freq_a, freq_b;
    double observed = 0.0;
    for (size_t i = 0; i < a.size(); ++i) {
        freq_a[a[i]] += 1.0;
        freq_b[b[i]] += 1.0;
        if (a[i] == b[i]) observed += 1.0;
    }
    double p_o = observed / n;
    double p_e = 0.0;
    for (const auto& [label, count_a] : freq_a) {
        auto it = freq_b.find(label);
        if (it != freq_b.end()) p_e += (count_a / n) * (it->second / n);
    }
    if (p_e >= 1.0)
        throw DegenerateAgreement("expected agreement is 1; kappa undefined");
    return (p_o - p_e) / (1.0 - p_e);
}

AccuracyReport classification_accuracy(
    std::span<const scoring::ResponseClass> predictions,
    std::span<const scoring::ResponseClass> gold) {
    check_paired(predictions.size(), gold.size(), 1);

    int correct_pos = 0, correct_neg = 0, n_pos = 0, n_neg = 0;
    for (size_t i = 0; i < gold.size(); ++i) {
        if (gold[i] == scoring::ResponseClass::kPositive) {
            ++n_pos;
            if (predictions[i] == gold[i]) ++correct_pos;
        } else {
            ++n_neg;
            if (predictions[i] == gold[i]) ++correct_neg;
        }
    }

    AccuracyReport report;
    report.n_pos = n_pos;
    report.n_neg = n_neg;
    report.positive_acc = n_pos > 0 ? 100.0 * correct_pos / n_pos : 0.0;
    report.negative_acc = n_neg > 0 ? 100.0 * correct_neg / n_neg : 0.0;
    report.overall_acc = 100.0 * (correct_pos + correct_neg) / (n_pos + n_neg);
    return report;
}

SweepResult threshold_sweep(std::span<const double> scores,
                            std::span<const scoring::ResponseClass> gold,
                            std::span<const double> thresholds) {
    check_paired(scores.size(), gold.size(), 1);
    if (thresholds.empty()) throw LengthMismatch("empty threshold grid");

    SweepResult result;
    result.best_accuracy = -1.0;
    for (double t : thresholds) {
        size_t correct = 0;
        for (size_t i = 0; i < scores.size(); ++i)
            if (scoring::classify_with_threshold(scores[i], t) == gold[i]) ++correct;
        double accuracy = static_cast<double>(correct) / static_cast<double>(scores.size());
        result.curve.push_back({t, accuracy});
        if (accuracy > result.best_accuracy) {
            result.best_accuracy = accuracy;
            result.best_threshold = t;
        }
    }
    return result;
}

std::vector<double> default_threshold_grid() {
    std::vector<double> grid;
    for (int i = 1; i <= 19; ++i) grid.push_back(static_cast<double>(i) / 10.0);
    return grid;
}

}  // namespace dre::stats
