#include <doctest.h>

#include <filesystem>
#include <random>

#include "dre/errors.hpp"
#include "dre/training.hpp"
#include "dre/util.hpp"
#include "toy_corpus.hpp"

using namespace dre;
using corpus::Pairing;
using corpus::Triplet;
using training::TrainingConfig;

namespace {

std::filesystem::path temp_path(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

std::vector<Triplet> toy_triplets(int contexts, int responses, std::uint64_t seed) {
    auto corpus = testing::make_separable_corpus(contexts, responses, seed);
    return corpus::make_triplets(corpus, Pairing::kAligned, seed);
}

double numeric_gradient(training::SlmModel& model, Eigen::MatrixXd& weights,
                        Eigen::Index r, Eigen::Index c,
                        std::span<const Triplet> batch,
                        const TrainingConfig& config) {
    const double h = 1e-5;
    training::FeatureCache features(*model.backend);
    double original = weights(r, c);
    weights(r, c) = original + h;
    double up = training::batch_loss_and_gradients(model, batch, config, features,
                                                   nullptr)
                    .total;
    weights(r, c) = original - h;
    double down = training::batch_loss_and_gradients(model, batch, config,
                                                     features, nullptr)
                      .total;
    weights(r, c) = original;
    return (up - down) / (2.0 * h);
}

}  // namespace

TEST_CASE("config validation") {
    TrainingConfig config;
    config.epochs = 0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.epochs = 1;
    config.margin_pair = 0.0;
    CHECK_THROWS_AS(config.validate(), ConfigError);
    config.margin_pair = 0.5;
    CHECK_NOTHROW(config.validate());
    CHECK(config.hash().size() == 64);
}

TEST_CASE("batch loss parts are nonnegative and sum to total") {
    auto triplets = toy_triplets(10, 3, 7);
    auto backend = std::make_shared<enc::HashingEncoder>(32);
    auto model = training::make_model(backend, 7);
    training::FeatureCache features(*backend);
    TrainingConfig config;

    auto report = training::batch_loss_and_gradients(model, triplets, config,
                                                     features, nullptr);
    CHECK(report.triplet >= 0.0);
    CHECK(report.ins_same_pos >= 0.0);
    CHECK(report.ins_same_neg >= 0.0);
    CHECK(report.out_robust >= 0.0);
    CHECK(report.cls >= 0.0);
    CHECK(report.total ==
          doctest::Approx(report.triplet + report.ins_same_pos +
                          report.ins_same_neg + report.out_robust + report.cls)
              .epsilon(1e-9));
}

TEST_CASE("analytic gradients match central finite differences") {
    auto triplets = toy_triplets(6, 2, 21);
    auto backend = std::make_shared<enc::HashingEncoder>(16);
    auto model = training::make_model(backend, 3);
    TrainingConfig config;
    training::FeatureCache features(*backend);

    std::span<const Triplet> batch(triplets.data(), 4);
    training::Gradients grads;
    training::batch_loss_and_gradients(model, batch, config, features, &grads);

    struct Target {
        Eigen::MatrixXd* weights;
        const Eigen::MatrixXd* grad;
    };
    Target targets[] = {
        {&model.heads.robust, &grads.w_robust},
        {&model.heads.non_robust, &grads.w_non_robust},
        {&model.w_encoder, &grads.w_encoder},
        {&model.w_classifier, &grads.w_classifier},
    };

    std::mt19937_64 rng(5);
    for (auto& target : targets) {
        double num_sq = 0.0, diff_sq = 0.0;
        // Spot-check 25 random entries per tensor.
        for (int trial = 0; trial < 25; ++trial) {
            auto r = static_cast<Eigen::Index>(rng() % target.weights->rows());
            auto c = static_cast<Eigen::Index>(rng() % target.weights->cols());
            double numeric =
                numeric_gradient(model, *target.weights, r, c, batch, config);
            double analytic = (*target.grad)(r, c);
            diff_sq += (numeric - analytic) * (numeric - analytic);
            num_sq += numeric * numeric + analytic * analytic;
        }
        double rel = std::sqrt(diff_sq) / std::max(std::sqrt(num_sq), 1e-12);
        CHECK(rel < 1e-3);
    }
}

TEST_CASE("train rejects bad input") {
    auto backend = std::make_shared<enc::HashingEncoder>(16);
    TrainingConfig config;
    std::vector<Triplet> empty;
    CHECK_THROWS_AS(training::train(empty, backend, config, "", ""),
                    EmptyTrainingSet);

    auto triplets = toy_triplets(2, 1, 3);
    config.epochs = 0;
    CHECK_THROWS_AS(training::train(triplets, backend, config, "", ""),
                    ConfigError);
}

TEST_CASE("single-triplet smoke run emits one metrics row") {
    auto triplets = toy_triplets(1, 1, 3);
    auto backend = std::make_shared<enc::HashingEncoder>(16);
    TrainingConfig config;
    config.epochs = 1;
    config.early_stop_patience = 0;

    auto metrics_path = temp_path("dre_train_smoke_metrics.csv");
    auto meta = training::train(triplets, backend, config, "", metrics_path);
    CHECK(meta.epochs_run == 1);

    auto lines = util::read_lines(metrics_path);
    REQUIRE(lines.size() == 2);  // header + one row
    CHECK(lines[0].rfind("epoch,", 0) == 0);
    std::filesystem::remove(metrics_path);
}

TEST_CASE("toy training converges and reruns byte-identically") {
    auto triplets = toy_triplets(30, 5, 99);
    auto backend = std::make_shared<enc::HashingEncoder>(64);
    TrainingConfig config;
    config.epochs = 12;
    config.seed = 99;
    config.early_stop_patience = 0;

    auto ckpt = temp_path("dre_train_conv.ckpt");
    auto metrics_a = temp_path("dre_train_conv_a.csv");
    auto metrics_b = temp_path("dre_train_conv_b.csv");

    training::SlmModel model;
    auto meta = training::train(triplets, backend, config, ckpt, metrics_a, &model);
    CHECK(meta.final_triplet_accuracy >= 0.9);
    CHECK(meta.final_cls_accuracy >= 0.8);
    CHECK(meta.d_min <= meta.d_max);

    training::train(triplets, backend, config, "", metrics_b);
    CHECK(util::read_file(metrics_a) == util::read_file(metrics_b));

    // classify on the trained model: valid distribution, positive leans class 1
    auto corpus_examples = testing::make_separable_corpus(30, 5, 99);
    const auto& ex = corpus_examples.front();
    Eigen::Vector3d p = model.classify(corpus::flatten_context(ex), ex.positives[0]);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-6));
    CHECK(p.minCoeff() >= 0.0);
    int argmax = 0;
    p.maxCoeff(&argmax);
    CHECK(argmax == 1);

    Eigen::Vector3d p2 = model.classify(corpus::flatten_context(ex), ex.positives[0]);
    CHECK((p - p2).norm() == 0.0);  // deterministic

    std::filesystem::remove(ckpt);
    std::filesystem::remove(metrics_a);
    std::filesystem::remove(metrics_b);
}

TEST_CASE("checkpoint round-trips weights, stats and behavior") {
    auto triplets = toy_triplets(8, 3, 17);
    auto backend = std::make_shared<enc::HashingEncoder>(32);
    TrainingConfig config;
    config.epochs = 3;
    config.seed = 17;

    auto ckpt = temp_path("dre_ckpt_roundtrip.bin");
    training::SlmModel model;
    auto meta = training::train(triplets, backend, config, ckpt, "", &model);

    training::CheckpointMeta loaded_meta;
    auto loaded = training::load_checkpoint(ckpt, &loaded_meta);

    CHECK(loaded.trained);
    CHECK(loaded.backend->name() == backend->name());
    CHECK(loaded.w_encoder == model.w_encoder);
    CHECK(loaded.heads.robust == model.heads.robust);
    CHECK(loaded.heads.non_robust == model.heads.non_robust);
    CHECK(loaded.w_classifier == model.w_classifier);
    CHECK(loaded.b_classifier == model.b_classifier);
    CHECK(loaded.train_d_min == model.train_d_min);
    CHECK(loaded.train_d_max == model.train_d_max);
    CHECK(loaded_meta.epochs_run == meta.epochs_run);
    CHECK(loaded_meta.config_hash == meta.config_hash);

    Eigen::Vector3d before = model.classify("topic1 topic2", "topic1 topic3");
    Eigen::Vector3d after = loaded.classify("topic1 topic2", "topic1 topic3");
    CHECK((before - after).norm() == 0.0);

    CHECK_THROWS_AS(training::load_checkpoint(temp_path("nonexistent.ckpt")),
                    Error);
    std::filesystem::remove(ckpt);
}

TEST_CASE("untrained model near chance on a structureless corpus") {
    auto corpus_examples = testing::make_random_corpus(40, 5, 1234);
    auto triplets = corpus::make_triplets(corpus_examples, Pairing::kAligned, 1);
    auto backend = std::make_shared<enc::HashingEncoder>(64);
    auto model = training::make_model(backend, 5);

    double acc = training::triplet_accuracy(model, triplets);
    CHECK(acc > 0.4);
    CHECK(acc < 0.6);
}

TEST_CASE("triplet accuracy hits the extremes on rigged corpora") {
    // positives identical to context, adversarials from a disjoint pool
    std::vector<Triplet> aligned, swapped;
    for (int i = 0; i < 10; ++i) {
        std::string ctx = "alpha bravo charlie " + std::to_string(i);
        std::string adv = "xray yankee zulu " + std::to_string(i);
        aligned.push_back({ctx, ctx, adv, "a"});
        swapped.push_back({ctx, adv, ctx, "s"});
    }
    auto backend = std::make_shared<enc::HashingEncoder>(64);
    auto model = training::make_model(backend, 2);
    // Identity-leaning heads keep robust projections close to the input, so
    // the untrained geometry already orders these extremes.
    CHECK(training::triplet_accuracy(model, aligned) == doctest::Approx(1.0));
    CHECK(training::triplet_accuracy(model, swapped) == doctest::Approx(0.0));
}

TEST_CASE("classify requires training") {
    auto backend = std::make_shared<enc::HashingEncoder>(16);
    auto model = training::make_model(backend, 1);
    CHECK_THROWS_AS(model.classify("a b", "c d"), UntrainedScorer);
}
