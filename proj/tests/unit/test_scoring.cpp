#include <doctest.h>

#include <filesystem>

#include "dre/errors.hpp"
#include "dre/scoring.hpp"
#include "dre/training.hpp"
#include "dre/util.hpp"
#include "toy_corpus.hpp"

using namespace dre;
using scoring::DistanceStats;
using scoring::ResponseClass;
using scoring::StatsSource;

namespace {

training::SlmModel trained_toy_model() {
    static training::SlmModel model = [] {
        auto corpus_examples = testing::make_separable_corpus(12, 3, 4);
        auto triplets =
            corpus::make_triplets(corpus_examples, corpus::Pairing::kAligned, 4);
        auto backend = std::make_shared<enc::HashingEncoder>(32);
        training::TrainingConfig config;
        config.epochs = 4;
        config.seed = 4;
        training::SlmModel m;
        training::train(triplets, backend, config, "", "", &m);
        return m;
    }();
    return model;
}

}  // namespace

TEST_CASE("compose_score spot values") {
    DistanceStats stats{0.1, 0.9, StatsSource::kTrainSet};

    // d at the minimum
    auto low = scoring::compose_score(0.1, stats, 0.8);
    CHECK(low.s_d == doctest::Approx(0.0));
    CHECK(low.score == doctest::Approx(1.8));

    // d at the maximum
    auto high = scoring::compose_score(0.9, stats, 0.2);
    CHECK(high.s_d == doctest::Approx(1.0));
    CHECK(high.score == doctest::Approx(0.2));

    // out-of-range distances clamp
    CHECK(scoring::compose_score(1.8, stats, 0.5).s_d == doctest::Approx(1.0));
    CHECK(scoring::compose_score(0.0, stats, 0.5).s_d == doctest::Approx(0.0));

    // degenerate stats pin s_d to neutral
    DistanceStats degenerate{0.4, 0.4, StatsSource::kTrainSet};
    auto neutral = scoring::compose_score(0.4, degenerate, 0.6);
    CHECK(neutral.s_d == doctest::Approx(0.5));
    CHECK(neutral.score == doctest::Approx(1.1));
}

TEST_CASE("compose_score is monotone in d and s_p") {
    DistanceStats stats{0.0, 1.0, StatsSource::kTrainSet};
    double prev = 3.0;
    for (double d = 0.05; d <= 0.95; d += 0.05) {
        double score = scoring::compose_score(d, stats, 0.5).score;
        CHECK(score < prev);
        prev = score;
    }
    prev = -1.0;
    for (double p = 0.0; p <= 1.0; p += 0.05) {
        double score = scoring::compose_score(0.5, stats, p).score;
        CHECK(score > prev);
        prev = score;
    }
}

TEST_CASE("classify_with_threshold boundary is inclusive-positive") {
    CHECK(scoring::classify_with_threshold(0.5, 0.5) == ResponseClass::kPositive);
    CHECK(scoring::classify_with_threshold(0.49, 0.5) == ResponseClass::kNegative);
    CHECK(scoring::classify_with_threshold(1.8, 0.5) == ResponseClass::kPositive);
    CHECK_THROWS_AS(scoring::classify_with_threshold(1.0, 2.5), OutOfRange);

    // raising the threshold never flips negative -> positive
    for (double score : {0.0, 0.3, 0.5, 0.9, 1.4, 2.0}) {
        bool was_negative = false;
        for (double t = 0.0; t <= 2.0; t += 0.1) {
            bool negative =
                scoring::classify_with_threshold(score, t) == ResponseClass::kNegative;
            if (was_negative) CHECK(negative);
            was_negative = negative;
        }
    }
}

TEST_CASE("calibrate scans all responses and is deterministic") {
    auto model = trained_toy_model();
    auto examples = testing::make_separable_corpus(6, 3, 8);

    auto stats1 = scoring::calibrate(model, examples);
    auto stats2 = scoring::calibrate(model, examples);
    CHECK(stats1.d_min == stats2.d_min);
    CHECK(stats1.d_max == stats2.d_max);
    CHECK(stats1.d_min <= stats1.d_max);
    CHECK(stats1.source == StatsSource::kEvalSet);

    std::vector<corpus::DialogueExample> empty;
    CHECK_THROWS_AS(scoring::calibrate(model, empty), EmptyEvaluationSet);
}

TEST_CASE("slm_score end to end orders positives above adversarials") {
    auto model = trained_toy_model();
    auto stats = scoring::stats_from_checkpoint(model);
    auto examples = testing::make_separable_corpus(12, 3, 4);

    int wins = 0, total = 0;
    for (const auto& ex : examples) {
        std::string context = corpus::flatten_context(ex);
        for (size_t k = 0; k < ex.positives.size(); ++k) {
            auto pos = scoring::slm_score(model, stats, context, ex.positives[k]);
            auto adv = scoring::slm_score(model, stats, context,
                                          ex.adversarial_negatives[k]);
            CHECK(pos.score == doctest::Approx(1.0 - pos.s_d + pos.s_p).epsilon(1e-9));
            CHECK(adv.s_d >= 0.0);
            CHECK(adv.s_d <= 1.0);
            if (pos.score > adv.score) ++wins;
            ++total;
        }
    }
    CHECK(static_cast<double>(wins) / total > 0.9);
}

TEST_CASE("untrained model cannot score") {
    auto backend = std::make_shared<enc::HashingEncoder>(16);
    auto model = training::make_model(backend, 0);
    DistanceStats stats{0.0, 1.0, StatsSource::kTrainSet};
    CHECK_THROWS_AS(scoring::slm_score(model, stats, "a", "b"), UntrainedScorer);
    CHECK_THROWS_AS(scoring::stats_from_checkpoint(model), UntrainedScorer);
}

TEST_CASE("replay scorer recomposes from a dump") {
    auto dump = std::filesystem::temp_directory_path() / "dre_replay_dump.jsonl";
    util::atomic_write_file(
        dump,
        R"({"id": "e1", "response": "resp a", "d": 0.2, "s_p": 0.9})"
        "\n"
        R"({"id": "e1", "response": "resp b", "d": 1.4, "s_p": 0.1})"
        "\n");

    DistanceStats stats{0.0, 2.0, StatsSource::kTrainSet};
    scoring::ReplayScorer scorer(dump, stats);

    auto a = scorer.score("e1", "ignored context", "resp a");
    CHECK(a.d == doctest::Approx(0.2));
    CHECK(a.s_d == doctest::Approx(0.1));
    CHECK(a.score == doctest::Approx(1.0 - 0.1 + 0.9));

    CHECK_THROWS_AS(scorer.score("e1", "ignored", "unknown response"),
                    EmptyEvaluationSet);
    std::filesystem::remove(dump);
}
