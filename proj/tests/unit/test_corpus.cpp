#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "dre/corpus.hpp"
#include "dre/errors.hpp"
#include "dre/util.hpp"

using namespace dre;
using corpus::DialogueExample;
using corpus::Pairing;

namespace {

DialogueExample sample_example(const std::string& id, int n_pos = 2, int n_adv = 2) {
    DialogueExample ex;
    ex.id = id;
    ex.context = {{"FS", "Is there something wrong?"},
                  {"SS", "I enjoy having your daughter in my class."}};
    for (int i = 0; i < n_pos; ++i)
        ex.positives.push_back("positive " + std::to_string(i) + " for " + id);
    for (int i = 0; i < n_adv; ++i)
        ex.adversarial_negatives.push_back("adversarial " + std::to_string(i) +
                                           " for " + id);
    return ex;
}

std::filesystem::path temp_file(const std::string& name) {
    return std::filesystem::temp_directory_path() / name;
}

}  // namespace

TEST_CASE("flatten_context uses speaker prefixes") {
    auto ex = sample_example("e1");
    CHECK(corpus::flatten_context(ex) ==
          "FS: Is there something wrong?\nSS: I enjoy having your daughter in "
          "my class.");
}

TEST_CASE("corpus save/load round-trips") {
    std::vector<DialogueExample> examples = {sample_example("e1"),
                                             sample_example("e2", 3, 1)};
    examples[0].human_score = 4.25;
    examples[1].random_negatives = std::vector<std::string>{"random one"};

    auto path = temp_file("dre_corpus_roundtrip.jsonl");
    corpus::save_corpus(examples, path);
    auto loaded = corpus::load_corpus(path);
    CHECK(loaded == examples);
    std::filesystem::remove(path);
}

TEST_CASE("load_corpus on an empty file yields an empty corpus") {
    auto path = temp_file("dre_corpus_empty.jsonl");
    util::atomic_write_file(path, "");
    CHECK(corpus::load_corpus(path).empty());
    std::filesystem::remove(path);
}

TEST_CASE("load_corpus reports malformed records with line numbers") {
    auto path = temp_file("dre_corpus_bad.jsonl");
    corpus::save_corpus(std::vector<DialogueExample>{sample_example("ok")}, path);
    {
        std::ofstream out(path, std::ios::app);
        out << R"({"id": "missing-context", "positives": ["p"]})" << "\n";
    }
    CHECK_THROWS_WITH_AS(corpus::load_corpus(path),
                         doctest::Contains("line 2"), MalformedRecord);
    std::filesystem::remove(path);
}

TEST_CASE("load_corpus rejects duplicate ids and bad scores") {
    auto path = temp_file("dre_corpus_dup.jsonl");
    std::vector<DialogueExample> examples = {sample_example("same"),
                                             sample_example("same")};
    corpus::save_corpus(examples, path);
    CHECK_THROWS_AS(corpus::load_corpus(path), DuplicateId);

    auto ex = sample_example("scored");
    corpus::save_corpus(std::vector<DialogueExample>{ex}, path);
    std::string text = util::read_file(path);
    text = util::replace_all(text, "}\n", ",\"human_score\":6.0}\n");
    util::atomic_write_file(path, text);
    CHECK_THROWS_AS(corpus::load_corpus(path), MalformedRecord);
    std::filesystem::remove(path);
}

TEST_CASE("make_triplets counts follow the pairing mode") {
    std::vector<DialogueExample> examples = {sample_example("e1", 5, 5)};
    CHECK(corpus::make_triplets(examples, Pairing::kAligned, 7).size() == 5);
    CHECK(corpus::make_triplets(examples, Pairing::kCartesian, 7).size() == 25);

    examples.push_back(sample_example("e2", 3, 2));
    // aligned: sum of min counts; cartesian: sum of products
    CHECK(corpus::make_triplets(examples, Pairing::kAligned, 7).size() == 5 + 2);
    CHECK(corpus::make_triplets(examples, Pairing::kCartesian, 7).size() == 25 + 6);
}

TEST_CASE("make_triplets is deterministic per seed") {
    std::vector<DialogueExample> examples = {sample_example("e1", 4, 4),
                                             sample_example("e2", 4, 4)};
    auto a = corpus::make_triplets(examples, Pairing::kAligned, 42);
    auto b = corpus::make_triplets(examples, Pairing::kAligned, 42);
    REQUIRE(a.size() == b.size());
    for (size_t i = 0; i < a.size(); ++i) {
        CHECK(a[i].positive == b[i].positive);
        CHECK(a[i].adversarial == b[i].adversarial);
        CHECK(a[i].source_id == b[i].source_id);
    }
}

TEST_CASE("make_triplets requires both response classes") {
    std::vector<DialogueExample> examples = {sample_example("e1", 2, 0)};
    CHECK_THROWS_AS(corpus::make_triplets(examples, Pairing::kAligned, 0),
                    EmptyResponseSet);
}

TEST_CASE("aligned triplets pair responses by index") {
    std::vector<DialogueExample> examples = {sample_example("e1", 2, 2)};
    auto triplets = corpus::make_triplets(examples, Pairing::kAligned, 3);
    for (const auto& t : triplets) {
        // positive k pairs with adversarial k
        auto pos_idx = t.positive.substr(9, 1);
        auto adv_idx = t.adversarial.substr(12, 1);
        CHECK(pos_idx == adv_idx);
    }
}

TEST_CASE("sample_for_review") {
    std::vector<DialogueExample> examples;
    for (int i = 0; i < 10; ++i)
        examples.push_back(sample_example("e" + std::to_string(i)));

    CHECK(corpus::sample_for_review(examples, 0, 1).empty());
    CHECK_THROWS_AS(corpus::sample_for_review(examples, 11, 1), SampleTooLarge);

    auto all = corpus::sample_for_review(examples, 10, 1);
    CHECK(all.size() == 10);

    auto s1 = corpus::sample_for_review(examples, 4, 9);
    auto s2 = corpus::sample_for_review(examples, 4, 9);
    REQUIRE(s1.size() == 4);
    for (size_t i = 0; i < s1.size(); ++i) CHECK(s1[i].id == s2[i].id);

    auto review_path = temp_file("dre_review.jsonl");
    corpus::sample_for_review(examples, 3, 5, review_path);
    auto lines = util::read_lines(review_path);
    CHECK(lines.size() == 3);
    CHECK(lines[0].find("\"review\"") != std::string::npos);
    CHECK(lines[0].find("\"approved\"") != std::string::npos);
    std::filesystem::remove(review_path);
}
