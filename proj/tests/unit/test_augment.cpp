#include <doctest.h>

#include <sstream>

#include "dre/augment.hpp"
#include "dre/errors.hpp"
#include "toy_corpus.hpp"

using namespace dre;
using corpus::DialogueExample;
using gateway::MockTransport;
using gateway::RequestMode;

namespace {

std::string well_formed_reply(const std::string& tag) {
    std::ostringstream out;
    out << "Positive Responses:\n";
    for (int i = 1; i <= 5; ++i)
        out << i << ". positive " << tag << " number " << i << "\n";
    out << "Adversarial Negative Responses:\n";
    for (int i = 1; i <= 5; ++i)
        out << i << ". adversarial " << tag << " number " << i << "\n";
    return out.str();
}

std::string short_reply() {
    // only 4 positives
    return "Positive Responses:\n1. a\n2. b\n3. c\n4. d\n"
           "Adversarial Negative Responses:\n1. e\n2. f\n3. g\n4. h\n5. i\n";
}

DialogueExample example_with_id(const std::string& id) {
    DialogueExample ex;
    ex.id = id;
    ex.context = {{"FS", "Do you like hiking?"}, {"SS", "Yes, every weekend."}};
    return ex;
}

gateway::LlmClient mock_client(std::shared_ptr<MockTransport> transport) {
    gateway::ProviderConfig config;
    config.provider = gateway::Provider::kMock;
    config.backoff_base_seconds = 0.0;
    return gateway::LlmClient(config, std::move(transport));
}

}  // namespace

TEST_CASE("parse_generation_reply numbered sections") {
    auto [pos, adv] = corpus::parse_generation_reply(well_formed_reply("x"));
    REQUIRE(pos.size() == 5);
    REQUIRE(adv.size() == 5);
    CHECK(pos[0] == "positive x number 1");
    CHECK(adv[4] == "adversarial x number 5");
}

TEST_CASE("parse_generation_reply plain-line fallback") {
    std::string reply =
        "Positive Responses:\nalpha\nbeta\ngamma\ndelta\nepsilon\n"
        "Adversarial Negative Responses:\none\ntwo\nthree\nfour\nfive\n";
    auto [pos, adv] = corpus::parse_generation_reply(reply);
    CHECK(pos == std::vector<std::string>{"alpha", "beta", "gamma", "delta",
                                          "epsilon"});
    CHECK(adv.size() == 5);
}

TEST_CASE("parse_generation_reply failures") {
    CHECK_THROWS_AS(corpus::parse_generation_reply("no sections at all"),
                    GenerationParseFailure);
    CHECK_THROWS_AS(corpus::parse_generation_reply(short_reply()),
                    GenerationParseFailure);
}

TEST_CASE("augment_example first-attempt success") {
    auto generator_transport = std::make_shared<MockTransport>();
    generator_transport->script("aug-1", RequestMode::kGenerate,
                                well_formed_reply("aug-1"));
    auto checker_transport = std::make_shared<MockTransport>();
    checker_transport->set_default_reply("Yes");

    auto generator = mock_client(generator_transport);
    auto checker = mock_client(checker_transport);

    auto record = corpus::augment_example(example_with_id("aug-1"), generator,
                                          checker, 3,
                                          gateway::PromptTemplates::builtin());
    CHECK(record.attempts == 1);
    CHECK(record.check_passed);
    CHECK_FALSE(record.review_flag);
    CHECK(record.generated_positives.size() == 5);
    CHECK(record.generated_adversarials.size() == 5);
    // 5 positive checks + 5 adversarial checks
    CHECK(checker_transport->calls() == 10);
}

TEST_CASE("augment_example retries until the checker approves") {
    auto generator_transport = std::make_shared<MockTransport>();
    generator_transport->script("aug-2", RequestMode::kGenerate,
                                well_formed_reply("aug-2"));
    auto checker_transport = std::make_shared<MockTransport>();
    // Each attempt issues 10 checks; two all-No rounds then approvals.
    std::vector<std::string> replies;
    for (int i = 0; i < 20; ++i) replies.push_back("No");
    replies.push_back("Yes");
    checker_transport->script_sequence("aug-2", RequestMode::kCheck, replies);

    auto generator = mock_client(generator_transport);
    auto checker = mock_client(checker_transport);

    auto record = corpus::augment_example(example_with_id("aug-2"), generator,
                                          checker, 5,
                                          gateway::PromptTemplates::builtin());
    CHECK(record.attempts == 3);
    CHECK(record.check_passed);
}

TEST_CASE("augment_example exhausts retries on a never-passing check") {
    auto generator_transport = std::make_shared<MockTransport>();
    generator_transport->script("aug-3", RequestMode::kGenerate,
                                well_formed_reply("aug-3"));
    auto checker_transport = std::make_shared<MockTransport>();
    checker_transport->set_default_reply("No");

    auto generator = mock_client(generator_transport);
    auto checker = mock_client(checker_transport);

    auto record = corpus::augment_example(example_with_id("aug-3"), generator,
                                          checker, 2,
                                          gateway::PromptTemplates::builtin());
    CHECK(record.attempts == 2);
    CHECK_FALSE(record.check_passed);
    CHECK(record.review_flag);
    CHECK(record.generated_positives.size() == 5);
}

TEST_CASE("augment_example parse failure after retries") {
    auto generator_transport = std::make_shared<MockTransport>();
    generator_transport->script("aug-4", RequestMode::kGenerate, short_reply());
    auto checker_transport = std::make_shared<MockTransport>();
    checker_transport->set_default_reply("Yes");

    auto generator = mock_client(generator_transport);
    auto checker = mock_client(checker_transport);

    CHECK_THROWS_AS(corpus::augment_example(example_with_id("aug-4"), generator,
                                            checker, 2,
                                            gateway::PromptTemplates::builtin()),
                    GenerationParseFailure);
    CHECK(generator_transport->calls() == 2);
    CHECK(checker_transport->calls() == 0);
}

TEST_CASE("augment_example validates input") {
    auto transport = std::make_shared<MockTransport>();
    auto generator = mock_client(transport);
    auto checker = mock_client(transport);

    DialogueExample no_context;
    no_context.id = "empty";
    CHECK_THROWS_AS(corpus::augment_example(no_context, generator, checker, 1,
                                            gateway::PromptTemplates::builtin()),
                    EmptyText);
    CHECK_THROWS_AS(corpus::augment_example(example_with_id("x"), generator,
                                            checker, 0,
                                            gateway::PromptTemplates::builtin()),
                    ConfigError);
}

namespace {

// Scores positives containing "good" high and everything else low.
struct KeywordScorer : scoring::SlmScorer {
    scoring::SlmScore score(const std::string&, const std::string&,
                            const std::string& response) override {
        scoring::SlmScore s;
        bool good = response.find("good") != std::string::npos;
        s.d = good ? 0.1 : 1.5;
        s.s_d = good ? 0.05 : 0.95;
        s.s_p = good ? 0.9 : 0.1;
        s.score = 1.0 - s.s_d + s.s_p;
        return s;
    }
};

}  // namespace

TEST_CASE("slm_filter drops misclassified responses and flags empty classes") {
    DialogueExample ex = example_with_id("f1");
    ex.positives = {"good answer one", "bad answer", "good answer two"};
    ex.adversarial_negatives = {"noise line", "good disguised adversarial"};

    KeywordScorer scorer;
    auto result = corpus::slm_filter(std::vector<DialogueExample>{ex}, scorer, 0.5);
    REQUIRE(result.examples.size() == 1);
    const auto& kept = result.examples[0];
    CHECK(kept.positives == std::vector<std::string>{"good answer one",
                                                     "good answer two"});
    CHECK(kept.adversarial_negatives == std::vector<std::string>{"noise line"});
    CHECK(result.records[0].dropped_positives == 1);
    CHECK(result.records[0].dropped_adversarials == 1);
    CHECK_FALSE(result.records[0].review_flag);

    // perfectly separated corpus passes through unchanged
    DialogueExample clean = example_with_id("f2");
    clean.positives = {"good a", "good b"};
    clean.adversarial_negatives = {"x", "y"};
    auto clean_result =
        corpus::slm_filter(std::vector<DialogueExample>{clean}, scorer, 0.5);
    CHECK(clean_result.examples[0] == clean);
    CHECK_FALSE(clean_result.records[0].review_flag);

    // losing every positive raises the review flag but keeps the example
    DialogueExample hopeless = example_with_id("f3");
    hopeless.positives = {"bad one", "bad two"};
    hopeless.adversarial_negatives = {"noise"};
    auto flagged =
        corpus::slm_filter(std::vector<DialogueExample>{hopeless}, scorer, 0.5);
    REQUIRE(flagged.examples.size() == 1);
    CHECK(flagged.examples[0].positives.empty());
    CHECK(flagged.records[0].review_flag);

    CHECK_THROWS_AS(corpus::slm_filter(std::vector<DialogueExample>{ex}, scorer,
                                       2.5),
                    OutOfRange);
}
