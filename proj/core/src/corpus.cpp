#include "dre/corpus.hpp"

#include <algorithm>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::corpus {

using json = nlohmann::json;

namespace {

json turn_to_json(const Turn& turn) {
    return json{{"speaker", turn.speaker}, {"text", turn.text}};
}

json example_to_json(const DialogueExample& ex) {
    json j;
    j["id"] = ex.id;
    j["context"] = json::array();
    for (const auto& turn : ex.context) j["context"].push_back(turn_to_json(turn));
    j["positives"] = ex.positives;
    j["adversarial_negatives"] = ex.adversarial_negatives;
    if (ex.random_negatives) j["random_negatives"] = *ex.random_negatives;
    if (ex.human_score) j["human_score"] = *ex.human_score;
    return j;
}

[[noreturn]] void malformed(size_t line_no, const std::string& reason) {
    throw MalformedRecord("line " + std::to_string(line_no) + ": " + reason);
}

DialogueExample example_from_json(const json& j, size_t line_no) {
    DialogueExample ex;
    if (!j.is_object()) malformed(line_no, "record is not a JSON object");
    if (!j.contains("id") || !j["id"].is_string()) malformed(line_no, "missing string field \"id\"");
    ex.id = j["id"].get<std::string>();
    if (ex.id.empty()) malformed(line_no, "empty id");

    if (!j.contains("context") || !j["context"].is_array() || j["context"].empty())
        malformed(line_no, "missing or empty \"context\" array");
    for (const auto& jt : j["context"]) {
        if (!jt.is_object() || !jt.contains("speaker") || !jt.contains("text"))
            malformed(line_no, "context turn must have \"speaker\" and \"text\"");
        Turn turn{jt["speaker"].get<std::string>(), jt["text"].get<std::string>()};
        if (turn.speaker != "FS" && turn.speaker != "SS")
            malformed(line_no, "speaker must be FS or SS, got \"" + turn.speaker + "\"");
        if (util::trim(turn.text).empty())
            malformed(line_no, "context turn text is empty");
        ex.context.push_back(std::move(turn));
    }

    auto read_string_list = [&](const char* key) {
        std::vector<std::string> out;
        if (!j.contains(key)) return out;
        if (!j[key].is_array()) malformed(line_no, std::string("\"") + key + "\" must be an array");
        for (const auto& item : j[key]) {
            if (!item.is_string()) malformed(line_no, std::string("\"") + key + "\" entries must be strings");
            out.push_back(item.get<std::string>());
        }
        return out;
    };

    ex.positives = read_string_list("positives");
    ex.adversarial_negatives = read_string_list("adversarial_negatives");
    if (j.contains("random_negatives")) ex.random_negatives = read_string_list("random_negatives");

    if (j.contains("human_score") && !j["human_score"].is_null()) {
        if (!j["human_score"].is_number()) malformed(line_no, "\"human_score\" must be a number");
        double score = j["human_score"].get<double>();
        if (score < 1.0 || score > 5.0)
            malformed(line_no, "human_score " + util::format_double(score) + " outside [1, 5]");
        ex.human_score = score;
    }
    return ex;
}

}  // namespace

std::string flatten_context(const DialogueExample& example) {
    std::string out;
    for (size_t i = 0; i < example.context.size(); ++i) {
        if (i > 0) out += "\n";
        out += example.context[i].speaker + ": " + example.context[i].text;
    }
    return out;
}

std::vector<DialogueExample> load_corpus(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw MalformedRecord("cannot open corpus file: " + path.string());

    std::vector<DialogueExample> examples;
    std::unordered_set<std::string> seen_ids;
    std::string line;
    size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            malformed(line_no, std::string("invalid JSON: ") + e.what());
        }
        DialogueExample ex = example_from_json(j, line_no);
        if (!seen_ids.insert(ex.id).second)
            throw DuplicateId("duplicate example id \"" + ex.id + "\" at line " +
                              std::to_string(line_no));
        examples.push_back(std::move(ex));
    }
    return examples;
}

void save_corpus(std::span<const DialogueExample> examples,
                 const std::filesystem::path& path) {
    std::ostringstream out;
    for (const auto& ex : examples) out << example_to_json(ex).dump() << "\n";
    util::atomic_write_file(path, out.str());
}

std::vector<Triplet> make_triplets(std::span<const DialogueExample> examples,
                                   Pairing pairing, std::uint64_t seed) {
    std::vector<Triplet> triplets;
    for (const auto& ex : examples) {
        if (ex.positives.empty() || ex.adversarial_negatives.empty())
            throw EmptyResponseSet("example \"" + ex.id +
                                   "\" lacks positives or adversarial negatives");
        std::string context = flatten_context(ex);
        if (pairing == Pairing::kAligned) {
            size_t n = std::min(ex.positives.size(), ex.adversarial_negatives.size());
            for (size_t k = 0; k < n; ++k)
                triplets.push_back({context, ex.positives[k],
                                    ex.adversarial_negatives[k], ex.id});
        } else {
            for (const auto& pos : ex.positives)
                for (const auto& adv : ex.adversarial_negatives)
                    triplets.push_back({context, pos, adv, ex.id});
        }
    }
    std::mt19937_64 rng(seed);
    std::shuffle(triplets.begin(), triplets.end(), rng);
    return triplets;
}

std::vector<DialogueExample> sample_for_review(
    std::span<const DialogueExample> examples, std::size_t n,
    std::uint64_t seed, const std::optional<std::filesystem::path>& review_path) {
    if (n > examples.size())
        throw SampleTooLarge("requested " + std::to_string(n) + " of " +
                             std::to_string(examples.size()) + " examples");

    std::vector<size_t> indices(examples.size());
    std::iota(indices.begin(), indices.end(), size_t{0});
    std::mt19937_64 rng(seed);
    std::shuffle(indices.begin(), indices.end(), rng);
    indices.resize(n);

    std::vector<DialogueExample> sample;
    sample.reserve(n);
    for (size_t idx : indices) sample.push_back(examples[idx]);

    if (review_path) {
        std::ostringstream out;
        for (const auto& ex : sample) {
            json j = example_to_json(ex);
            j["review"] = json{{"approved", false}, {"note", ""}};
            out << j.dump() << "\n";
        }
        util::atomic_write_file(*review_path, out.str());
    }
    return sample;
}

}  // namespace dre::corpus
