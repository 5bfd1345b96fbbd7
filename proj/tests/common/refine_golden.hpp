#pragma once

// Shared driver for the fusion golden check: replays the fixture through the
// refine pipeline (replay scorer + scripted mock judge) and compares every
// variant/mode output bit-for-bit against the independently computed golden
// file. Used by both the unit suite and the acceptance suite.

#include <filesystem>
#include <optional>
#include <sstream>
#include <string>

#include <nlohmann/json.hpp>

#include "dre/refine.hpp"
#include "dre/scoring.hpp"
#include "dre/util.hpp"

namespace dre::testing {

struct GoldenOutcome {
    int rows_checked = 0;
    int mismatches = 0;
    std::string first_mismatch;

    bool passed() const { return rows_checked > 0 && mismatches == 0; }
};

inline GoldenOutcome run_refine_golden(const std::filesystem::path& fixture_path,
                                       const std::filesystem::path& golden_path) {
    using nlohmann::json;

    json fixture = json::parse(util::read_file(fixture_path));
    scoring::DistanceStats stats{fixture.at("stats").at("d_min").get<double>(),
                                 fixture.at("stats").at("d_max").get<double>(),
                                 scoring::StatsSource::kTrainSet};

    // Replay dump from the fixture's raw (d, s_p) rows.
    auto dump_path = std::filesystem::temp_directory_path() /
                     "dre_refine_golden_dump.jsonl";
    {
        std::ostringstream out;
        for (const auto& ex : fixture.at("examples")) {
            json row;
            row["id"] = ex.at("id");
            row["response"] = ex.at("response");
            row["d"] = ex.at("d");
            row["s_p"] = ex.at("s_p");
            out << row.dump() << "\n";
        }
        util::atomic_write_file(dump_path, out.str());
    }
    scoring::ReplayScorer scorer(dump_path, stats);

    auto transport = std::make_shared<gateway::MockTransport>();
    for (const auto& ex : fixture.at("examples")) {
        transport->script(ex.at("id").get<std::string>(),
                          gateway::RequestMode::kSlide,
                          ex.at("slide_reply").get<std::string>());
        transport->script(ex.at("id").get<std::string>(),
                          gateway::RequestMode::kDre,
                          ex.at("dre_reply").get<std::string>());
    }
    gateway::ProviderConfig provider;
    provider.provider = gateway::Provider::kMock;
    provider.backoff_base_seconds = 0.0;
    gateway::LlmClient client(provider, transport);

    refine::EvalComponents components;
    components.scorer = &scorer;
    components.client = &client;
    components.note.slm_overall =
        fixture.at("accuracy_note").at("slm_overall").get<double>();
    components.note.llm_overall =
        fixture.at("accuracy_note").at("llm_overall").get<double>();

    std::unordered_map<std::string, json> example_by_id;
    for (const auto& ex : fixture.at("examples"))
        example_by_id[ex.at("id").get<std::string>()] = ex;

    GoldenOutcome outcome;
    auto check_term = [](const std::optional<double>& actual, const json& row,
                         const char* key, std::string& error) {
        if (!row.contains(key)) return true;
        if (!actual.has_value()) {
            error = std::string("missing term ") + key;
            return false;
        }
        if (*actual != row.at(key).get<double>()) {
            error = std::string(key) + ": got " + util::format_double(*actual) +
                    ", want " + util::format_double(row.at(key).get<double>());
            return false;
        }
        return true;
    };

    for (const auto& line : util::read_lines(golden_path)) {
        if (util::trim(line).empty()) continue;
        json row = json::parse(line);
        ++outcome.rows_checked;

        const auto& ex = example_by_id.at(row.at("id").get<std::string>());
        components.coefficient_mode =
            refine::coefficient_mode_from_string(row.at("mode").get<std::string>());

        refine::FusedScore fused = refine::dre_evaluate(
            components,
            refine::fusion_mode_from_string(row.at("variant").get<std::string>()),
            ex.at("id").get<std::string>(), ex.at("context").get<std::string>(),
            ex.at("response").get<std::string>());

        std::string error;
        bool ok = true;
        if (fused.final_score != row.at("final").get<double>()) {
            error = "final: got " + util::format_double(fused.final_score) +
                    ", want " + util::format_double(row.at("final").get<double>());
            ok = false;
        }
        ok = ok && check_term(fused.terms.score_slm, row, "score_slm", error);
        ok = ok && check_term(fused.terms.score_llm_raw, row, "score_llm_raw", error);
        ok = ok && check_term(fused.terms.s_c, row, "s_c", error);
        ok = ok && check_term(fused.terms.s_inf, row, "s_inf", error);
        ok = ok && check_term(fused.terms.coefficient, row, "coefficient", error);

        if (!ok) {
            ++outcome.mismatches;
            if (outcome.first_mismatch.empty())
                outcome.first_mismatch = row.at("id").get<std::string>() + "/" +
                                         row.at("variant").get<std::string>() +
                                         "/" + row.at("mode").get<std::string>() +
                                         ": " + error;
        }
    }

    std::filesystem::remove(dump_path);
    return outcome;
}

}  // namespace dre::testing
