#include "commands.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <iostream>
#include <memory>
#include <sstream>
#include <thread>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "dre/augment.hpp"
#include "dre/embedding_export.hpp"
#include "dre/errors.hpp"
#include "dre/manifest.hpp"
#include "dre/refine.hpp"
#include "dre/stats.hpp"
#include "dre/training.hpp"
#include "dre/util.hpp"

namespace evaltool {

namespace fs = std::filesystem;
using json = nlohmann::json;
using namespace dre;

namespace {

fs::path output_dir(const Config& config) {
    fs::path dir = config.get_string_or("paths.output_dir", "out");
    fs::create_directories(dir);
    return dir;
}

gateway::PromptTemplates templates_from(const Config& config) {
    if (config.has("fusion.prompt_dir"))
        return gateway::PromptTemplates::from_directory(
            config.get_string("fusion.prompt_dir"));
    return gateway::PromptTemplates::builtin();
}

training::TrainingConfig training_config_from(const Config& config) {
    training::TrainingConfig tc;
    tc.margin_triplet = config.get_double_or("training.margin_triplet", 0.5);
    tc.margin_pair = config.get_double_or("training.margin_pair", 0.5);
    tc.epochs = static_cast<int>(config.get_int_or("training.epochs", 20));
    tc.batch_size = static_cast<int>(config.get_int_or("training.batch_size", 32));
    tc.learning_rate = config.get_double_or("training.learning_rate", 1e-2);
    tc.seed = static_cast<std::uint64_t>(config.get_int_or("training.seed", 0));
    std::string pairing = config.get_string_or("training.pairing", "aligned");
    if (pairing == "aligned") tc.pairing = corpus::Pairing::kAligned;
    else if (pairing == "cartesian") tc.pairing = corpus::Pairing::kCartesian;
    else throw ConfigError("training.pairing must be aligned or cartesian");
    tc.early_stop_patience =
        static_cast<int>(config.get_int_or("training.early_stop_patience", 3));
    return tc;
}

gateway::ProviderConfig provider_config_from(const Config& config) {
    gateway::ProviderConfig pc;
    pc.provider = gateway::provider_from_string(
        config.get_string_or("provider.provider", "mock"));
    pc.model_name = config.get_string_or("provider.model_name", "mock-judge");
    pc.temperature = config.get_double_or("provider.temperature", 0.0);
    pc.max_retries = static_cast<int>(config.get_int_or("provider.max_retries", 2));
    pc.timeout_seconds = config.get_double_or("provider.timeout_seconds", 60.0);
    pc.concurrency_limit =
        static_cast<int>(config.get_int_or("provider.concurrency_limit", 4));
    pc.base_url = config.get_string_or("provider.base_url", "");
    pc.api_key_env = config.get_string_or("provider.api_key_env", "");
    pc.backoff_base_seconds =
        config.get_double_or("provider.backoff_base_seconds", 0.5);
    if (config.has("paths.cache_dir")) pc.cache_dir = config.get_string("paths.cache_dir");
    if (config.has("provider.mock_replies"))
        pc.mock_replies_path = config.get_string("provider.mock_replies");
    return pc;
}

RunManifest manifest_from(const Config& config, const std::string& command) {
    RunManifest manifest;
    manifest.command = command;
    manifest.config_hash = config.hash();
    manifest.seed = static_cast<std::uint64_t>(config.get_int_or("training.seed", 0));
    manifest.template_hashes = templates_from(config).hash_summary();
    return manifest;
}

std::vector<corpus::DialogueExample> load_corpus_from(const Config& config,
                                                      const char* key) {
    return corpus::load_corpus(config.get_string(key));
}

const char* scale_name(refine::Scale scale) {
    return scale == refine::Scale::kUnit ? "unit" : "likert5";
}

const char* branch_name(refine::SlideBranch branch) {
    switch (branch) {
        case refine::SlideBranch::kSlm: return "slm";
        case refine::SlideBranch::kLlm: return "llm";
        case refine::SlideBranch::kAverage: return "average";
    }
    return "unknown";
}

void put_term(json& terms, const char* key, const std::optional<double>& value) {
    if (value) terms[key] = *value;
}

// A single simple SVG line plot; axes, one polyline, a peak marker.
std::string render_sweep_svg(const stats::SweepResult& sweep) {
    const double width = 640, height = 420, left = 60, bottom = 370, top = 30,
                 right = 610;
    double t_min = sweep.curve.front().threshold;
    double t_max = sweep.curve.back().threshold;

    auto x_of = [&](double t) {
        return left + (t - t_min) / (t_max - t_min) * (right - left);
    };
    auto y_of = [&](double acc) { return bottom - acc * (bottom - top); };

    std::ostringstream svg;
    svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width
        << "\" height=\"" << height << "\">\n"
        << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << right
        << "\" y2=\"" << bottom << "\" stroke=\"black\"/>\n"
        << "<line x1=\"" << left << "\" y1=\"" << bottom << "\" x2=\"" << left
        << "\" y2=\"" << top << "\" stroke=\"black\"/>\n";
    for (int i = 0; i <= 10; i += 2) {
        double acc = i / 10.0;
        svg << "<text x=\"" << left - 38 << "\" y=\"" << y_of(acc) + 4
            << "\" font-size=\"11\">" << util::format_fixed(acc, 1) << "</text>\n";
    }
    svg << "<polyline fill=\"none\" stroke=\"steelblue\" stroke-width=\"2\" points=\"";
    for (const auto& point : sweep.curve)
        svg << x_of(point.threshold) << ',' << y_of(point.accuracy) << ' ';
    svg << "\"/>\n";
    for (const auto& point : sweep.curve) {
        svg << "<circle cx=\"" << x_of(point.threshold) << "\" cy=\""
            << y_of(point.accuracy) << "\" r=\"3\" fill=\"steelblue\"/>\n"
            << "<text x=\"" << x_of(point.threshold) - 10 << "\" y=\""
            << bottom + 16 << "\" font-size=\"10\">"
            << util::format_fixed(point.threshold, 1) << "</text>\n";
    }
    svg << "<circle cx=\"" << x_of(sweep.best_threshold) << "\" cy=\""
        << y_of(sweep.best_accuracy)
        << "\" r=\"5\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n"
        << "<text x=\"" << left << "\" y=\"" << top - 10
        << "\" font-size=\"12\">classification accuracy vs threshold (peak at "
        << util::format_fixed(sweep.best_threshold, 2) << ", accuracy "
        << util::format_fixed(sweep.best_accuracy, 4) << ")</text>\n"
        << "<text x=\"" << (left + right) / 2 - 30 << "\" y=\"" << bottom + 34
        << "\" font-size=\"12\">threshold</text>\n"
        << "</svg>\n";
    return svg.str();
}

}  // namespace

int cmd_train(const Config& config) {
    auto dir = output_dir(config);
    auto examples = load_corpus_from(config, "paths.corpus");
    auto tc = training_config_from(config);
    auto triplets = corpus::make_triplets(examples, tc.pairing, tc.seed);

    auto backend = enc::make_backend(
        config.get_string_or("training.encoder_backend", "hashing"),
        static_cast<int>(config.get_int_or("training.encoder_dim", 64)));

    fs::path checkpoint = config.get_string_or("paths.checkpoint",
                                               (dir / "checkpoint.ckpt").string());
    fs::path metrics = dir / "metrics.csv";

    auto meta = training::train(triplets, backend, tc, checkpoint, metrics);

    auto manifest = manifest_from(config, "train");
    manifest.seed = tc.seed;
    manifest.checkpoint_hash = file_hash(checkpoint);
    write_manifest(manifest, dir / "manifest_train.json");

    std::cout << "trained on " << triplets.size() << " triplets for "
              << meta.epochs_run << " epochs\n"
              << "triplet accuracy " << util::format_double(meta.final_triplet_accuracy)
              << ", classifier accuracy "
              << util::format_double(meta.final_cls_accuracy) << "\n"
              << "distance calibration [" << util::format_double(meta.d_min)
              << ", " << util::format_double(meta.d_max) << "]\n"
              << "checkpoint: " << checkpoint.string() << "\n"
              << "metrics: " << metrics.string() << "\n";
    return 0;
}

int cmd_augment(const Config& config) {
    auto dir = output_dir(config);
    auto examples = load_corpus_from(config, "paths.corpus");
    auto templates = templates_from(config);

    auto generator_config = provider_config_from(config);
    generator_config.temperature =
        config.get_double_or("generation.temperature", 0.8);
    auto checker_config = provider_config_from(config);
    checker_config.temperature = 0.0;

    gateway::LlmClient generator(generator_config);
    gateway::LlmClient checker(checker_config);
    int max_retries = static_cast<int>(config.get_int_or("generation.max_retries", 3));

    struct Outcome {
        std::optional<corpus::AugmentationRecord> record;
        std::string error;
    };
    std::vector<Outcome> outcomes(examples.size());

    // Bounded by the gateway limiter; worker count just caps thread overhead.
    size_t workers = std::min<size_t>(
        examples.size(),
        static_cast<size_t>(std::max(1, generator_config.concurrency_limit)));
    std::atomic<size_t> next{0};
    std::vector<std::thread> pool;
    for (size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            while (true) {
                size_t i = next.fetch_add(1);
                if (i >= examples.size()) break;
                try {
                    outcomes[i].record = corpus::augment_example(
                        examples[i], generator, checker, max_retries, templates);
                } catch (const std::exception& e) {
                    outcomes[i].error = e.what();
                }
            }
        });
    }
    for (auto& t : pool) t.join();

    std::vector<corpus::DialogueExample> augmented;
    std::ostringstream log;
    size_t failures = 0;
    for (size_t i = 0; i < examples.size(); ++i) {
        json entry;
        entry["context_id"] = examples[i].id;
        if (outcomes[i].record) {
            const auto& record = *outcomes[i].record;
            entry["attempts"] = record.attempts;
            entry["check_passed"] = record.check_passed;
            entry["review_flag"] = record.review_flag;

            corpus::DialogueExample out = examples[i];
            out.positives = record.generated_positives;
            out.adversarial_negatives = record.generated_adversarials;
            augmented.push_back(std::move(out));
        } else {
            entry["failed"] = true;
            entry["error"] = outcomes[i].error;
            ++failures;
        }
        log << entry.dump() << "\n";
    }

    fs::path corpus_path = dir / "augmented.jsonl";
    corpus::save_corpus(augmented, corpus_path);
    util::atomic_write_file(dir / "augment_log.jsonl", log.str());

    auto review_n = config.get_int_or("generation.review_sample", 0);
    if (review_n > 0) {
        corpus::sample_for_review(
            augmented, static_cast<size_t>(std::min<std::int64_t>(
                           review_n, static_cast<std::int64_t>(augmented.size()))),
            static_cast<std::uint64_t>(config.get_int_or("generation.review_seed", 0)),
            dir / "review_sample.jsonl");
    }

    write_manifest(manifest_from(config, "augment"), dir / "manifest_augment.json");

    std::cout << "augmented " << augmented.size() << "/" << examples.size()
              << " contexts (" << failures << " failed)\n"
              << "corpus: " << corpus_path.string() << "\n"
              << "provider calls: generator " << generator.provider_calls()
              << ", checker " << checker.provider_calls() << "\n";
    return failures == 0 ? 0 : 10;
}

namespace {

scoring::DistanceStats stats_from_config_or(const Config& config,
                                            const training::SlmModel* model) {
    if (config.has("score.d_min") || config.has("score.d_max")) {
        scoring::DistanceStats stats{config.get_double_or("score.d_min", 0.0),
                                     config.get_double_or("score.d_max", 2.0),
                                     scoring::StatsSource::kEvalSet};
        stats.validate();
        return stats;
    }
    if (!model) throw ConfigError("score.d_min / score.d_max are required when replaying");
    return scoring::stats_from_checkpoint(*model);
}

}  // namespace

int cmd_score(const Config& config, const std::string& variant_name) {
    auto dir = output_dir(config);
    auto variant = refine::fusion_mode_from_string(variant_name);
    auto examples = load_corpus_from(config, "paths.corpus");

    const bool needs_slm = variant != refine::FusionMode::kLlmOnly &&
                           variant != refine::FusionMode::kNonDre;
    const bool needs_llm = variant != refine::FusionMode::kSlmOnly;

    // SLM side: checkpoint scorer, or a replay scorer over a prior dump.
    std::unique_ptr<scoring::SlmScorer> scorer;
    training::SlmModel model;
    std::string checkpoint_hash;
    if (needs_slm) {
        if (config.has("score.replay_dump")) {
            scorer = std::make_unique<scoring::ReplayScorer>(
                config.get_string("score.replay_dump"),
                stats_from_config_or(config, nullptr));
        } else {
            fs::path checkpoint = config.get_string("paths.checkpoint");
            model = training::load_checkpoint(checkpoint);
            checkpoint_hash = file_hash(checkpoint);
            auto stats = config.get_bool_or("score.recalibrate", false)
                             ? scoring::calibrate(model, examples)
                             : stats_from_config_or(config, &model);
            scorer = std::make_unique<scoring::CheckpointScorer>(model, stats);
        }
    }

    std::unique_ptr<gateway::LlmClient> client;
    if (needs_llm)
        client = std::make_unique<gateway::LlmClient>(provider_config_from(config));

    refine::EvalComponents components;
    components.scorer = scorer.get();
    components.client = client.get();
    components.templates = templates_from(config);
    components.coefficient_mode = refine::coefficient_mode_from_string(
        config.get_string_or("fusion.coefficient_mode", "sc"));
    components.note.slm_overall = config.get_double_or("fusion.slm_accuracy", 91.05);
    components.note.llm_overall = config.get_double_or("fusion.llm_accuracy", 88.91);

    std::ostringstream results;
    std::ostringstream slm_dump;
    size_t rows = 0;

    for (const auto& ex : examples) {
        std::string context = corpus::flatten_context(ex);
        auto score_one = [&](const std::string& response, const char* role,
                             size_t index) {
            auto fused =
                refine::dre_evaluate(components, variant, ex.id, context, response);

            json row;
            row["id"] = ex.id;
            row["role"] = role;
            row["index"] = index;
            row["response"] = response;
            row["variant"] = refine::fusion_mode_to_string(fused.mode);
            row["mode"] =
                refine::coefficient_mode_to_string(components.coefficient_mode);
            row["final"] = fused.final_score;
            row["scale"] = scale_name(fused.scale);
            if (fused.branch) row["branch"] = branch_name(*fused.branch);
            json terms = json::object();
            put_term(terms, "score_slm", fused.terms.score_slm);
            put_term(terms, "score_llm_raw", fused.terms.score_llm_raw);
            put_term(terms, "score_llm_unit", fused.terms.score_llm_unit);
            put_term(terms, "s_c", fused.terms.s_c);
            put_term(terms, "s_inf", fused.terms.s_inf);
            put_term(terms, "coefficient", fused.terms.coefficient);
            row["terms"] = terms;
            row["prompt_hash"] = fused.prompt_hash;
            results << row.dump() << "\n";
            ++rows;

            if (scorer) {
                auto slm = scorer->score(ex.id, context, response);
                json dump_row;
                dump_row["id"] = ex.id;
                dump_row["response"] = response;
                dump_row["d"] = slm.d;
                dump_row["s_d"] = slm.s_d;
                dump_row["s_p"] = slm.s_p;
                dump_row["score_slm"] = slm.score;
                slm_dump << dump_row.dump() << "\n";
            }
        };

        for (size_t k = 0; k < ex.positives.size(); ++k)
            score_one(ex.positives[k], "positive", k);
        for (size_t k = 0; k < ex.adversarial_negatives.size(); ++k)
            score_one(ex.adversarial_negatives[k], "adversarial", k);
        if (ex.random_negatives)
            for (size_t k = 0; k < ex.random_negatives->size(); ++k)
                score_one((*ex.random_negatives)[k], "random", k);
    }

    fs::path results_path = dir / "results.jsonl";
    util::atomic_write_file(results_path, results.str());
    if (scorer) util::atomic_write_file(dir / "scores_slm.jsonl", slm_dump.str());

    auto manifest = manifest_from(config, "score");
    manifest.checkpoint_hash = checkpoint_hash;
    write_manifest(manifest, dir / "manifest_score.json");

    std::cout << "scored " << rows << " (example, response) pairs with variant "
              << variant_name << "\n"
              << "results: " << results_path.string() << "\n";
    if (client)
        std::cout << "provider calls: " << client->provider_calls()
                  << ", cache hits: " << client->cache_hits() << "\n";
    return 0;
}

namespace {

struct ResultRow {
    std::string id;
    std::string role;
    double final_score = 0.0;
    std::optional<double> score_slm;
    std::string variant;
};

std::vector<ResultRow> load_results(const fs::path& path) {
    std::vector<ResultRow> rows;
    size_t line_no = 0;
    for (const auto& line : util::read_lines(path)) {
        ++line_no;
        if (util::trim(line).empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::exception& e) {
            throw MalformedRecord("results line " + std::to_string(line_no) + ": " +
                                  e.what());
        }
        ResultRow row;
        row.id = j.at("id").get<std::string>();
        row.role = j.value("role", "positive");
        row.final_score = j.at("final").get<double>();
        row.variant = j.value("variant", "unknown");
        if (j.contains("terms") && j["terms"].contains("score_slm"))
            row.score_slm = j["terms"]["score_slm"].get<double>();
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace

int cmd_eval(const Config& config) {
    auto dir = output_dir(config);
    fs::path results_path =
        config.get_string_or("eval.results", (dir / "results.jsonl").string());
    auto rows = load_results(results_path);
    if (rows.empty()) throw EmptyEvaluationSet("no result rows in " +
                                               results_path.string());

    auto examples = corpus::load_corpus(config.get_string_or(
        "eval.human_corpus", config.get_string("paths.corpus")));
    std::unordered_map<std::string, const corpus::DialogueExample*> by_id;
    for (const auto& ex : examples) by_id[ex.id] = &ex;

    // Correlation block: one row per example against its human score.
    std::unordered_map<std::string, int> rows_per_id;
    for (const auto& row : rows) ++rows_per_id[row.id];

    std::vector<double> metric_scores, human_scores;
    for (const auto& row : rows) {
        auto it = by_id.find(row.id);
        if (it == by_id.end())
            throw ConfigError("result id \"" + row.id +
                              "\" is missing from the human-score corpus");
        if (!it->second->human_score)
            throw ConfigError("example \"" + row.id + "\" has no human_score");
        if (rows_per_id[row.id] != 1)
            throw ConfigError("example \"" + row.id +
                              "\" has multiple scored responses; correlation "
                              "needs exactly one per example");
        metric_scores.push_back(row.final_score);
        human_scores.push_back(*it->second->human_score);
    }
    double pearson_r = stats::pearson(metric_scores, human_scores);
    double spearman_r = stats::spearman(metric_scores, human_scores);

    // Agreement: metric-vs-human classification with both mapped to
    // positive/negative at mid-scale.
    std::vector<int> metric_labels, human_labels;
    double mid = 0.0;
    for (const auto& row : rows) mid += row.final_score;
    mid /= static_cast<double>(rows.size());
    for (size_t i = 0; i < metric_scores.size(); ++i) {
        metric_labels.push_back(metric_scores[i] >= mid ? 1 : 0);
        human_labels.push_back(human_scores[i] >= 3.0 ? 1 : 0);
    }
    std::optional<double> kappa;
    try {
        kappa = stats::cohens_kappa(metric_labels, human_labels);
    } catch (const Error&) {
        // Degenerate labeling; the report simply omits kappa.
    }

    std::string variant = rows.front().variant;

    std::ostringstream md, csv;
    md << "# Evaluation report\n\n## Correlation with human judgements\n\n"
       << "| Metric | Pearson | Spearman |\n|---|---|---|\n"
       << "| " << variant << " | " << util::format_fixed(pearson_r, 3) << " | "
       << util::format_fixed(spearman_r, 3) << " |\n";
    csv << "table,metric,pearson,spearman\n"
        << "correlation," << variant << ',' << util::format_double(pearson_r)
        << ',' << util::format_double(spearman_r) << "\n";
    if (kappa) {
        md << "\nCohen's kappa (metric vs human, mid-scale split): "
           << util::format_fixed(*kappa, 3) << "\n";
        csv << "kappa," << variant << ',' << util::format_double(*kappa) << ",\n";
    }
    std::cout << "pearson " << util::format_fixed(pearson_r, 3) << ", spearman "
              << util::format_fixed(spearman_r, 3) << "\n";

    write_manifest(manifest_from(config, "eval"), dir / "manifest_eval.json");
    util::atomic_write_file(dir / "report.md", md.str());
    util::atomic_write_file(dir / "report.csv", csv.str());
    std::cout << "report: " << (dir / "report.md").string() << "\n";
    return 0;
}

int cmd_sweep(const Config& config) {
    auto dir = output_dir(config);
    fs::path results_path =
        config.get_string_or("eval.results", (dir / "results.jsonl").string());
    auto rows = load_results(results_path);
    if (rows.empty()) throw EmptyEvaluationSet("no result rows in " +
                                               results_path.string());

    // Sweep runs over the SLM composite when available, else the final.
    std::vector<double> scores;
    std::vector<scoring::ResponseClass> gold;
    for (const auto& row : rows) {
        if (row.role != "positive" && row.role != "adversarial") continue;
        scores.push_back(row.score_slm.value_or(row.final_score));
        gold.push_back(row.role == "positive" ? scoring::ResponseClass::kPositive
                                              : scoring::ResponseClass::kNegative);
    }
    if (scores.empty())
        throw EmptyEvaluationSet("results carry no positive/adversarial roles");

    std::vector<double> grid;
    double lo = config.get_double_or("sweep.grid_min", 0.1);
    double hi = config.get_double_or("sweep.grid_max", 1.9);
    double step = config.get_double_or("sweep.grid_step", 0.1);
    if (step <= 0.0) throw ConfigError("sweep.grid_step must be positive");
    int steps = static_cast<int>(std::llround((hi - lo) / step));
    for (int i = 0; i <= steps; ++i) {
        // Snap to the decimal lattice so accumulated float error does not
        // leak into thresholds ("0.30000000000000004").
        grid.push_back(std::stod(util::format_fixed(lo + i * step, 6)));
    }

    auto sweep = stats::threshold_sweep(scores, gold, grid);

    std::ostringstream csv;
    csv << "threshold,accuracy\n";
    for (const auto& point : sweep.curve)
        csv << util::format_double(point.threshold) << ','
            << util::format_double(point.accuracy) << "\n";
    util::atomic_write_file(dir / "sweep.csv", csv.str());
    util::atomic_write_file(dir / "sweep.svg", render_sweep_svg(sweep));

    write_manifest(manifest_from(config, "sweep"), dir / "manifest_sweep.json");

    std::cout << "best threshold " << util::format_double(sweep.best_threshold)
              << " with accuracy " << util::format_double(sweep.best_accuracy)
              << " over " << scores.size() << " responses\n"
              << "sweep: " << (dir / "sweep.csv").string() << "\n"
              << "plot: " << (dir / "sweep.svg").string() << "\n";
    return 0;
}

int cmd_export_embeddings(const Config& config) {
    auto dir = output_dir(config);
    auto examples = load_corpus_from(config, "paths.corpus");
    fs::path checkpoint = config.get_string("paths.checkpoint");
    auto model = training::load_checkpoint(checkpoint);

    std::string projection_name =
        config.get_string_or("export.projection", "none");
    stats::Projection projection;
    if (projection_name == "none") projection = stats::Projection::kNone;
    else if (projection_name == "linear2d") projection = stats::Projection::kLinear2d;
    else throw ConfigError("export.projection must be none or linear2d");

    fs::path out = dir / "embeddings.csv";
    stats::export_embeddings(model, examples, projection, out);

    auto manifest = manifest_from(config, "export-embeddings");
    manifest.checkpoint_hash = file_hash(checkpoint);
    write_manifest(manifest, dir / "manifest_export.json");

    std::cout << "embeddings: " << out.string() << "\n";
    return 0;
}

}  // namespace evaltool
