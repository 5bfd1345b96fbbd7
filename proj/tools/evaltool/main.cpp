#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "commands.hpp"
#include "dre/errors.hpp"
#include "dre/manifest.hpp"

namespace {

int exit_code_for(dre::ErrorClass cls) {
    switch (cls) {
        case dre::ErrorClass::kConfig: return 2;
        case dre::ErrorClass::kData: return 3;
        case dre::ErrorClass::kProvider: return 4;
        case dre::ErrorClass::kParse: return 5;
        case dre::ErrorClass::kInternal: return 1;
    }
    return 1;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"dialogue evaluation toolkit: trained scorer + LLM judge fusion"};
    app.set_version_flag("--version", dre::kToolVersion);
    app.require_subcommand(1);

    std::optional<std::string> config_path;
    std::vector<std::string> overrides;
    std::optional<std::string> output_dir;
    app.add_option("--config", config_path, "INI-style config file");
    app.add_option("--override", overrides,
                   "section.key=value override (repeatable, wins over the file)");
    app.add_option("--output-dir", output_dir, "shortcut for paths.output_dir");

    auto* train = app.add_subcommand("train", "train the scorer on a corpus");
    auto* augment =
        app.add_subcommand("augment", "generate 5+5 responses per context");
    auto* score = app.add_subcommand("score", "score a corpus with a variant");
    std::string variant = "dre";
    score->add_option("--variant", variant,
                      "slm_only|llm_only|slide|dre|non_dre|in_dre|ex_dre");
    auto* eval = app.add_subcommand("eval", "correlation/agreement report");
    auto* sweep = app.add_subcommand("sweep", "threshold-accuracy sweep");
    auto* export_cmd =
        app.add_subcommand("export-embeddings", "dump embeddings to CSV");
    for (auto* sub : {train, augment, score, eval, sweep, export_cmd})
        sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (output_dir) overrides.push_back("paths.output_dir=" + *output_dir);
        auto config = evaltool::Config::load(
            config_path ? std::optional<std::filesystem::path>(*config_path)
                        : std::nullopt,
            overrides);

        if (train->parsed()) return evaltool::cmd_train(config);
        if (augment->parsed()) return evaltool::cmd_augment(config);
        if (score->parsed()) return evaltool::cmd_score(config, variant);
        if (eval->parsed()) return evaltool::cmd_eval(config);
        if (sweep->parsed()) return evaltool::cmd_sweep(config);
        if (export_cmd->parsed()) return evaltool::cmd_export_embeddings(config);
    } catch (const dre::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.error_class());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
