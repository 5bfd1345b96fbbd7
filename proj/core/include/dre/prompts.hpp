#pragma once

#include <filesystem>
#include <string>

#include "dre/scoring.hpp"

namespace dre::gateway {

// Classification accuracies quoted in the DRE prompt's Interpretation
// section, as percentages. Defaults come from the reference report shipped
// with the tool; override from a locally computed accuracy report.
struct AccuracyNote {
    double slm_overall = 91.05;
    double llm_overall = 88.91;
    std::string source = "reference";
};

// The four prompt templates. Built-in copies are embedded at compile time
// from the asset files; from_directory() lets a run pin its own set.
struct PromptTemplates {
    std::string slide;
    std::string dre;
    std::string generate;
    std::string check;

    static PromptTemplates builtin();
    // Reads slide.txt / dre.txt / generate.txt / check.txt.
    static PromptTemplates from_directory(const std::filesystem::path& dir);

    // sha256 of each template, keyed by name; recorded in run manifests.
    std::string hash_summary() const;
};

std::string build_slide_prompt(const std::string& context,
                               const std::string& response,
                               const PromptTemplates& templates);

// Auxiliary Information / Interpretation / Task. The prompt carries the
// SLM's positive probability, the calibrated similarity (1 - s_d) and their
// sum, plus the accuracy note, and asks for an influence degree in [0, 1]
// and an overall score in [0, 5] on labeled lines.
std::string build_dre_prompt(const std::string& context,
                             const std::string& response,
                             const scoring::SlmScore& slm,
                             const AccuracyNote& note,
                             const PromptTemplates& templates);

std::string build_generate_prompt(const std::string& context,
                                  const PromptTemplates& templates);

std::string build_check_prompt(const std::string& context,
                               const std::string& response,
                               scoring::ResponseClass response_class,
                               const PromptTemplates& templates);

}  // namespace dre::gateway
