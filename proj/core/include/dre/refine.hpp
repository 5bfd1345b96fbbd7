#pragma once

#include <optional>
#include <string>

#include "dre/llm_gateway.hpp"
#include "dre/scoring.hpp"

namespace dre::refine {

enum class FusionMode {
    kSlide,
    kDre,
    kNonDre,
    kInDre,
    kExDre,
    kSlmOnly,
    kLlmOnly,
};

FusionMode fusion_mode_from_string(const std::string& name);
std::string fusion_mode_to_string(FusionMode mode);

enum class Scale { kUnit, kLikert5 };

enum class SlideBranch { kSlm, kLlm, kAverage };

// The printed final formula multiplies the LLM score by s_c alone; the
// coefficient definition also folds in the influence degree. Both are
// supported; kScOnly is the default.
enum class CoefficientMode { kScOnly, kScTimesInfluence };

CoefficientMode coefficient_mode_from_string(const std::string& name);
std::string coefficient_mode_to_string(CoefficientMode mode);

struct FusedScore {
    double final_score = 0.0;
    Scale scale = Scale::kUnit;
    FusionMode mode = FusionMode::kSlide;
    std::optional<SlideBranch> branch;  // SLIDE only

    // Every intermediate term, for ablation tables and audit.
    struct Terms {
        std::optional<double> score_slm;
        std::optional<double> score_llm_raw;
        std::optional<double> score_llm_unit;
        std::optional<double> s_c;
        std::optional<double> s_inf;
        std::optional<double> coefficient;
    } terms;

    // sha256 of the filled prompt behind score_llm_raw, when one was sent.
    std::string prompt_hash;
};

// Piecewise integration on a shared unit scale: the raw LLM score is
// divided by 5 and the SLM score capped at 1 so the 0.5 threshold means the
// same thing on both sides. Branches evaluate in order; first match wins:
//   1. score_slm >= 0.5        -> min(score_slm, 1), branch slm
//   2. score_llm/5 < 0.5       -> score_llm/5, branch llm
//   3. otherwise               -> average of the two, branch average
FusedScore slide_fuse(double score_slm, double score_llm_raw);

// Builds the three-section auxiliary prompt from the SLM evidence, queries
// the judge, and parses (overall score, influence degree).
gateway::LlmJudgment interior_refine(const std::string& example_id,
                                     const std::string& context,
                                     const std::string& response,
                                     const scoring::SlmScore& slm,
                                     gateway::LlmClient& client,
                                     const gateway::AccuracyNote& note,
                                     const gateway::PromptTemplates& templates,
                                     std::string* prompt_hash = nullptr);

// final = clamp(coefficient * score_llm, 0, 5) with
// coefficient = s_c (kScOnly) or s_c * s_inf (kScTimesInfluence), where
// s_c = 1 - s_d + s_p.
FusedScore exterior_refine(const scoring::SlmScore& slm,
                           const gateway::LlmJudgment& judgment,
                           CoefficientMode mode);

// Everything a variant evaluation may need. `scorer` may be null for
// llm_only / non_dre; `client` may be null for slm_only.
struct EvalComponents {
    scoring::SlmScorer* scorer = nullptr;
    gateway::LlmClient* client = nullptr;
    gateway::AccuracyNote note;
    gateway::PromptTemplates templates = gateway::PromptTemplates::builtin();
    CoefficientMode coefficient_mode = CoefficientMode::kScOnly;
};

// One (example, response) evaluation under any variant:
//   slm_only: score_slm / 2 on the unit scale, no LLM call
//   llm_only / non_dre: plain judge-prompt score, no SLM anywhere
//   slide:    slide_fuse(score_slm, score_llm)
//   dre:      interior_refine then exterior_refine
//   in_dre:   interior_refine only, score kept unrefined
//   ex_dre:   plain judge-prompt score, exterior refinement with s_inf = 1
FusedScore dre_evaluate(const EvalComponents& components, FusionMode variant,
                        const std::string& example_id, const std::string& context,
                        const std::string& response);

}  // namespace dre::refine
