#include "dre/refine.hpp"

#include <algorithm>

#include "dre/errors.hpp"
#include "dre/util.hpp"

namespace dre::refine {

FusionMode fusion_mode_from_string(const std::string& name) {
    if (name == "slide") return FusionMode::kSlide;
    if (name == "dre") return FusionMode::kDre;
    if (name == "non_dre") return FusionMode::kNonDre;
    if (name == "in_dre") return FusionMode::kInDre;
    if (name == "ex_dre") return FusionMode::kExDre;
    if (name == "slm_only") return FusionMode::kSlmOnly;
    if (name == "llm_only") return FusionMode::kLlmOnly;
    throw ConfigError("unknown variant: " + name);
}

std::string fusion_mode_to_string(FusionMode mode) {
    switch (mode) {
        case FusionMode::kSlide: return "slide";
        case FusionMode::kDre: return "dre";
        case FusionMode::kNonDre: return "non_dre";
        case FusionMode::kInDre: return "in_dre";
        case FusionMode::kExDre: return "ex_dre";
        case FusionMode::kSlmOnly: return "slm_only";
        case FusionMode::kLlmOnly: return "llm_only";
    }
    return "unknown";
}

CoefficientMode coefficient_mode_from_string(const std::string& name) {
    if (name == "sc") return CoefficientMode::kScOnly;
    if (name == "c") return CoefficientMode::kScTimesInfluence;
    throw ConfigError("unknown coefficient mode: " + name);
}

std::string coefficient_mode_to_string(CoefficientMode mode) {
    return mode == CoefficientMode::kScOnly ? "sc" : "c";
}

FusedScore slide_fuse(double score_slm, double score_llm_raw) {
    if (score_slm < 0.0 || score_slm > 2.0)
        throw OutOfRange("score_slm " + util::format_double(score_slm) +
                         " outside [0, 2]");
    if (score_llm_raw < 0.0 || score_llm_raw > 5.0)
        throw OutOfRange("score_llm " + util::format_double(score_llm_raw) +
                         " outside [0, 5]");

    double slm_unit = std::min(score_slm, 1.0);
    double llm_unit = score_llm_raw / 5.0;

    FusedScore fused;
    fused.mode = FusionMode::kSlide;
    fused.scale = Scale::kUnit;
    fused.terms.score_slm = score_slm;
    fused.terms.score_llm_raw = score_llm_raw;
    fused.terms.score_llm_unit = llm_unit;

    if (score_slm >= 0.5) {
        fused.branch = SlideBranch::kSlm;
        fused.final_score = slm_unit;
    } else if (llm_unit < 0.5) {
        fused.branch = SlideBranch::kLlm;
        fused.final_score = llm_unit;
    } else {
        fused.branch = SlideBranch::kAverage;
        fused.final_score = (slm_unit + llm_unit) / 2.0;
    }
    return fused;
}

gateway::LlmJudgment interior_refine(const std::string& example_id,
                                     const std::string& context,
                                     const std::string& response,
                                     const scoring::SlmScore& slm,
                                     gateway::LlmClient& client,
                                     const gateway::AccuracyNote& note,
                                     const gateway::PromptTemplates& templates,
                                     std::string* prompt_hash) {
    gateway::LlmRequest request;
    request.prompt = gateway::build_dre_prompt(context, response, slm, note, templates);
    request.mode = gateway::RequestMode::kDre;
    request.example_id = example_id;
    if (prompt_hash) *prompt_hash = util::sha256_hex(request.prompt);
    try {
        return client.judge(request);
    } catch (const UnparseableJudgment& e) {
        throw UnparseableJudgment("example \"" + example_id + "\": " + e.what());
    }
}

FusedScore exterior_refine(const scoring::SlmScore& slm,
                           const gateway::LlmJudgment& judgment,
                           CoefficientMode mode) {
    double s_c = 1.0 - slm.s_d + slm.s_p;
    double coefficient = s_c;
    if (mode == CoefficientMode::kScTimesInfluence) {
        if (!judgment.s_inf)
            throw MissingInfluence(
                "coefficient mode \"c\" needs an influence degree");
        coefficient = s_c * *judgment.s_inf;
    }

    FusedScore fused;
    fused.mode = FusionMode::kDre;
    fused.scale = Scale::kLikert5;
    fused.final_score = std::clamp(coefficient * judgment.score_llm, 0.0, 5.0);
    fused.terms.score_slm = slm.score;
    fused.terms.score_llm_raw = judgment.score_llm;
    fused.terms.s_c = s_c;
    fused.terms.s_inf = judgment.s_inf;
    fused.terms.coefficient = coefficient;
    return fused;
}

namespace {

gateway::LlmJudgment judge_with_slide_prompt(const EvalComponents& components,
                                             const std::string& example_id,
                                             const std::string& context,
                                             const std::string& response,
                                             std::string* prompt_hash) {
    gateway::LlmRequest request;
    request.prompt =
        gateway::build_slide_prompt(context, response, components.templates);
    request.mode = gateway::RequestMode::kSlide;
    request.example_id = example_id;
    if (prompt_hash) *prompt_hash = util::sha256_hex(request.prompt);
    return components.client->judge(request);
}

}  // namespace

FusedScore dre_evaluate(const EvalComponents& components, FusionMode variant,
                        const std::string& example_id, const std::string& context,
                        const std::string& response) {
    const bool needs_slm =
        variant != FusionMode::kLlmOnly && variant != FusionMode::kNonDre;
    const bool needs_llm = variant != FusionMode::kSlmOnly;
    if (needs_slm && components.scorer == nullptr)
        throw ConfigError("variant " + fusion_mode_to_string(variant) +
                          " needs an SLM scorer");
    if (needs_llm && components.client == nullptr)
        throw ConfigError("variant " + fusion_mode_to_string(variant) +
                          " needs an LLM client");

    std::optional<scoring::SlmScore> slm;
    if (needs_slm) slm = components.scorer->score(example_id, context, response);

    FusedScore fused;
    std::string prompt_hash;

    switch (variant) {
        case FusionMode::kSlmOnly: {
            fused.mode = variant;
            fused.scale = Scale::kUnit;
            fused.final_score = slm->score / 2.0;
            fused.terms.score_slm = slm->score;
            break;
        }
        case FusionMode::kLlmOnly:
        case FusionMode::kNonDre: {
            auto judgment = judge_with_slide_prompt(components, example_id, context,
                                                    response, &prompt_hash);
            fused.mode = variant;
            fused.scale = Scale::kLikert5;
            fused.final_score = judgment.score_llm;
            fused.terms.score_llm_raw = judgment.score_llm;
            fused.terms.score_llm_unit = judgment.score_llm / 5.0;
            break;
        }
        case FusionMode::kSlide: {
            auto judgment = judge_with_slide_prompt(components, example_id, context,
                                                    response, &prompt_hash);
            fused = slide_fuse(slm->score, judgment.score_llm);
            break;
        }
        case FusionMode::kDre: {
            auto judgment =
                interior_refine(example_id, context, response, *slm,
                                *components.client, components.note,
                                components.templates, &prompt_hash);
            fused = exterior_refine(*slm, judgment, components.coefficient_mode);
            fused.mode = variant;
            break;
        }
        case FusionMode::kInDre: {
            auto judgment =
                interior_refine(example_id, context, response, *slm,
                                *components.client, components.note,
                                components.templates, &prompt_hash);
            fused.mode = variant;
            fused.scale = Scale::kLikert5;
            fused.final_score = judgment.score_llm;
            fused.terms.score_slm = slm->score;
            fused.terms.score_llm_raw = judgment.score_llm;
            fused.terms.s_inf = judgment.s_inf;
            break;
        }
        case FusionMode::kExDre: {
            auto judgment = judge_with_slide_prompt(components, example_id, context,
                                                    response, &prompt_hash);
            // No interior stage means no influence degree; refinement runs
            // unattenuated.
            judgment.s_inf = 1.0;
            fused = exterior_refine(*slm, judgment, components.coefficient_mode);
            fused.mode = variant;
            break;
        }
    }

    fused.prompt_hash = prompt_hash;
    return fused;
}

}  // namespace dre::refine
