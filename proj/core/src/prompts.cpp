#include "dre/prompts.hpp"

#include <nlohmann/json.hpp>

#include "dre/errors.hpp"
#include "dre/prompt_assets.hpp"
#include "dre/util.hpp"

namespace dre::gateway {

PromptTemplates PromptTemplates::builtin() {
    return {assets::kSlideTemplate, assets::kDreTemplate,
            assets::kGenerateTemplate, assets::kCheckTemplate};
}

PromptTemplates PromptTemplates::from_directory(const std::filesystem::path& dir) {
    PromptTemplates t;
    t.slide = util::read_file(dir / "slide.txt");
    t.dre = util::read_file(dir / "dre.txt");
    t.generate = util::read_file(dir / "generate.txt");
    t.check = util::read_file(dir / "check.txt");
    return t;
}

std::string PromptTemplates::hash_summary() const {
    nlohmann::json j;
    j["slide"] = util::sha256_hex(slide);
    j["dre"] = util::sha256_hex(dre);
    j["generate"] = util::sha256_hex(generate);
    j["check"] = util::sha256_hex(check);
    return j.dump();
}

std::string build_slide_prompt(const std::string& context,
                               const std::string& response,
                               const PromptTemplates& templates) {
    if (context.empty() || response.empty())
        throw EmptyText("slide prompt needs non-empty context and response");
    std::string prompt = util::replace_all(templates.slide, "{context}", context);
    return util::replace_all(std::move(prompt), "{response}", response);
}

std::string build_dre_prompt(const std::string& context,
                             const std::string& response,
                             const scoring::SlmScore& slm,
                             const AccuracyNote& note,
                             const PromptTemplates& templates) {
    if (context.empty() || response.empty())
        throw EmptyText("dre prompt needs non-empty context and response");
    double similarity = 1.0 - slm.s_d;
    std::string prompt = templates.dre;
    prompt = util::replace_all(std::move(prompt), "{context}", context);
    prompt = util::replace_all(std::move(prompt), "{response}", response);
    prompt = util::replace_all(std::move(prompt), "{probability}",
                               util::format_fixed(slm.s_p, 4));
    prompt = util::replace_all(std::move(prompt), "{similarity}",
                               util::format_fixed(similarity, 4));
    prompt = util::replace_all(std::move(prompt), "{sum}",
                               util::format_fixed(similarity + slm.s_p, 4));
    prompt = util::replace_all(std::move(prompt), "{slm_accuracy}",
                               util::format_fixed(note.slm_overall, 2));
    prompt = util::replace_all(std::move(prompt), "{llm_accuracy}",
                               util::format_fixed(note.llm_overall, 2));
    return prompt;
}

std::string build_generate_prompt(const std::string& context,
                                  const PromptTemplates& templates) {
    if (context.empty()) throw EmptyText("generate prompt needs a context");
    return util::replace_all(templates.generate, "{context}", context);
}

std::string build_check_prompt(const std::string& context,
                               const std::string& response,
                               scoring::ResponseClass response_class,
                               const PromptTemplates& templates) {
    if (context.empty() || response.empty())
        throw EmptyText("check prompt needs non-empty context and response");
    const bool positive = response_class == scoring::ResponseClass::kPositive;
    const char* class_name = positive ? "positive" : "adversarial negative";
    const char* class_definition =
        positive
            ? "A positive response is valid for the conversation context."
            : "An adversarial negative response has a significant word overlap "
              "with the conversation context but is still an irrelevant "
              "response, which may not have any relation to the context.";
    std::string prompt = templates.check;
    prompt = util::replace_all(std::move(prompt), "{class_name}", class_name);
    prompt = util::replace_all(std::move(prompt), "{class_definition}", class_definition);
    prompt = util::replace_all(std::move(prompt), "{context}", context);
    prompt = util::replace_all(std::move(prompt), "{response}", response);
    return prompt;
}

}  // namespace dre::gateway
