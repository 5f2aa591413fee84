#pragma once

#include <string>
#include <vector>

#include "tale/pipeline.hpp"

namespace tale::baselines {

enum class BaselineKind {
    no_tool,           // judgment from pre-trained knowledge only
    single_pass_tool,  // one query, one search, judge over raw snippets
    self_consistency,  // k sampled no-tool verdicts, majority
    multi_llm_vote,    // one no-tool verdict per voter model, majority
};

std::string to_string(BaselineKind k);
BaselineKind baseline_kind_from_string(const std::string& s);

struct BaselineConfig {
    BaselineKind kind = BaselineKind::no_tool;
    std::string model_id = "gpt-4o-mini";
    int sample_count = 10;        // self-consistency only
    double sc_temperature = 0.7;  // self-consistency only
    std::vector<std::string> voter_models;  // multi-LLM only; odd count
    int top_k = 3;  // single-pass only
    prompts::PromptVariant prompt_variant = prompts::PromptVariant::one_shot_cot;
    int max_output_tokens = 1024;

    void validate() const;  // throws std::invalid_argument
};

void to_json(nlohmann::json& j, const BaselineConfig& c);
void from_json(const nlohmann::json& j, BaselineConfig& c);

struct BaselineContext {
    providers::ChatProvider& chat;
    providers::SearchProvider& search;
    providers::UsageLedger& ledger;
    const prompts::PromptRegistry& registry;
    std::string item_id;
};

/// Single temperature-0 judgment without tools; never touches the search
/// provider. Contract failures degrade to a flagged False, as in the
/// pipeline judge.
pipeline::EpisodeResult judge_no_tool(const BaselineContext& ctx, const BaselineConfig& cfg,
                                      const std::string& question,
                                      const std::string& candidate_answer);

/// One generated query, one search, and the top snippets handed directly to
/// the judgment prompt; no summarize/reflect/refine steps. The returned
/// memory has exactly one entry.
pipeline::EpisodeResult judge_single_pass(const BaselineContext& ctx, const BaselineConfig& cfg,
                                          const std::string& question,
                                          const std::string& candidate_answer);

/// k verdicts sampled in one request at the configured temperature, decided
/// by simple majority. Unparseable samples are dropped; losing more than half
/// of them, or an even split, yields a flagged False.
pipeline::EpisodeResult judge_self_consistency(const BaselineContext& ctx,
                                               const BaselineConfig& cfg,
                                               const std::string& question,
                                               const std::string& candidate_answer);

/// Every voter model judges without tools at temperature 0; the verdict is
/// the majority vote. A failed voter abstains (flagged); remaining ties
/// resolve to False. The rationale concatenates per-voter explanations
/// labeled by model.
pipeline::EpisodeResult judge_multi_llm(const BaselineContext& ctx, const BaselineConfig& cfg,
                                        const std::string& question,
                                        const std::string& candidate_answer);

struct MajorityOutcome {
    bool decision = false;
    bool tie = false;
};

/// Strict majority over boolean votes; a tie reports decision=false, tie=true.
/// Depends only on vote counts, so it is invariant under permutation.
MajorityOutcome simple_majority(const std::vector<bool>& votes);

}  // namespace tale::baselines
