#include "tale/baselines.hpp"

#include <stdexcept>

namespace tale::baselines {

using pipeline::EpisodeResult;
using pipeline::EvidenceSummary;
using pipeline::MemoryEntry;
using pipeline::ReflectionNote;
using pipeline::StepRunner;
using pipeline::Verdict;
using prompts::JudgmentPayload;
using prompts::Parsed;
using prompts::TemplateId;

std::string to_string(BaselineKind k) {
    switch (k) {
        case BaselineKind::no_tool: return "no_tool";
        case BaselineKind::single_pass_tool: return "single_pass";
        case BaselineKind::self_consistency: return "self_consistency";
        case BaselineKind::multi_llm_vote: return "multi_llm";
    }
    return "no_tool";
}

BaselineKind baseline_kind_from_string(const std::string& s) {
    if (s == "no_tool") return BaselineKind::no_tool;
    if (s == "single_pass") return BaselineKind::single_pass_tool;
    if (s == "self_consistency") return BaselineKind::self_consistency;
    if (s == "multi_llm") return BaselineKind::multi_llm_vote;
    throw std::invalid_argument("unknown baseline kind: " + s);
}

void BaselineConfig::validate() const {
    if (sample_count < 1) throw std::invalid_argument("sample_count must be >= 1");
    if (kind == BaselineKind::multi_llm_vote) {
        if (voter_models.empty() || voter_models.size() % 2 == 0) {
            throw std::invalid_argument("multi-LLM voting needs an odd number of voter models");
        }
    } else if (model_id.empty()) {
        throw std::invalid_argument("baseline model_id must be set");
    }
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
}

void to_json(nlohmann::json& j, const BaselineConfig& c) {
    j = nlohmann::json{{"kind", to_string(c.kind)},
                       {"model_id", c.model_id},
                       {"sample_count", c.sample_count},
                       {"sc_temperature", c.sc_temperature},
                       {"voter_models", c.voter_models},
                       {"top_k", c.top_k},
                       {"prompt_variant", prompts::to_string(c.prompt_variant)},
                       {"max_output_tokens", c.max_output_tokens}};
}

void from_json(const nlohmann::json& j, BaselineConfig& c) {
    c.kind = baseline_kind_from_string(j.at("kind").get<std::string>());
    c.model_id = j.at("model_id").get<std::string>();
    c.sample_count = j.value("sample_count", 10);
    c.sc_temperature = j.value("sc_temperature", 0.7);
    c.voter_models = j.value("voter_models", std::vector<std::string>{});
    c.top_k = j.value("top_k", 3);
    c.prompt_variant =
        prompts::variant_from_string(j.value("prompt_variant", std::string("one_shot_cot")));
    c.max_output_tokens = j.value("max_output_tokens", 1024);
}

MajorityOutcome simple_majority(const std::vector<bool>& votes) {
    int positives = 0;
    for (bool v : votes) {
        if (v) ++positives;
    }
    const int negatives = static_cast<int>(votes.size()) - positives;
    if (positives == negatives) return {false, true};
    return {positives > negatives, false};
}

namespace {

Verdict degrade_unparseable(std::vector<std::string>& flags) {
    flags.push_back(std::string(pipeline::kFlagJudgmentUnparseable));
    return Verdict{false, std::string(pipeline::kUnparseableJudgmentRationale)};
}

/// Shared no-tool judgment step: temperature 0, one re-prompt retry, flagged
/// False on a final contract violation.
Verdict no_tool_verdict(StepRunner& steps, const std::string& purpose,
                        const std::string& question, const std::string& candidate_answer,
                        std::vector<std::string>& flags) {
    Parsed<JudgmentPayload> parsed = steps.contract_step(
        purpose, TemplateId::no_tool_judgment,
        {{"question", question}, {"candidate_answer", candidate_answer}}, prompts::parse_judgment);
    for (const auto& w : parsed.warnings) flags.push_back(w);
    if (!parsed.ok()) return degrade_unparseable(flags);
    return Verdict{parsed.value->decision, parsed.value->explanation};
}

}  // namespace

EpisodeResult judge_no_tool(const BaselineContext& ctx, const BaselineConfig& cfg,
                            const std::string& question, const std::string& candidate_answer) {
    cfg.validate();
    EpisodeResult result;
    result.memory = pipeline::EpisodeMemory(ctx.item_id);
    try {
        StepRunner steps(ctx.chat, ctx.ledger, ctx.registry, ctx.item_id, cfg.model_id,
                         cfg.prompt_variant, cfg.max_output_tokens, result.events);
        result.verdict = no_tool_verdict(steps, "no_tool_judge", question, candidate_answer,
                                         result.flags);
    } catch (const std::exception& ex) {
        result.errored = true;
        result.error = ex.what();
    }
    return result;
}

EpisodeResult judge_single_pass(const BaselineContext& ctx, const BaselineConfig& cfg,
                                const std::string& question,
                                const std::string& candidate_answer) {
    cfg.validate();
    EpisodeResult result;
    result.memory = pipeline::EpisodeMemory(ctx.item_id);
    try {
        StepRunner steps(ctx.chat, ctx.ledger, ctx.registry, ctx.item_id, cfg.model_id,
                         cfg.prompt_variant, cfg.max_output_tokens, result.events);

        auto proposal = steps.contract_step("initial_query", TemplateId::query_generation,
                                            {{"question", question}},
                                            prompts::parse_query_proposal);
        for (const auto& w : proposal.warnings) result.flags.push_back(w);
        if (!proposal.ok()) throw prompts::ContractViolation(proposal.error);

        providers::MeteredSearchProvider search(ctx.search, ctx.ledger, ctx.item_id);
        providers::SearchRequest req{proposal.value->query, cfg.top_k};
        providers::SearchResultSet results = search.search(req);
        trace::TraceEvent event;
        event.kind = "search";
        event.purpose = "search";
        event.request = req;
        event.response = results;
        result.events.push_back(std::move(event));

        // Snippets go straight to the judge; there is no summarization step.
        EvidenceSummary evidence;
        if (results.items.empty()) {
            evidence = EvidenceSummary{std::string(pipeline::kNoResultsSentinel), 0};
        } else {
            evidence = EvidenceSummary{pipeline::format_results_block(results),
                                       static_cast<int>(results.items.size())};
        }
        const std::string reflection_placeholder = "(single-pass mode: no reflection step)";
        result.memory.append(
            MemoryEntry{*proposal.value, evidence, ReflectionNote{reflection_placeholder}, 1});

        auto judged = steps.contract_step("judge", TemplateId::judgment,
                                          {{"question", question},
                                           {"candidate_answer", candidate_answer},
                                           {"evidence_summary", evidence.text},
                                           {"reflection", reflection_placeholder}},
                                          prompts::parse_judgment);
        for (const auto& w : judged.warnings) result.flags.push_back(w);
        result.verdict = judged.ok() ? Verdict{judged.value->decision, judged.value->explanation}
                                     : degrade_unparseable(result.flags);
    } catch (const std::exception& ex) {
        result.errored = true;
        result.error = ex.what();
    }
    return result;
}

EpisodeResult judge_self_consistency(const BaselineContext& ctx, const BaselineConfig& cfg,
                                     const std::string& question,
                                     const std::string& candidate_answer) {
    cfg.validate();
    EpisodeResult result;
    result.memory = pipeline::EpisodeMemory(ctx.item_id);
    try {
        StepRunner steps(ctx.chat, ctx.ledger, ctx.registry, ctx.item_id, cfg.model_id,
                         cfg.prompt_variant, cfg.max_output_tokens, result.events);
        const std::string prompt = ctx.registry.render(
            TemplateId::no_tool_judgment, cfg.prompt_variant,
            {{"question", question}, {"candidate_answer", candidate_answer}});
        providers::ChatResponse resp =
            steps.complete_many("sc_judge", prompt, cfg.sc_temperature, cfg.sample_count);

        std::vector<JudgmentPayload> samples;
        nlohmann::json sample_info = nlohmann::json::array();
        for (const auto& completion : resp.completions) {
            Parsed<JudgmentPayload> parsed = prompts::parse_judgment(completion);
            nlohmann::json info;
            info["ok"] = parsed.ok();
            if (parsed.ok()) {
                info["payload"] = *parsed.value;
                samples.push_back(*parsed.value);
            } else {
                info["error"] = {{"kind", prompts::to_string(parsed.error.kind)},
                                 {"detail", parsed.error.detail}};
            }
            sample_info.push_back(std::move(info));
        }
        result.events.back().parse = {{"samples", sample_info}};

        const int dropped = cfg.sample_count - static_cast<int>(samples.size());
        if (2 * dropped > cfg.sample_count) {
            result.flags.push_back("sc_unparseable_majority");
            result.verdict =
                Verdict{false, "more than half of the sampled verdicts were unparseable"};
        } else {
            std::vector<bool> votes;
            for (const auto& s : samples) votes.push_back(s.decision);
            MajorityOutcome majority = simple_majority(votes);
            if (majority.tie) {
                result.flags.push_back("sc_tie");
                result.verdict = Verdict{false, "self-consistency vote tied between True and False"};
            } else {
                std::string rationale;
                for (const auto& s : samples) {
                    if (s.decision == majority.decision) {
                        rationale = s.explanation;
                        break;
                    }
                }
                result.verdict = Verdict{majority.decision, rationale};
            }
        }
    } catch (const std::exception& ex) {
        result.errored = true;
        result.error = ex.what();
    }
    return result;
}

EpisodeResult judge_multi_llm(const BaselineContext& ctx, const BaselineConfig& cfg,
                              const std::string& question, const std::string& candidate_answer) {
    cfg.validate();
    EpisodeResult result;
    result.memory = pipeline::EpisodeMemory(ctx.item_id);
    std::vector<bool> votes;
    std::string rationale;
    for (const auto& voter : cfg.voter_models) {
        if (!rationale.empty()) rationale += '\n';
        try {
            StepRunner steps(ctx.chat, ctx.ledger, ctx.registry, ctx.item_id, voter,
                             cfg.prompt_variant, cfg.max_output_tokens, result.events);
            Parsed<JudgmentPayload> parsed = steps.contract_step(
                "voter_judge", TemplateId::no_tool_judgment,
                {{"question", question}, {"candidate_answer", candidate_answer}},
                prompts::parse_judgment);
            for (const auto& w : parsed.warnings) result.flags.push_back(w);
            if (!parsed.ok()) throw prompts::ContractViolation(parsed.error);
            votes.push_back(parsed.value->decision);
            rationale += "[" + voter + "] " + parsed.value->explanation;
        } catch (const std::exception&) {
            result.flags.push_back("voter_abstained:" + voter);
            rationale += "[" + voter + "] (abstained)";
        }
    }
    if (votes.empty()) {
        result.flags.push_back("all_voters_abstained");
        result.verdict = Verdict{false, rationale};
        return result;
    }
    MajorityOutcome majority = simple_majority(votes);
    if (majority.tie) result.flags.push_back("multi_llm_tie");
    result.verdict = Verdict{majority.tie ? false : majority.decision, rationale};
    return result;
}

}  // namespace tale::baselines
