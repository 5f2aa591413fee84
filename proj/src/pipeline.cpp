#include "tale/pipeline.hpp"

#include <stdexcept>

namespace tale::pipeline {

using prompts::Parsed;
using prompts::PromptVariant;
using prompts::TemplateId;
using providers::ChatRequest;
using providers::ChatResponse;
using providers::SearchRequest;
using providers::SearchResultSet;

// ---------------------------------------------------------------------------
// Config and domain types
// ---------------------------------------------------------------------------

std::string to_string(QueryMode m) {
    return m == QueryMode::generated ? "generated" : "passthrough";
}

QueryMode query_mode_from_string(const std::string& s) {
    if (s == "generated") return QueryMode::generated;
    if (s == "passthrough") return QueryMode::passthrough;
    throw std::invalid_argument("unknown query mode: " + s);
}

void EpisodeConfig::validate() const {
    if (iterations < 1) throw std::invalid_argument("iterations must be >= 1");
    if (top_k < 1) throw std::invalid_argument("top_k must be >= 1");
    if (judge_model.empty()) throw std::invalid_argument("judge_model must be set");
    if (max_output_tokens < 1) throw std::invalid_argument("max_output_tokens must be >= 1");
}

void to_json(nlohmann::json& j, const EpisodeConfig& c) {
    j = nlohmann::json{{"iterations", c.iterations},
                       {"top_k", c.top_k},
                       {"judge_model", c.judge_model},
                       {"query_mode", to_string(c.query_mode)},
                       {"prompt_variant", prompts::to_string(c.prompt_variant)},
                       {"max_output_tokens", c.max_output_tokens},
                       {"early_stop_marker", c.early_stop_marker}};
}

void from_json(const nlohmann::json& j, EpisodeConfig& c) {
    c.iterations = j.at("iterations").get<int>();
    c.top_k = j.at("top_k").get<int>();
    c.judge_model = j.at("judge_model").get<std::string>();
    c.query_mode = query_mode_from_string(j.at("query_mode").get<std::string>());
    c.prompt_variant = prompts::variant_from_string(j.at("prompt_variant").get<std::string>());
    c.max_output_tokens = j.value("max_output_tokens", 1024);
    c.early_stop_marker = j.value("early_stop_marker", "");
}

void EpisodeMemory::append(MemoryEntry entry) {
    const int expected = static_cast<int>(entries_.size()) + 1;
    if (entry.iteration_index != expected) {
        throw std::invalid_argument("memory entry index " + std::to_string(entry.iteration_index) +
                                    " out of order (expected " + std::to_string(expected) + ")");
    }
    entries_.push_back(std::move(entry));
}

void to_json(nlohmann::json& j, const EvidenceSummary& e) {
    j = nlohmann::json{{"text", e.text}, {"source_count", e.source_count}};
}

void from_json(const nlohmann::json& j, EvidenceSummary& e) {
    e.text = j.at("text").get<std::string>();
    e.source_count = j.at("source_count").get<int>();
}

void to_json(nlohmann::json& j, const ReflectionNote& r) { j = nlohmann::json{{"text", r.text}}; }

void from_json(const nlohmann::json& j, ReflectionNote& r) {
    r.text = j.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const Verdict& v) {
    j = nlohmann::json{{"decision", v.decision}, {"rationale", v.rationale}};
}

void from_json(const nlohmann::json& j, Verdict& v) {
    v.decision = j.at("decision").get<bool>();
    v.rationale = j.at("rationale").get<std::string>();
}

void to_json(nlohmann::json& j, const MemoryEntry& e) {
    j = nlohmann::json{{"query", e.query},
                       {"evidence", e.evidence},
                       {"reflection", e.reflection},
                       {"iteration_index", e.iteration_index}};
}

void from_json(const nlohmann::json& j, MemoryEntry& e) {
    e.query = j.at("query").get<prompts::QueryProposal>();
    e.evidence = j.at("evidence").get<EvidenceSummary>();
    e.reflection = j.at("reflection").get<ReflectionNote>();
    e.iteration_index = j.at("iteration_index").get<int>();
}

// ---------------------------------------------------------------------------
// Formatting
// ---------------------------------------------------------------------------

std::string format_results_block(const SearchResultSet& results, std::size_t snippet_limit) {
    std::string out;
    for (const auto& item : results.items) {
        if (!out.empty()) out += '\n';
        std::string snippet = item.snippet;
        if (snippet.size() > snippet_limit) snippet.resize(snippet_limit);
        out += item.title;
        out += " — ";
        out += snippet;
        out += " (";
        out += item.url;
        out += ")";
    }
    return out;
}

std::string aggregate_with_headers(const std::vector<std::string>& texts) {
    std::string out;
    for (std::size_t i = 0; i < texts.size(); ++i) {
        if (!out.empty()) out += "\n\n";
        out += "[Iteration " + std::to_string(i + 1) + "] " + texts[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// StepRunner
// ---------------------------------------------------------------------------

StepRunner::StepRunner(providers::ChatProvider& chat, providers::UsageLedger& ledger,
                       const prompts::PromptRegistry& registry, std::string item_id,
                       std::string model_id, PromptVariant variant, int max_output_tokens,
                       std::vector<trace::TraceEvent>& events)
    : chat_(chat, ledger, item_id),
      registry_(registry),
      model_id_(std::move(model_id)),
      variant_(variant),
      max_output_tokens_(max_output_tokens),
      events_(events) {}

ChatResponse StepRunner::issue(const std::string& purpose, const std::string& prompt,
                               double temperature, int sample_count, int attempt,
                               nlohmann::json parse_info) {
    ChatRequest req;
    req.model_id = model_id_;
    req.messages = {{providers::Role::user, prompt}};
    req.temperature = temperature;
    req.max_output_tokens = max_output_tokens_;
    req.sample_count = sample_count;

    ChatResponse resp = chat_.chat(req);

    trace::TraceEvent event;
    event.kind = "chat";
    event.purpose = purpose;
    event.attempt = attempt;
    event.request = req;
    event.response = resp;
    event.parse = std::move(parse_info);
    events_.push_back(std::move(event));
    return resp;
}

void StepRunner::attach_parse_info(nlohmann::json info) {
    events_.back().parse = std::move(info);
}

std::string StepRunner::complete_text(const std::string& purpose, const std::string& prompt,
                                      double temperature) {
    return issue(purpose, prompt, temperature, 1, 1, nlohmann::json()).completions.front();
}

ChatResponse StepRunner::complete_many(const std::string& purpose, const std::string& prompt,
                                       double temperature, int sample_count) {
    return issue(purpose, prompt, temperature, sample_count, 1, nlohmann::json());
}

namespace {

template <typename T>
nlohmann::json parse_info_for(const Parsed<T>& parsed) {
    nlohmann::json info;
    info["ok"] = parsed.ok();
    if (parsed.ok()) {
        info["payload"] = *parsed.value;
    } else {
        info["error"] = {{"kind", prompts::to_string(parsed.error.kind)},
                         {"detail", parsed.error.detail}};
    }
    info["warnings"] = parsed.warnings;
    return info;
}

}  // namespace

template <typename T>
Parsed<T> StepRunner::contract_step(const std::string& purpose, TemplateId template_id,
                                    const std::map<std::string, std::string>& bindings,
                                    Parsed<T> (*parser)(const std::string&)) {
    const std::string prompt = registry_.render(template_id, variant_, bindings);
    std::string raw = issue(purpose, prompt, 0.0, 1, 1, nlohmann::json()).completions.front();
    Parsed<T> parsed = parser(raw);
    attach_parse_info(parse_info_for(parsed));
    if (parsed.ok()) return parsed;

    const std::string retry_prompt = prompt + "\n\n" + std::string(prompts::kJsonOnlyReminder);
    raw = issue(purpose, retry_prompt, 0.0, 1, 2, nlohmann::json()).completions.front();
    parsed = parser(raw);
    attach_parse_info(parse_info_for(parsed));
    return parsed;
}

template Parsed<prompts::QueryProposal> StepRunner::contract_step(
    const std::string&, TemplateId, const std::map<std::string, std::string>&,
    Parsed<prompts::QueryProposal> (*)(const std::string&));
template Parsed<prompts::ReflectionPayload> StepRunner::contract_step(
    const std::string&, TemplateId, const std::map<std::string, std::string>&,
    Parsed<prompts::ReflectionPayload> (*)(const std::string&));
template Parsed<prompts::JudgmentPayload> StepRunner::contract_step(
    const std::string&, TemplateId, const std::map<std::string, std::string>&,
    Parsed<prompts::JudgmentPayload> (*)(const std::string&));

// ---------------------------------------------------------------------------
// EpisodeEngine
// ---------------------------------------------------------------------------

EpisodeEngine::EpisodeEngine(providers::ChatProvider& chat, providers::SearchProvider& search,
                             providers::UsageLedger& ledger,
                             const prompts::PromptRegistry& registry, EpisodeConfig config,
                             std::string item_id, std::string question,
                             std::string candidate_answer)
    : raw_search_(search),
      ledger_(ledger),
      config_(std::move(config)),
      item_id_(std::move(item_id)),
      question_(std::move(question)),
      candidate_answer_(std::move(candidate_answer)),
      steps_(chat, ledger, registry, item_id_, config_.judge_model, config_.prompt_variant,
             config_.max_output_tokens, events_),
      search_(raw_search_, ledger, item_id_) {
    config_.validate();
    if (question_.empty()) throw std::invalid_argument("question must be non-empty");
}

prompts::QueryProposal EpisodeEngine::generate_initial_query() {
    auto parsed = steps_.contract_step("initial_query", TemplateId::query_generation,
                                       {{"question", question_}}, prompts::parse_query_proposal);
    for (const auto& w : parsed.warnings) flags_.push_back(w);
    if (!parsed.ok()) throw prompts::ContractViolation(parsed.error);
    return *parsed.value;
}

prompts::QueryProposal EpisodeEngine::refine_query(const EpisodeMemory& memory) {
    if (memory.empty()) {
        throw std::invalid_argument("refine_query requires a non-empty memory");
    }
    std::vector<std::string> evidences;
    std::vector<std::string> reflections;
    for (const auto& entry : memory.entries()) {
        evidences.push_back(entry.evidence.text);
        reflections.push_back(entry.reflection.text);
    }
    auto parsed = steps_.contract_step(
        "refine_query", TemplateId::query_refinement,
        {{"question", question_},
         {"current_query", memory.back().query.query},
         {"evidence_summary", aggregate_with_headers(evidences)},
         {"iterative_reflection", aggregate_with_headers(reflections)}},
        prompts::parse_query_proposal);
    for (const auto& w : parsed.warnings) flags_.push_back(w);
    if (!parsed.ok()) throw prompts::ContractViolation(parsed.error);
    return *parsed.value;
}

EvidenceSummary EpisodeEngine::summarize_evidence(const SearchResultSet& results) {
    if (results.items.empty()) {
        return EvidenceSummary{std::string(kNoResultsSentinel), 0};
    }
    const std::string raw_block = format_results_block(results);
    const std::string prompt = steps_.registry().render(
        TemplateId::evidence_summarization, steps_.variant(), {{"raw_results", raw_block}});
    const std::string summary = steps_.complete_text("summarize", prompt);
    return EvidenceSummary{summary, static_cast<int>(results.items.size())};
}

ReflectionNote EpisodeEngine::reflect(const EvidenceSummary& evidence) {
    auto parsed = steps_.contract_step("reflect", TemplateId::reflection,
                                       {{"question", question_},
                                        {"candidate_answer", candidate_answer_},
                                        {"evidence_summary", evidence.text}},
                                       prompts::parse_reflection);
    for (const auto& w : parsed.warnings) flags_.push_back(w);
    if (!parsed.ok()) throw prompts::ContractViolation(parsed.error);
    return ReflectionNote{parsed.value->reflection};
}

Verdict EpisodeEngine::judge(const std::string& evidence_total,
                             const std::string& reflection_total) {
    auto parsed = steps_.contract_step("judge", TemplateId::judgment,
                                       {{"question", question_},
                                        {"candidate_answer", candidate_answer_},
                                        {"evidence_summary", evidence_total},
                                        {"reflection", reflection_total}},
                                       prompts::parse_judgment);
    for (const auto& w : parsed.warnings) flags_.push_back(w);
    if (!parsed.ok()) {
        // Degrades to a flagged False rather than failing the episode.
        flags_.push_back(std::string(kFlagJudgmentUnparseable));
        return Verdict{false, std::string(kUnparseableJudgmentRationale)};
    }
    return Verdict{parsed.value->decision, parsed.value->explanation};
}

SearchResultSet EpisodeEngine::search_once(const std::string& query_text) {
    SearchRequest req;
    req.query_text = query_text;
    req.top_k = config_.top_k;
    SearchResultSet results = search_.search(req);

    trace::TraceEvent event;
    event.kind = "search";
    event.purpose = "search";
    event.request = req;
    event.response = results;
    events_.push_back(std::move(event));
    return results;
}

prompts::QueryProposal EpisodeEngine::plan_query(int iteration, const EpisodeMemory& memory) {
    if (config_.query_mode == QueryMode::passthrough) {
        return prompts::QueryProposal{question_, "input question",
                                      "query generation disabled; searching the question verbatim"};
    }
    return iteration == 1 ? generate_initial_query() : refine_query(memory);
}

EpisodeResult EpisodeEngine::run() {
    EpisodeResult result;
    result.memory = EpisodeMemory(item_id_);
    try {
        for (int i = 1; i <= config_.iterations; ++i) {
            prompts::QueryProposal query = plan_query(i, result.memory);
            SearchResultSet results = search_once(query.query);
            EvidenceSummary evidence = summarize_evidence(results);
            ReflectionNote reflection = reflect(evidence);
            result.memory.append(MemoryEntry{query, evidence, reflection, i});
            if (!config_.early_stop_marker.empty() &&
                reflection.text.find(config_.early_stop_marker) != std::string::npos) {
                flags_.push_back("early_stop");
                break;
            }
        }
        std::vector<std::string> evidences;
        std::vector<std::string> reflections;
        for (const auto& entry : result.memory.entries()) {
            evidences.push_back(entry.evidence.text);
            reflections.push_back(entry.reflection.text);
        }
        result.verdict =
            judge(aggregate_with_headers(evidences), aggregate_with_headers(reflections));
    } catch (const std::exception& ex) {
        result.errored = true;
        result.error = ex.what();
    }
    result.flags = flags_;
    result.events = events_;
    return result;
}

EpisodeResult run_episode(providers::ChatProvider& chat, providers::SearchProvider& search,
                          providers::UsageLedger& ledger, const prompts::PromptRegistry& registry,
                          const EpisodeConfig& config, const std::string& item_id,
                          const std::string& question, const std::string& candidate_answer) {
    EpisodeEngine engine(chat, search, ledger, registry, config, item_id, question,
                         candidate_answer);
    return engine.run();
}

}  // namespace tale::pipeline
