#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tale/prompts.hpp"
#include "tale/providers.hpp"
#include "tale/trace.hpp"

namespace tale::pipeline {

// ---------------------------------------------------------------------------
// Domain types
// ---------------------------------------------------------------------------

enum class QueryMode {
    generated,    // iteration 1 generates a query, later iterations refine it
    passthrough,  // every search uses the raw question verbatim
};

std::string to_string(QueryMode m);
QueryMode query_mode_from_string(const std::string& s);

struct EpisodeConfig {
    int iterations = 3;
    int top_k = 3;
    std::string judge_model = "gpt-4o-mini";
    QueryMode query_mode = QueryMode::generated;
    prompts::PromptVariant prompt_variant = prompts::PromptVariant::one_shot_cot;
    int max_output_tokens = 1024;
    // Extension, off by default: stop iterating once a reflection contains
    // this marker. The default loop always runs all N iterations.
    std::string early_stop_marker;

    void validate() const;  // throws std::invalid_argument
};

void to_json(nlohmann::json& j, const EpisodeConfig& c);
void from_json(const nlohmann::json& j, EpisodeConfig& c);

struct EvidenceSummary {
    std::string text;
    int source_count = 0;

    bool operator==(const EvidenceSummary&) const = default;
};

struct ReflectionNote {
    std::string text;

    bool operator==(const ReflectionNote&) const = default;
};

struct Verdict {
    bool decision = false;
    std::string rationale;

    bool operator==(const Verdict&) const = default;
};

struct MemoryEntry {
    prompts::QueryProposal query;
    EvidenceSummary evidence;
    ReflectionNote reflection;
    int iteration_index = 1;

    bool operator==(const MemoryEntry&) const = default;
};

/// Append-only record of (query, evidence, reflection) triples within one
/// episode. Iteration indices are dense, starting at 1.
class EpisodeMemory {
public:
    EpisodeMemory() = default;
    explicit EpisodeMemory(std::string episode_id) : episode_id_(std::move(episode_id)) {}

    void append(MemoryEntry entry);  // throws on an out-of-order index

    const std::vector<MemoryEntry>& entries() const { return entries_; }
    const std::string& episode_id() const { return episode_id_; }
    bool empty() const { return entries_.empty(); }
    std::size_t size() const { return entries_.size(); }
    const MemoryEntry& back() const { return entries_.back(); }

private:
    std::string episode_id_;
    std::vector<MemoryEntry> entries_;
};

void to_json(nlohmann::json& j, const EvidenceSummary& e);
void from_json(const nlohmann::json& j, EvidenceSummary& e);
void to_json(nlohmann::json& j, const ReflectionNote& r);
void from_json(const nlohmann::json& j, ReflectionNote& r);
void to_json(nlohmann::json& j, const Verdict& v);
void from_json(const nlohmann::json& j, Verdict& v);
void to_json(nlohmann::json& j, const MemoryEntry& e);
void from_json(const nlohmann::json& j, MemoryEntry& e);

inline constexpr std::string_view kNoResultsSentinel = "no results found";
inline constexpr std::string_view kUnparseableJudgmentRationale = "judgment unparseable";

// Flags recorded on episode results / traces.
inline constexpr std::string_view kFlagJudgmentUnparseable = "judgment_unparseable";

// ---------------------------------------------------------------------------
// Formatting helpers
// ---------------------------------------------------------------------------

/// One "Title — Snippet (URL)" line per result, in rank order. Snippets are
/// truncated to `snippet_limit` characters to bound prompt growth.
std::string format_results_block(const providers::SearchResultSet& results,
                                 std::size_t snippet_limit = 1000);

/// Order-preserving concatenation with provenance headers:
/// "[Iteration 1] ..." blocks joined by blank lines.
std::string aggregate_with_headers(const std::vector<std::string>& texts);

// ---------------------------------------------------------------------------
// Episode outcome
// ---------------------------------------------------------------------------

struct EpisodeResult {
    Verdict verdict;  // meaningful only when !errored
    EpisodeMemory memory;
    std::vector<std::string> flags;
    std::vector<trace::TraceEvent> events;
    bool errored = false;
    std::string error;
};

// ---------------------------------------------------------------------------
// Shared LLM step machinery
// ---------------------------------------------------------------------------

/// Runs individual LLM steps against a model: renders a template, issues the
/// chat call (metered under one item id), records a trace event, and applies
/// the one re-prompt retry on a JSON contract violation. Used by the episode
/// engine and by the baseline judges.
class StepRunner {
public:
    StepRunner(providers::ChatProvider& chat, providers::UsageLedger& ledger,
               const prompts::PromptRegistry& registry, std::string item_id,
               std::string model_id, prompts::PromptVariant variant, int max_output_tokens,
               std::vector<trace::TraceEvent>& events);

    /// Plain-text completion (no output contract).
    std::string complete_text(const std::string& purpose, const std::string& prompt,
                              double temperature = 0.0);

    /// k sampled completions in one request; no contract retry.
    providers::ChatResponse complete_many(const std::string& purpose, const std::string& prompt,
                                          double temperature, int sample_count);

    /// Renders and runs a JSON-contract step with one re-prompt retry.
    template <typename T>
    prompts::Parsed<T> contract_step(const std::string& purpose, prompts::TemplateId template_id,
                                     const std::map<std::string, std::string>& bindings,
                                     prompts::Parsed<T> (*parser)(const std::string&));

    const prompts::PromptRegistry& registry() const { return registry_; }
    prompts::PromptVariant variant() const { return variant_; }
    const std::string& model_id() const { return model_id_; }

private:
    providers::ChatResponse issue(const std::string& purpose, const std::string& prompt,
                                  double temperature, int sample_count, int attempt,
                                  nlohmann::json parse_info);
    void attach_parse_info(nlohmann::json info);

    providers::MeteredChatProvider chat_;
    const prompts::PromptRegistry& registry_;
    std::string model_id_;
    prompts::PromptVariant variant_;
    int max_output_tokens_;
    std::vector<trace::TraceEvent>& events_;
};

// ---------------------------------------------------------------------------
// Episode engine
// ---------------------------------------------------------------------------

/// Evaluates one (question, candidate answer) pair: an initial query, an
/// N-iteration retrieve/summarize/reflect loop over append-only memory, and a
/// single final judgment over the aggregated evidence and reflections.
///
/// The engine is a per-episode object: construct, call run() once (or drive
/// the individual steps directly), then read the result. Distinct episodes
/// are independent and may run concurrently.
class EpisodeEngine {
public:
    EpisodeEngine(providers::ChatProvider& chat, providers::SearchProvider& search,
                  providers::UsageLedger& ledger, const prompts::PromptRegistry& registry,
                  EpisodeConfig config, std::string item_id, std::string question,
                  std::string candidate_answer);

    /// Builds the opening query from the question alone. The candidate answer
    /// never reaches this step's bindings.
    prompts::QueryProposal generate_initial_query();

    /// Builds the next query from accumulated memory (question, latest query,
    /// aggregated evidence, aggregated reflections).
    prompts::QueryProposal refine_query(const EpisodeMemory& memory);

    /// Condenses one search result set into an evidence summary. An empty
    /// result set short-circuits to the sentinel text without an LLM call.
    EvidenceSummary summarize_evidence(const providers::SearchResultSet& results);

    /// Relates one evidence summary to the question and candidate answer.
    ReflectionNote reflect(const EvidenceSummary& evidence);

    /// Final decision over the aggregated evidence and reflections. An output
    /// that stays unparseable after the retry degrades to a flagged False.
    Verdict judge(const std::string& evidence_total, const std::string& reflection_total);

    providers::SearchResultSet search_once(const std::string& query_text);

    /// The full loop. Any unrecovered step error aborts the episode; the
    /// partial memory and events survive in the errored result.
    EpisodeResult run();

    const std::vector<trace::TraceEvent>& events() const { return events_; }
    std::vector<std::string>& flags() { return flags_; }

private:
    prompts::QueryProposal plan_query(int iteration, const EpisodeMemory& memory);

    providers::SearchProvider& raw_search_;
    providers::UsageLedger& ledger_;
    EpisodeConfig config_;
    std::string item_id_;
    std::string question_;
    std::string candidate_answer_;
    std::vector<trace::TraceEvent> events_;
    std::vector<std::string> flags_;
    StepRunner steps_;
    providers::MeteredSearchProvider search_;
};

/// Convenience wrapper: one engine, one run.
EpisodeResult run_episode(providers::ChatProvider& chat, providers::SearchProvider& search,
                          providers::UsageLedger& ledger, const prompts::PromptRegistry& registry,
                          const EpisodeConfig& config, const std::string& item_id,
                          const std::string& question, const std::string& candidate_answer);

}  // namespace tale::pipeline
