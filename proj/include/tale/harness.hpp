#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "tale/baselines.hpp"
#include "tale/candidates.hpp"
#include "tale/metrics.hpp"
#include "tale/money.hpp"
#include "tale/pipeline.hpp"
#include "tale/trace.hpp"

namespace tale::harness {

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

/// One QA instance. References feed the reference-based metrics only; they
/// are never handed to a judge prompt.
struct DatasetRecord {
    std::string id;
    std::string question;
    std::vector<std::string> references;  // non-empty
    std::map<std::string, std::string> metadata;

    bool operator==(const DatasetRecord&) const = default;
};

/// Loads a JSONL dataset of {"id","question","references",["metadata"]}
/// records. Schema violations and duplicate ids raise JsonlError with the
/// offending line number.
std::vector<DatasetRecord> load_dataset(const std::string& path);

/// Deterministic sampling without replacement: a seeded Fisher-Yates shuffle
/// (std::mt19937_64, index chosen by modulo) followed by take-first-n. The
/// generator and index rule are pinned so samples match across platforms.
std::vector<DatasetRecord> sample_records(const std::vector<DatasetRecord>& records,
                                          std::size_t n, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Run configuration
// ---------------------------------------------------------------------------

enum class Method { tale, no_tool, single_pass, self_consistency, multi_llm, em_f1 };

std::string to_string(Method m);
Method method_from_string(const std::string& s);

struct PriceTable {
    money::Rational input_per_million{3, 20};     // $0.15 per 1M input tokens
    money::Rational output_per_million{3, 5};     // $0.60 per 1M output tokens
    money::Rational search_per_thousand{3, 10};   // $0.30 per 1k queries

    void validate() const;  // throws on nonpositive prices
};

void to_json(nlohmann::json& j, const PriceTable& p);
void from_json(const nlohmann::json& j, PriceTable& p);

struct RunConfig {
    std::string dataset_path;
    Method method = Method::tale;
    pipeline::EpisodeConfig episode;    // tale
    baselines::BaselineConfig baseline; // baseline methods
    int sample_size = 300;
    std::uint64_t seed = 0;
    std::string candidates_path;   // pre-generated answers, or
    std::string candidate_model;   // generate answers with this model
    std::string annotations_path;  // optional human votes
    std::string prompts_dir;       // template overrides; empty = built-ins
    std::string output_dir;
    PriceTable prices;
    int workers = 1;
    double f1_tau = 0.5;  // binarization threshold for the f1 verdict vector
};

nlohmann::json run_config_to_json(const RunConfig& cfg);
RunConfig run_config_from_json(const nlohmann::json& j);

// ---------------------------------------------------------------------------
// Cost
// ---------------------------------------------------------------------------

struct CostReport {
    money::Rational llm_cost{0};
    money::Rational search_cost{0};
    money::Rational total_cost{0};     // llm + search
    money::Rational per_item_cost{0};  // total / n_items
    int n_items = 0;
    double wall_seconds = 0.0;

    /// Display strings round up at the shown precision: five decimals for
    /// per-item figures, two for run totals.
    std::string display_llm_per_item() const;
    std::string display_search_per_item() const;
    std::string display_per_item() const;
    std::string display_total() const;
};

/// Exact cost arithmetic from ledger totals and the price table.
CostReport cost_report(const providers::UsageSnapshot& usage, const PriceTable& prices,
                       int n_items, double wall_seconds);

nlohmann::json cost_report_to_json(const CostReport& report);

// ---------------------------------------------------------------------------
// Evaluation records
// ---------------------------------------------------------------------------

struct EvaluationRecord {
    std::string item_id;
    std::string method;
    candidates::CandidateAnswer candidate;
    std::optional<pipeline::Verdict> verdict;
    std::vector<std::string> flags;  // sorted, unique
    std::optional<int> em;           // em_f1 method only
    std::optional<double> f1;        // em_f1 method only
    providers::ItemUsage usage;
    std::string trace_ref;  // path relative to the run directory
    std::string error;      // empty when the item evaluated cleanly

    bool ok() const { return error.empty(); }
};

void to_json(nlohmann::json& j, const EvaluationRecord& r);
void from_json(const nlohmann::json& j, EvaluationRecord& r);

// ---------------------------------------------------------------------------
// Annotations
// ---------------------------------------------------------------------------

/// Human votes: JSONL of {"id": ..., "votes": {"<rater>": bool, ...}}.
/// Every item must carry the same rater set.
struct AnnotationSet {
    std::vector<metrics::VerdictVector> raters;
};

AnnotationSet load_annotations(const std::string& path);

/// Agreement between one evaluator vector and the annotation set: Cohen's
/// kappa and Macro-F1 against the human majority vote (or the single rater),
/// plus percent agreement and Fleiss' kappa across raters when there are at
/// least two.
metrics::AgreementReport agreement_against(const metrics::VerdictVector& evaluator,
                                           const AnnotationSet& annotations);

// ---------------------------------------------------------------------------
// Run / ablate / replay
// ---------------------------------------------------------------------------

struct RunProviders {
    providers::ChatProvider* chat = nullptr;
    providers::SearchProvider* search = nullptr;
};

struct RunOutput {
    std::vector<EvaluationRecord> records;
    CostReport cost;
    nlohmann::json report;  // null when no annotations were supplied
    std::string output_dir;
};

/// Evaluates the seeded sample with the configured method, persisting one
/// trace file per item plus records.jsonl, report.json, cost.json and
/// run_config.json under cfg.output_dir.
RunOutput run(const RunConfig& cfg, const RunProviders& run_providers);

/// One full run per N over a shared sample and seed; reports keyed by N in
/// input order. Writes <output_dir>/N=<n>/ per run plus ablation.json.
std::vector<std::pair<int, nlohmann::json>> ablate_iterations(const RunConfig& cfg,
                                                              const RunProviders& run_providers,
                                                              const std::vector<int>& n_values);

/// Rebuilds records and reports from the persisted traces of an earlier run,
/// re-deriving every verdict from the recorded raw responses. No provider is
/// ever constructed or called. Outputs are byte-identical to the original
/// run's records.jsonl and report.json.
RunOutput replay(const std::string& run_dir, const std::string& output_dir);

/// Re-derives one evaluation record from a persisted trace (the replay
/// primitive; exposed for tests).
EvaluationRecord derive_record_from_trace(const trace::EpisodeTrace& trace, double f1_tau);

// ---------------------------------------------------------------------------
// Trace audits
// ---------------------------------------------------------------------------

/// Violations of the temperature policy: every chat call must carry 0, except
/// self-consistency sampling which must carry the configured sc temperature.
std::vector<std::string> audit_temperatures(const trace::EpisodeTrace& trace,
                                            double sc_temperature = 0.7);

/// Violations of candidate-answer isolation: the initial-query prompt must
/// not contain the candidate answer as a substring.
std::vector<std::string> audit_candidate_isolation(const trace::EpisodeTrace& trace);

/// Violations of reference isolation: no rendered prompt may contain any of
/// the given reference strings.
std::vector<std::string> audit_no_references(const trace::EpisodeTrace& trace,
                                             const std::vector<std::string>& references);

}  // namespace tale::harness
