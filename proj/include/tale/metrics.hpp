#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

namespace tale::metrics {

// Pure functions over immutable inputs; everything here is safe to call
// concurrently.

// ---------------------------------------------------------------------------
// Answer normalization and reference-based metrics
// ---------------------------------------------------------------------------

/// Normalized answer text: lowercased, punctuation stripped, English articles
/// (a/an/the) removed, whitespace-tokenized. Idempotent.
struct NormalizedAnswer {
    std::vector<std::string> tokens;

    std::string joined() const;
    bool operator==(const NormalizedAnswer&) const = default;
};

NormalizedAnswer normalize(std::string_view text);

/// 1 iff the normalized answer equals any normalized reference.
int exact_match(const std::string& answer, const std::vector<std::string>& references);

/// Max over references of the harmonic mean of precision and recall on token
/// multisets. Two empty token lists score 1; exactly one empty scores 0.
double token_f1(const std::string& answer, const std::vector<std::string>& references);

/// 1 iff f1 > tau (strictly; a tie maps to 0).
int binarize_f1(double f1, double tau = 0.5);

// ---------------------------------------------------------------------------
// Verdict vectors and agreement statistics
// ---------------------------------------------------------------------------

/// Boolean labels aligned to item ids, one rater's view. Alignment between
/// raters is always by id, never by position.
struct VerdictVector {
    std::string rater_id;
    std::map<std::string, bool> labels;

    void set(const std::string& item_id, bool value) { labels[item_id] = value; }
    std::size_t size() const { return labels.size(); }
};

/// Fraction of aligned items on which the two vectors agree.
double accuracy(const VerdictVector& verdicts, const VerdictVector& gold);

/// Per item: 1 iff positive votes strictly exceed half the raters (an even
/// split yields 0). All raters must cover the same id set.
VerdictVector majority_vote(const std::vector<VerdictVector>& raters);

/// Chance-corrected two-rater agreement, kappa = (P_o - P_e) / (1 - P_e),
/// over the id intersection. Degenerate conventions: both raters constant and
/// equal -> 1; both constant and unequal -> -1.
double cohen_kappa(const VerdictVector& a, const VerdictVector& b);

/// Multi-rater chance-corrected agreement over an items x category-counts
/// matrix. Every row must sum to the same rater count n >= 2. Returns 1 when
/// every rating falls in a single category.
double fleiss_kappa(const std::vector<std::vector<int>>& matrix);

/// Unweighted mean of per-class F1 over the True and False classes. A class
/// absent from both gold and prediction contributes F1 = 1.
double macro_f1(const VerdictVector& pred, const VerdictVector& gold);

/// Agreeing rater pairs over all pairwise comparisons, as a percentage.
double percent_agreement(const std::vector<VerdictVector>& raters);

// ---------------------------------------------------------------------------
// Report bundle
// ---------------------------------------------------------------------------

struct AgreementReport {
    double cohen_kappa = 0.0;          // in [-1, 1]
    double macro_f1 = 0.0;             // in [0, 1]
    double percent_agreement = 0.0;    // in [0, 100]
    std::optional<double> fleiss_kappa;  // multi-rater annotation sets only
    int n_items = 0;

    bool operator==(const AgreementReport&) const = default;
};

void to_json(nlohmann::json& j, const AgreementReport& r);
void from_json(const nlohmann::json& j, AgreementReport& r);

}  // namespace tale::metrics
