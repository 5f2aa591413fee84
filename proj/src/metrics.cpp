#include "tale/metrics.hpp"

#include <algorithm>
#include <cctype>
#include <stdexcept>

namespace tale::metrics {

// ---------------------------------------------------------------------------
// Normalization
// ---------------------------------------------------------------------------

std::string NormalizedAnswer::joined() const {
    std::string out;
    for (const auto& token : tokens) {
        if (!out.empty()) out += ' ';
        out += token;
    }
    return out;
}

NormalizedAnswer normalize(std::string_view text) {
    // Lowercase, drop punctuation characters, split on whitespace, drop
    // English articles. Bytes outside ASCII pass through untouched.
    NormalizedAnswer out;
    std::string token;
    auto flush = [&] {
        if (!token.empty() && token != "a" && token != "an" && token != "the") {
            out.tokens.push_back(token);
        }
        token.clear();
    };
    for (char raw : text) {
        const unsigned char c = static_cast<unsigned char>(raw);
        if (std::isspace(c)) {
            flush();
        } else if (c < 0x80 && std::ispunct(c)) {
            // dropped entirely: "1,800" -> "1800"
        } else {
            token += static_cast<char>(std::tolower(c));
        }
    }
    flush();
    return out;
}

// ---------------------------------------------------------------------------
// Reference-based metrics
// ---------------------------------------------------------------------------

namespace {

void require_references(const std::vector<std::string>& references) {
    if (references.empty()) {
        throw std::invalid_argument("at least one reference answer is required");
    }
}

std::map<std::string, int> token_counts(const std::vector<std::string>& tokens) {
    std::map<std::string, int> counts;
    for (const auto& t : tokens) ++counts[t];
    return counts;
}

double f1_against(const NormalizedAnswer& answer, const NormalizedAnswer& reference) {
    if (answer.tokens.empty() && reference.tokens.empty()) return 1.0;
    if (answer.tokens.empty() || reference.tokens.empty()) return 0.0;
    const auto answer_counts = token_counts(answer.tokens);
    const auto reference_counts = token_counts(reference.tokens);
    int overlap = 0;
    for (const auto& [token, count] : answer_counts) {
        auto it = reference_counts.find(token);
        if (it != reference_counts.end()) overlap += std::min(count, it->second);
    }
    if (overlap == 0) return 0.0;
    const double precision = static_cast<double>(overlap) / static_cast<double>(answer.tokens.size());
    const double recall = static_cast<double>(overlap) / static_cast<double>(reference.tokens.size());
    return 2.0 * precision * recall / (precision + recall);
}

}  // namespace

int exact_match(const std::string& answer, const std::vector<std::string>& references) {
    require_references(references);
    const NormalizedAnswer normalized = normalize(answer);
    for (const auto& reference : references) {
        if (normalize(reference) == normalized) return 1;
    }
    return 0;
}

double token_f1(const std::string& answer, const std::vector<std::string>& references) {
    require_references(references);
    const NormalizedAnswer normalized = normalize(answer);
    double best = 0.0;
    for (const auto& reference : references) {
        best = std::max(best, f1_against(normalized, normalize(reference)));
    }
    return best;
}

int binarize_f1(double f1, double tau) {
    if (tau < 0.0 || tau > 1.0) throw std::invalid_argument("tau must lie in [0, 1]");
    return f1 > tau ? 1 : 0;
}

// ---------------------------------------------------------------------------
// Agreement statistics
// ---------------------------------------------------------------------------

namespace {

/// Items both raters labeled, as aligned (a, b) pairs in id order.
std::vector<std::pair<bool, bool>> aligned_pairs(const VerdictVector& a, const VerdictVector& b) {
    std::vector<std::pair<bool, bool>> pairs;
    for (const auto& [id, label] : a.labels) {
        auto it = b.labels.find(id);
        if (it != b.labels.end()) pairs.emplace_back(label, it->second);
    }
    return pairs;
}

void require_same_ids(const std::vector<VerdictVector>& raters) {
    for (std::size_t i = 1; i < raters.size(); ++i) {
        if (raters[i].labels.size() != raters[0].labels.size()) {
            throw std::invalid_argument("raters have misaligned item ids");
        }
        for (const auto& [id, _] : raters[0].labels) {
            if (!raters[i].labels.contains(id)) {
                throw std::invalid_argument("raters have misaligned item ids (missing '" + id +
                                            "')");
            }
        }
    }
}

}  // namespace

double accuracy(const VerdictVector& verdicts, const VerdictVector& gold) {
    const auto pairs = aligned_pairs(verdicts, gold);
    if (pairs.empty()) throw std::invalid_argument("no aligned items");
    int matches = 0;
    for (const auto& [v, g] : pairs) {
        if (v == g) ++matches;
    }
    return static_cast<double>(matches) / static_cast<double>(pairs.size());
}

VerdictVector majority_vote(const std::vector<VerdictVector>& raters) {
    if (raters.size() < 2) throw std::invalid_argument("majority vote needs at least two raters");
    require_same_ids(raters);
    VerdictVector out;
    out.rater_id = "majority";
    const double half = static_cast<double>(raters.size()) / 2.0;
    for (const auto& [id, _] : raters[0].labels) {
        int positives = 0;
        for (const auto& rater : raters) {
            if (rater.labels.at(id)) ++positives;
        }
        out.labels[id] = static_cast<double>(positives) > half;
    }
    return out;
}

double cohen_kappa(const VerdictVector& a, const VerdictVector& b) {
    const auto pairs = aligned_pairs(a, b);
    if (pairs.empty()) throw std::invalid_argument("no aligned items");
    const double n = static_cast<double>(pairs.size());
    int matches = 0;
    int a_true = 0;
    int b_true = 0;
    for (const auto& [x, y] : pairs) {
        if (x == y) ++matches;
        if (x) ++a_true;
        if (y) ++b_true;
    }
    const bool a_constant = a_true == 0 || a_true == static_cast<int>(pairs.size());
    const bool b_constant = b_true == 0 || b_true == static_cast<int>(pairs.size());
    if (a_constant && b_constant) {
        // The chance term degenerates; pin the two all-constant cases.
        return matches == static_cast<int>(pairs.size()) ? 1.0 : -1.0;
    }
    const double p_o = static_cast<double>(matches) / n;
    const double pa = static_cast<double>(a_true) / n;
    const double pb = static_cast<double>(b_true) / n;
    const double p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    return (p_o - p_e) / (1.0 - p_e);
}

double fleiss_kappa(const std::vector<std::vector<int>>& matrix) {
    if (matrix.empty()) throw std::invalid_argument("empty rating matrix");
    const std::size_t categories = matrix[0].size();
    if (categories < 1) throw std::invalid_argument("rating matrix has no categories");
    long long raters_per_item = 0;
    for (int count : matrix[0]) raters_per_item += count;
    if (raters_per_item < 2) throw std::invalid_argument("fleiss kappa needs >= 2 raters per item");

    const double n = static_cast<double>(raters_per_item);
    const double items = static_cast<double>(matrix.size());
    std::vector<long long> category_totals(categories, 0);
    double mean_item_agreement = 0.0;
    for (const auto& row : matrix) {
        if (row.size() != categories) throw std::invalid_argument("ragged rating matrix");
        long long row_sum = 0;
        double same_pairs = 0.0;
        for (std::size_t j = 0; j < categories; ++j) {
            if (row[j] < 0) throw std::invalid_argument("negative rating count");
            row_sum += row[j];
            same_pairs += static_cast<double>(row[j]) * (row[j] - 1);
            category_totals[j] += row[j];
        }
        if (row_sum != raters_per_item) {
            throw std::invalid_argument("rating matrix rows must share one rater count");
        }
        mean_item_agreement += same_pairs / (n * (n - 1.0));
    }
    mean_item_agreement /= items;

    double chance_agreement = 0.0;
    for (long long total : category_totals) {
        const double p = static_cast<double>(total) / (items * n);
        chance_agreement += p * p;
    }
    if (chance_agreement >= 1.0) return 1.0;  // all ratings in one category
    return (mean_item_agreement - chance_agreement) / (1.0 - chance_agreement);
}

double macro_f1(const VerdictVector& pred, const VerdictVector& gold) {
    const auto pairs = aligned_pairs(pred, gold);
    if (pairs.empty()) throw std::invalid_argument("no aligned items");
    double sum = 0.0;
    for (bool positive_class : {true, false}) {
        long long tp = 0;
        long long fp = 0;
        long long fn = 0;
        for (const auto& [p, g] : pairs) {
            const bool predicted = p == positive_class;
            const bool actual = g == positive_class;
            if (predicted && actual) ++tp;
            if (predicted && !actual) ++fp;
            if (!predicted && actual) ++fn;
        }
        const long long denom = 2 * tp + fp + fn;
        // Class absent from both sides: a vacuous perfect score.
        sum += denom == 0 ? 1.0 : 2.0 * static_cast<double>(tp) / static_cast<double>(denom);
    }
    return sum / 2.0;
}

double percent_agreement(const std::vector<VerdictVector>& raters) {
    if (raters.size() < 2) {
        throw std::invalid_argument("percent agreement needs at least two raters");
    }
    require_same_ids(raters);
    if (raters[0].labels.empty()) throw std::invalid_argument("no items");
    long long agreements = 0;
    long long comparisons = 0;
    for (const auto& [id, _] : raters[0].labels) {
        for (std::size_t i = 0; i < raters.size(); ++i) {
            for (std::size_t j = i + 1; j < raters.size(); ++j) {
                ++comparisons;
                if (raters[i].labels.at(id) == raters[j].labels.at(id)) ++agreements;
            }
        }
    }
    return 100.0 * static_cast<double>(agreements) / static_cast<double>(comparisons);
}

void to_json(nlohmann::json& j, const AgreementReport& r) {
    j = nlohmann::json{{"cohen_kappa", r.cohen_kappa},
                       {"macro_f1", r.macro_f1},
                       {"percent_agreement", r.percent_agreement},
                       {"n_items", r.n_items}};
    if (r.fleiss_kappa) {
        j["fleiss_kappa"] = *r.fleiss_kappa;
    } else {
        j["fleiss_kappa"] = nullptr;
    }
}

void from_json(const nlohmann::json& j, AgreementReport& r) {
    r.cohen_kappa = j.at("cohen_kappa").get<double>();
    r.macro_f1 = j.at("macro_f1").get<double>();
    r.percent_agreement = j.at("percent_agreement").get<double>();
    r.n_items = j.at("n_items").get<int>();
    if (j.contains("fleiss_kappa") && !j.at("fleiss_kappa").is_null()) {
        r.fleiss_kappa = j.at("fleiss_kappa").get<double>();
    } else {
        r.fleiss_kappa.reset();
    }
}

}  // namespace tale::metrics
