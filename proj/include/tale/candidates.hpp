#pragma once

#include <set>
#include <string>
#include <vector>

#include "tale/pipeline.hpp"
#include "tale/prompts.hpp"
#include "tale/providers.hpp"

namespace tale::candidates {

/// A candidate model's answer: the full chain-of-thought text plus the short
/// answer extracted after the final-answer marker. extraction_flag is set
/// when the marker was absent and the full text had to stand in.
struct CandidateAnswer {
    std::string full_text;
    std::string final_answer;
    std::string model_id;
    bool extraction_flag = false;

    bool operator==(const CandidateAnswer&) const = default;
};

void to_json(nlohmann::json& j, const CandidateAnswer& c);
void from_json(const nlohmann::json& j, CandidateAnswer& c);

/// Builds a CandidateAnswer from raw model output (extraction included).
CandidateAnswer make_candidate(std::string full_text, std::string model_id);

/// One temperature-0 completion of the candidate prompt for `question`.
/// Provider errors propagate; the caller marks the item as errored.
CandidateAnswer generate_candidate(const std::string& question, const std::string& model_id,
                                   providers::ChatProvider& chat, providers::UsageLedger& ledger,
                                   const prompts::PromptRegistry& registry,
                                   const std::string& item_id,
                                   prompts::PromptVariant variant,
                                   std::vector<trace::TraceEvent>* events = nullptr);

struct LoadedCandidates {
    std::vector<std::pair<std::string, CandidateAnswer>> items;  // (item id, answer)
    std::vector<std::string> warnings;
};

/// Loads pre-generated answers from a JSONL file of
/// {"id": ..., "model_id": ..., "full_text": ...} records. Ids must exist in
/// `known_ids`; a dangling id is an error naming the id.
LoadedCandidates load_candidates(const std::string& path, const std::set<std::string>& known_ids);

void save_candidates(const std::vector<std::pair<std::string, CandidateAnswer>>& items,
                     const std::string& path);

}  // namespace tale::candidates
