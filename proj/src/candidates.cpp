#include "tale/candidates.hpp"

#include <fstream>

#include "tale/jsonl.hpp"

namespace tale::candidates {

void to_json(nlohmann::json& j, const CandidateAnswer& c) {
    j = nlohmann::json{{"full_text", c.full_text},
                       {"final_answer", c.final_answer},
                       {"model_id", c.model_id},
                       {"extraction_flag", c.extraction_flag}};
}

void from_json(const nlohmann::json& j, CandidateAnswer& c) {
    c.full_text = j.at("full_text").get<std::string>();
    c.final_answer = j.at("final_answer").get<std::string>();
    c.model_id = j.at("model_id").get<std::string>();
    c.extraction_flag = j.at("extraction_flag").get<bool>();
}

CandidateAnswer make_candidate(std::string full_text, std::string model_id) {
    CandidateAnswer out;
    auto extracted = prompts::extract_final_answer(full_text);
    out.full_text = std::move(full_text);
    out.final_answer = extracted.text;
    out.extraction_flag = !extracted.marker_found;
    out.model_id = std::move(model_id);
    return out;
}

CandidateAnswer generate_candidate(const std::string& question, const std::string& model_id,
                                   providers::ChatProvider& chat, providers::UsageLedger& ledger,
                                   const prompts::PromptRegistry& registry,
                                   const std::string& item_id, prompts::PromptVariant variant,
                                   std::vector<trace::TraceEvent>* events) {
    providers::MeteredChatProvider metered(chat, ledger, item_id);
    providers::ChatRequest req;
    req.model_id = model_id;
    req.messages = {{providers::Role::user,
                     registry.render(prompts::TemplateId::candidate_cot, variant,
                                     {{"question", question}})}};
    req.temperature = 0.0;
    providers::ChatResponse resp = metered.chat(req);

    if (events != nullptr) {
        trace::TraceEvent event;
        event.kind = "chat";
        event.purpose = "candidate";
        event.request = req;
        event.response = resp;
        events->push_back(std::move(event));
    }
    return make_candidate(resp.completions.front(), model_id);
}

LoadedCandidates load_candidates(const std::string& path,
                                 const std::set<std::string>& known_ids) {
    LoadedCandidates out;
    for_each_jsonl_record(path, [&](const nlohmann::json& record, std::size_t line) {
        if (!record.contains("id") || !record.contains("full_text")) {
            throw JsonlError(path, line, "candidate record needs 'id' and 'full_text'");
        }
        const std::string id = record.at("id").get<std::string>();
        if (!known_ids.contains(id)) {
            throw JsonlError(path, line, "candidate id '" + id + "' is not in the dataset");
        }
        out.items.emplace_back(
            id, make_candidate(record.at("full_text").get<std::string>(),
                               record.value("model_id", "unknown")));
    });
    if (out.items.empty()) {
        out.warnings.push_back("candidate file " + path + " contains no records");
    }
    return out;
}

void save_candidates(const std::vector<std::pair<std::string, CandidateAnswer>>& items,
                     const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& [id, answer] : items) {
        nlohmann::json j{{"id", id}, {"model_id", answer.model_id}, {"full_text", answer.full_text}};
        out << j.dump() << '\n';
    }
}

}  // namespace tale::candidates
