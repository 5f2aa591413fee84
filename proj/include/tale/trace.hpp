#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace tale::trace {

inline constexpr int kSchemaVersion = 1;

/// One provider call: the full request (including the rendered prompt), the
/// raw response, and how the response parsed. `parse` is null for plain-text
/// steps.
struct TraceEvent {
    std::string kind;     // "chat" | "search"
    std::string purpose;  // e.g. "initial_query", "refine_query", "judge"
    int attempt = 1;      // > 1 for the re-prompt retry
    nlohmann::json request;
    nlohmann::json response;
    nlohmann::json parse;
};

void to_json(nlohmann::json& j, const TraceEvent& e);
void from_json(const nlohmann::json& j, TraceEvent& e);

/// Everything needed to audit or replay one evaluated item without touching
/// a provider. Serialized with sorted keys, so byte-identical inputs yield
/// byte-identical trace files.
struct EpisodeTrace {
    int schema_version = kSchemaVersion;
    std::string episode_id;
    std::string method;
    nlohmann::json config;  // method configuration echo
    std::string question;
    std::string candidate_answer;
    std::vector<TraceEvent> events;
    nlohmann::json memory;   // serialized memory entries (array)
    nlohmann::json verdict;  // {"decision","rationale"} or null
    std::vector<std::string> flags;
    nlohmann::json usage;  // per-item token/query deltas
    nlohmann::json extra;  // method-specific payload (e.g. reference scores)
    std::string error;     // empty when the episode completed
};

nlohmann::json to_json(const EpisodeTrace& t);
EpisodeTrace trace_from_json(const nlohmann::json& j);

void save_trace(const EpisodeTrace& t, const std::string& path);

/// Throws std::runtime_error on unreadable/truncated files and on a schema
/// version mismatch.
EpisodeTrace load_trace(const std::string& path);

}  // namespace tale::trace
