#include "tale/trace.hpp"

#include <fstream>
#include <sstream>

namespace tale::trace {

void to_json(nlohmann::json& j, const TraceEvent& e) {
    j = nlohmann::json{{"kind", e.kind},         {"purpose", e.purpose},
                       {"attempt", e.attempt},   {"request", e.request},
                       {"response", e.response}, {"parse", e.parse}};
}

void from_json(const nlohmann::json& j, TraceEvent& e) {
    e.kind = j.at("kind").get<std::string>();
    e.purpose = j.at("purpose").get<std::string>();
    e.attempt = j.value("attempt", 1);
    e.request = j.at("request");
    e.response = j.at("response");
    e.parse = j.value("parse", nlohmann::json());
}

nlohmann::json to_json(const EpisodeTrace& t) {
    return nlohmann::json{
        {"schema_version", t.schema_version},
        {"episode_id", t.episode_id},
        {"method", t.method},
        {"config", t.config},
        {"question", t.question},
        {"candidate_answer", t.candidate_answer},
        {"events", t.events},
        {"memory", t.memory},
        {"verdict", t.verdict},
        {"flags", t.flags},
        {"usage", t.usage},
        {"extra", t.extra},
        {"error", t.error},
    };
}

EpisodeTrace trace_from_json(const nlohmann::json& j) {
    EpisodeTrace t;
    t.schema_version = j.at("schema_version").get<int>();
    if (t.schema_version != kSchemaVersion) {
        throw std::runtime_error("trace schema version " + std::to_string(t.schema_version) +
                                 " is not supported (expected " + std::to_string(kSchemaVersion) +
                                 ")");
    }
    t.episode_id = j.at("episode_id").get<std::string>();
    t.method = j.at("method").get<std::string>();
    t.config = j.at("config");
    t.question = j.at("question").get<std::string>();
    t.candidate_answer = j.at("candidate_answer").get<std::string>();
    t.events = j.at("events").get<std::vector<TraceEvent>>();
    t.memory = j.at("memory");
    t.verdict = j.at("verdict");
    t.flags = j.at("flags").get<std::vector<std::string>>();
    t.usage = j.at("usage");
    t.extra = j.value("extra", nlohmann::json());
    t.error = j.at("error").get<std::string>();
    return t;
}

void save_trace(const EpisodeTrace& t, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write trace file: " + path);
    out << to_json(t).dump(2) << '\n';
}

EpisodeTrace load_trace(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read trace file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    auto parsed = nlohmann::json::parse(buf.str(), nullptr, false);
    if (parsed.is_discarded()) {
        throw std::runtime_error("truncated or corrupt trace file: " + path);
    }
    return trace_from_json(parsed);
}

}  // namespace tale::trace
