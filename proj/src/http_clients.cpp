#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "tale/http_clients.hpp"

#include <cstdlib>

namespace tale::providers {

nlohmann::json build_chat_body(const ChatRequest& req) {
    nlohmann::json messages = nlohmann::json::array();
    for (const auto& m : req.messages) {
        messages.push_back({{"role", to_string(m.role)}, {"content", m.text}});
    }
    return nlohmann::json{{"model", req.model_id},
                          {"messages", messages},
                          {"temperature", req.temperature},
                          {"max_tokens", req.max_output_tokens},
                          {"n", req.sample_count}};
}

ChatResponse parse_chat_body(const nlohmann::json& body, int expected_samples) {
    if (!body.is_object() || !body.contains("choices") || !body["choices"].is_array()) {
        throw ProviderError(ProviderErrorKind::malformed_payload,
                            "chat response missing 'choices' array");
    }
    ChatResponse resp;
    for (const auto& choice : body["choices"]) {
        if (!choice.contains("message") || !choice["message"].contains("content")) {
            throw ProviderError(ProviderErrorKind::malformed_payload,
                                "chat choice missing message content");
        }
        resp.completions.push_back(choice["message"]["content"].get<std::string>());
    }
    if (static_cast<int>(resp.completions.size()) != expected_samples) {
        throw ProviderError(ProviderErrorKind::malformed_payload,
                            "chat response returned " + std::to_string(resp.completions.size()) +
                                " choices, expected " + std::to_string(expected_samples));
    }
    if (!body.contains("usage") || !body["usage"].contains("prompt_tokens") ||
        !body["usage"].contains("completion_tokens")) {
        throw ProviderError(ProviderErrorKind::malformed_payload,
                            "chat response missing usage token counts");
    }
    resp.input_tokens = body["usage"]["prompt_tokens"].get<std::int64_t>();
    resp.output_tokens = body["usage"]["completion_tokens"].get<std::int64_t>();
    return resp;
}

nlohmann::json build_search_body(const SearchRequest& req) {
    return nlohmann::json{{"q", req.query_text}, {"num", req.top_k}};
}

SearchResultSet parse_search_body(const nlohmann::json& body, const SearchRequest& req) {
    if (!body.is_object()) {
        throw ProviderError(ProviderErrorKind::malformed_payload, "search response is not an object");
    }
    SearchResultSet out;
    out.query_echo = req.query_text;
    if (body.contains("organic") && body["organic"].is_array()) {
        for (const auto& entry : body["organic"]) {
            if (static_cast<int>(out.items.size()) >= req.top_k) break;
            SearchItem item;
            item.title = entry.value("title", "");
            item.snippet = entry.value("snippet", "");
            item.url = entry.value("link", "");
            if (item.title.empty() && item.snippet.empty()) continue;
            out.items.push_back(std::move(item));
        }
    }
    return out;
}

std::optional<std::string> env_value(const char* name) {
    const char* v = std::getenv(name);
    if (v == nullptr || *v == '\0') return std::nullopt;
    return std::string(v);
}

std::string require_env_key(std::initializer_list<const char*> names) {
    for (const char* name : names) {
        if (auto v = env_value(name)) return *v;
    }
    std::string wanted;
    for (const char* name : names) {
        if (!wanted.empty()) wanted += " or ";
        wanted += name;
    }
    throw ProviderError(ProviderErrorKind::configuration, "missing API key: set " + wanted);
}

namespace {

ProviderError http_error(const std::string& what, int status) {
    // 5xx and 429 are transient; other HTTP statuses are payload problems.
    if (status >= 500 || status == 429) {
        return ProviderError(ProviderErrorKind::transport,
                             what + " (HTTP " + std::to_string(status) + ")");
    }
    return ProviderError(ProviderErrorKind::malformed_payload,
                         what + " (HTTP " + std::to_string(status) + ")");
}

nlohmann::json post_json(const HttpClientConfig& config, const std::string& path,
                         const httplib::Headers& headers, const nlohmann::json& body) {
    httplib::Client client(config.base_url);
    client.set_connection_timeout(config.timeout_seconds);
    client.set_read_timeout(config.timeout_seconds);
    auto result = client.Post(path, headers, body.dump(), "application/json");
    if (!result) {
        throw ProviderError(ProviderErrorKind::transport,
                            "POST " + config.base_url + path +
                                " failed: " + httplib::to_string(result.error()));
    }
    if (result->status != 200) {
        throw http_error("POST " + path + " failed", result->status);
    }
    auto parsed = nlohmann::json::parse(result->body, nullptr, false);
    if (parsed.is_discarded()) {
        throw ProviderError(ProviderErrorKind::malformed_payload,
                            "response body is not valid JSON");
    }
    return parsed;
}

}  // namespace

ChatCompletionsClient::ChatCompletionsClient(HttpClientConfig config)
    : config_(std::move(config)) {
    if (config_.api_key.empty()) {
        throw ProviderError(ProviderErrorKind::configuration, "chat client: missing API key");
    }
}

HttpClientConfig ChatCompletionsClient::config_from_env() {
    HttpClientConfig config;
    config.api_key = require_env_key({"TALE_LLM_API_KEY", "OPENAI_API_KEY"});
    config.base_url = env_value("TALE_LLM_BASE_URL").value_or("https://api.openai.com/v1");
    return config;
}

ChatResponse ChatCompletionsClient::chat(const ChatRequest& req) {
    validate_request(req);
    httplib::Headers headers{{"Authorization", "Bearer " + config_.api_key}};
    auto body = post_json(config_, "/chat/completions", headers, build_chat_body(req));
    return parse_chat_body(body, req.sample_count);
}

SerperSearchClient::SerperSearchClient(HttpClientConfig config) : config_(std::move(config)) {
    if (config_.api_key.empty()) {
        throw ProviderError(ProviderErrorKind::configuration, "search client: missing API key");
    }
}

HttpClientConfig SerperSearchClient::config_from_env() {
    HttpClientConfig config;
    config.api_key = require_env_key({"TALE_SEARCH_API_KEY", "SERPER_API_KEY"});
    config.base_url = env_value("TALE_SEARCH_BASE_URL").value_or("https://google.serper.dev");
    return config;
}

SearchResultSet SerperSearchClient::search(const SearchRequest& req) {
    validate_request(req);
    httplib::Headers headers{{"X-API-KEY", config_.api_key}};
    auto body = post_json(config_, "/search", headers, build_search_body(req));
    return parse_search_body(body, req);
}

}  // namespace tale::providers
