#pragma once

#include <optional>
#include <string>

#include "tale/providers.hpp"

namespace tale::providers {

// Request/response translation is split out of the transport so the wire
// format can be tested without a network.

/// Chat-completions request body:
///   {"model": ..., "messages": [{"role","content"}...], "temperature": ...,
///    "max_tokens": ..., "n": ...}
nlohmann::json build_chat_body(const ChatRequest& req);

/// Parses {"choices":[{"message":{"content"}}...], "usage":{"prompt_tokens",
/// "completion_tokens"}}. Throws ProviderError{malformed_payload} when the
/// expected fields are absent.
ChatResponse parse_chat_body(const nlohmann::json& body, int expected_samples);

/// Search request body: {"q": <query>, "num": <top_k>}.
nlohmann::json build_search_body(const SearchRequest& req);

/// Parses the "organic" array of a search response; each entry contributes
/// (title, snippet, link). Entries beyond top_k are dropped.
SearchResultSet parse_search_body(const nlohmann::json& body, const SearchRequest& req);

struct HttpClientConfig {
    std::string base_url;
    std::string api_key;
    int timeout_seconds = 60;
};

/// Reads an environment variable; empty/unset yields nullopt.
std::optional<std::string> env_value(const char* name);

/// Resolves an API key from the given environment variable names in order.
/// Throws ProviderError{configuration} when none is set.
std::string require_env_key(std::initializer_list<const char*> names);

/// Chat-completions client. POSTs build_chat_body() to
/// {base_url}/chat/completions with "Authorization: Bearer <key>".
class ChatCompletionsClient : public ChatProvider {
public:
    explicit ChatCompletionsClient(HttpClientConfig config);
    ChatResponse chat(const ChatRequest& req) override;

    /// Config from TALE_LLM_API_KEY (fallback OPENAI_API_KEY) and
    /// TALE_LLM_BASE_URL (default https://api.openai.com/v1).
    static HttpClientConfig config_from_env();

private:
    HttpClientConfig config_;
};

/// Serper-style search client. POSTs build_search_body() to {base_url}/search
/// with the key in the "X-API-KEY" header.
class SerperSearchClient : public SearchProvider {
public:
    explicit SerperSearchClient(HttpClientConfig config);
    SearchResultSet search(const SearchRequest& req) override;

    /// Config from TALE_SEARCH_API_KEY (fallback SERPER_API_KEY) and
    /// TALE_SEARCH_BASE_URL (default https://google.serper.dev).
    static HttpClientConfig config_from_env();

private:
    HttpClientConfig config_;
};

}  // namespace tale::providers
