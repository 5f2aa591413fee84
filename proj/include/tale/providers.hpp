#pragma once

#include <chrono>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

namespace tale::providers {

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

enum class Role { system, user, assistant };

std::string to_string(Role role);
Role role_from_string(const std::string& s);

struct ChatMessage {
    Role role = Role::user;
    std::string text;

    bool operator==(const ChatMessage&) const = default;
};

struct ChatRequest {
    std::string model_id;
    std::vector<ChatMessage> messages;
    double temperature = 0.0;  // must stay in [0, 2]
    int max_output_tokens = 1024;
    int sample_count = 1;  // > 1 only for self-consistency sampling

    bool operator==(const ChatRequest&) const = default;
};

struct ChatResponse {
    std::vector<std::string> completions;  // length == requested sample_count
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;

    bool operator==(const ChatResponse&) const = default;
};

struct SearchRequest {
    std::string query_text;
    int top_k = 3;

    bool operator==(const SearchRequest&) const = default;
};

struct SearchItem {
    std::string title;
    std::string snippet;
    std::string url;

    bool operator==(const SearchItem&) const = default;
};

struct SearchResultSet {
    std::vector<SearchItem> items;  // at most top_k entries, rank order
    std::string query_echo;

    bool operator==(const SearchResultSet&) const = default;
};

void to_json(nlohmann::json& j, const ChatMessage& m);
void from_json(const nlohmann::json& j, ChatMessage& m);
void to_json(nlohmann::json& j, const ChatRequest& r);
void from_json(const nlohmann::json& j, ChatRequest& r);
void to_json(nlohmann::json& j, const ChatResponse& r);
void from_json(const nlohmann::json& j, ChatResponse& r);
void to_json(nlohmann::json& j, const SearchRequest& r);
void from_json(const nlohmann::json& j, SearchRequest& r);
void to_json(nlohmann::json& j, const SearchItem& r);
void from_json(const nlohmann::json& j, SearchItem& r);
void to_json(nlohmann::json& j, const SearchResultSet& r);
void from_json(const nlohmann::json& j, SearchResultSet& r);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

enum class ProviderErrorKind {
    transport,          // network / 5xx / 429, retryable
    malformed_payload,  // provider answered but the body is unusable
    configuration,      // missing credentials, invalid request
    script_miss,        // scripted fake has no entry for the request
};

class ProviderError : public std::runtime_error {
public:
    ProviderError(ProviderErrorKind kind, const std::string& what)
        : std::runtime_error(what), kind_(kind) {}

    ProviderErrorKind kind() const { return kind_; }
    bool retryable() const { return kind_ == ProviderErrorKind::transport; }

private:
    ProviderErrorKind kind_;
};

// Throws ProviderError{configuration} if the request violates its invariants.
void validate_request(const ChatRequest& req);
void validate_request(const SearchRequest& req);

// ---------------------------------------------------------------------------
// Provider interfaces
// ---------------------------------------------------------------------------

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual ChatResponse chat(const ChatRequest& req) = 0;
};

class SearchProvider {
public:
    virtual ~SearchProvider() = default;
    virtual SearchResultSet search(const SearchRequest& req) = 0;
};

// ---------------------------------------------------------------------------
// Usage accounting
// ---------------------------------------------------------------------------

struct ItemUsage {
    std::int64_t input_tokens = 0;
    std::int64_t output_tokens = 0;
    std::int64_t search_queries = 0;

    bool operator==(const ItemUsage&) const = default;
};

struct UsageSnapshot {
    std::int64_t total_input_tokens = 0;
    std::int64_t total_output_tokens = 0;
    std::int64_t total_search_queries = 0;
    std::map<std::string, ItemUsage> per_item;

    bool operator==(const UsageSnapshot&) const = default;
};

void to_json(nlohmann::json& j, const ItemUsage& u);
void from_json(const nlohmann::json& j, ItemUsage& u);

/// Token and query accounting shared by every provider in a run. Totals always
/// equal the sum over per-item entries and only ever grow. Increments are
/// serialized; safe to use from concurrent episode workers.
class UsageLedger {
public:
    void record_chat(const std::string& item_id, std::int64_t input_tokens,
                     std::int64_t output_tokens);
    void record_search(const std::string& item_id);

    UsageSnapshot snapshot() const;
    ItemUsage item_usage(const std::string& item_id) const;

private:
    mutable std::mutex mutex_;
    UsageSnapshot state_;
};

// ---------------------------------------------------------------------------
// Request fingerprints (fake script keys)
// ---------------------------------------------------------------------------

/// Stable 64-bit FNV-1a hash; used instead of std::hash so fingerprints are
/// identical across platforms and runs.
std::uint64_t fnv1a64(std::string_view data);

/// Normalized request fingerprint: "<model>|t=<temp>|n=<samples>|m=<hash>".
/// The hash covers the ordered (role, text) message list.
std::string fingerprint(const ChatRequest& req);

// ---------------------------------------------------------------------------
// Scripted fakes
// ---------------------------------------------------------------------------

/// Deterministic chat fake. Responses are looked up first by exact request
/// fingerprint, then by the first registered rule whose substring occurs in
/// the last user message. Identical request in, identical response out.
///
/// Script file format (JSONL), one entry per line:
///   {"fingerprint": "...", "response": {"completions": [...],
///    "input_tokens": 12, "output_tokens": 34}}
///   {"match_substring": "...", "response": {...}}
/// Token counts may be omitted; they then default to ceil(len/4) of the
/// request resp. completion text.
class ScriptedChatProvider : public ChatProvider {
public:
    ScriptedChatProvider() = default;

    void load_script(const std::string& path);
    void save_script(const std::string& path) const;

    void add_exact(const ChatRequest& req, ChatResponse response);
    void add_exact_fingerprint(const std::string& fp, ChatResponse response);
    void add_rule(const std::string& match_substring, ChatResponse response);

    /// Convenience: rule whose response is a single completion with default
    /// token accounting.
    void add_rule_text(const std::string& match_substring, const std::string& completion);

    /// The next `n` calls throw a ProviderError of the given kind.
    void inject_failures(int n, ProviderErrorKind kind = ProviderErrorKind::transport);

    ChatResponse chat(const ChatRequest& req) override;

    /// Every request seen so far, in call order.
    std::vector<ChatRequest> requests() const;
    std::size_t call_count() const;
    void clear_log();

private:
    ChatResponse finalize(const ChatRequest& req, ChatResponse resp) const;

    mutable std::mutex mutex_;
    std::map<std::string, ChatResponse> exact_;
    std::vector<std::pair<std::string, ChatResponse>> rules_;
    std::vector<ChatRequest> log_;
    int pending_failures_ = 0;
    ProviderErrorKind failure_kind_ = ProviderErrorKind::transport;
};

/// Deterministic search fake keyed by exact query text. Unknown queries are
/// not an error: they return an empty result set. Stored items are truncated
/// to the request's top_k.
///
/// Script file format (JSONL):
///   {"query": "...", "items": [{"title": "...", "snippet": "...", "url": "..."}]}
class ScriptedSearchProvider : public SearchProvider {
public:
    ScriptedSearchProvider() = default;

    void load_script(const std::string& path);
    void save_script(const std::string& path) const;

    void add(const std::string& query_text, std::vector<SearchItem> items);
    void inject_failures(int n, ProviderErrorKind kind = ProviderErrorKind::transport);

    SearchResultSet search(const SearchRequest& req) override;

    std::vector<SearchRequest> requests() const;
    std::size_t call_count() const;

private:
    mutable std::mutex mutex_;
    std::map<std::string, std::vector<SearchItem>> entries_;
    std::vector<SearchRequest> log_;
    int pending_failures_ = 0;
    ProviderErrorKind failure_kind_ = ProviderErrorKind::transport;
};

// ---------------------------------------------------------------------------
// Retry decorator
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds initial_backoff{1000};
    double backoff_factor = 2.0;
    // Injectable so tests can observe the schedule instead of sleeping.
    std::function<void(std::chrono::milliseconds)> sleeper;
};

/// Retries transport failures up to the policy's attempt budget with
/// exponential backoff. Non-retryable errors propagate immediately. A call
/// that eventually succeeds returns exactly what the inner provider returned.
class RetryingChatProvider : public ChatProvider {
public:
    RetryingChatProvider(ChatProvider& inner, RetryPolicy policy = {});
    ChatResponse chat(const ChatRequest& req) override;

private:
    ChatProvider& inner_;
    RetryPolicy policy_;
};

class RetryingSearchProvider : public SearchProvider {
public:
    RetryingSearchProvider(SearchProvider& inner, RetryPolicy policy = {});
    SearchResultSet search(const SearchRequest& req) override;

private:
    SearchProvider& inner_;
    RetryPolicy policy_;
};

// ---------------------------------------------------------------------------
// Metering decorators
// ---------------------------------------------------------------------------

/// Validates requests and records provider-reported usage into the ledger
/// under a fixed item id. One wrapper per evaluated item.
class MeteredChatProvider : public ChatProvider {
public:
    MeteredChatProvider(ChatProvider& inner, UsageLedger& ledger, std::string item_id);
    ChatResponse chat(const ChatRequest& req) override;

private:
    ChatProvider& inner_;
    UsageLedger& ledger_;
    std::string item_id_;
};

/// Counts one search query per logical call, whether or not results came back.
class MeteredSearchProvider : public SearchProvider {
public:
    MeteredSearchProvider(SearchProvider& inner, UsageLedger& ledger, std::string item_id);
    SearchResultSet search(const SearchRequest& req) override;

private:
    SearchProvider& inner_;
    UsageLedger& ledger_;
    std::string item_id_;
};

}  // namespace tale::providers
