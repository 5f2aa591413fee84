#include "tale/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

#include "tale/jsonl.hpp"

namespace tale::providers {

// ---------------------------------------------------------------------------
// Wire types
// ---------------------------------------------------------------------------

std::string to_string(Role role) {
    switch (role) {
        case Role::system: return "system";
        case Role::user: return "user";
        case Role::assistant: return "assistant";
    }
    return "user";
}

Role role_from_string(const std::string& s) {
    if (s == "system") return Role::system;
    if (s == "user") return Role::user;
    if (s == "assistant") return Role::assistant;
    throw ProviderError(ProviderErrorKind::malformed_payload, "unknown message role: " + s);
}

void to_json(nlohmann::json& j, const ChatMessage& m) {
    j = nlohmann::json{{"role", to_string(m.role)}, {"text", m.text}};
}

void from_json(const nlohmann::json& j, ChatMessage& m) {
    m.role = role_from_string(j.at("role").get<std::string>());
    m.text = j.at("text").get<std::string>();
}

void to_json(nlohmann::json& j, const ChatRequest& r) {
    j = nlohmann::json{{"model_id", r.model_id},
                       {"messages", r.messages},
                       {"temperature", r.temperature},
                       {"max_output_tokens", r.max_output_tokens},
                       {"sample_count", r.sample_count}};
}

void from_json(const nlohmann::json& j, ChatRequest& r) {
    r.model_id = j.at("model_id").get<std::string>();
    r.messages = j.at("messages").get<std::vector<ChatMessage>>();
    r.temperature = j.at("temperature").get<double>();
    r.max_output_tokens = j.at("max_output_tokens").get<int>();
    r.sample_count = j.at("sample_count").get<int>();
}

void to_json(nlohmann::json& j, const ChatResponse& r) {
    j = nlohmann::json{{"completions", r.completions},
                       {"input_tokens", r.input_tokens},
                       {"output_tokens", r.output_tokens}};
}

void from_json(const nlohmann::json& j, ChatResponse& r) {
    r.completions = j.at("completions").get<std::vector<std::string>>();
    r.input_tokens = j.value("input_tokens", std::int64_t{0});
    r.output_tokens = j.value("output_tokens", std::int64_t{0});
}

void to_json(nlohmann::json& j, const SearchRequest& r) {
    j = nlohmann::json{{"query_text", r.query_text}, {"top_k", r.top_k}};
}

void from_json(const nlohmann::json& j, SearchRequest& r) {
    r.query_text = j.at("query_text").get<std::string>();
    r.top_k = j.value("top_k", 3);
}

void to_json(nlohmann::json& j, const SearchItem& r) {
    j = nlohmann::json{{"title", r.title}, {"snippet", r.snippet}, {"url", r.url}};
}

void from_json(const nlohmann::json& j, SearchItem& r) {
    r.title = j.value("title", "");
    r.snippet = j.value("snippet", "");
    r.url = j.value("url", "");
}

void to_json(nlohmann::json& j, const SearchResultSet& r) {
    j = nlohmann::json{{"items", r.items}, {"query_echo", r.query_echo}};
}

void from_json(const nlohmann::json& j, SearchResultSet& r) {
    r.items = j.at("items").get<std::vector<SearchItem>>();
    r.query_echo = j.value("query_echo", "");
}

void to_json(nlohmann::json& j, const ItemUsage& u) {
    j = nlohmann::json{{"input_tokens", u.input_tokens},
                       {"output_tokens", u.output_tokens},
                       {"search_queries", u.search_queries}};
}

void from_json(const nlohmann::json& j, ItemUsage& u) {
    u.input_tokens = j.at("input_tokens").get<std::int64_t>();
    u.output_tokens = j.at("output_tokens").get<std::int64_t>();
    u.search_queries = j.at("search_queries").get<std::int64_t>();
}

void validate_request(const ChatRequest& req) {
    if (req.model_id.empty()) {
        throw ProviderError(ProviderErrorKind::configuration, "chat request: empty model id");
    }
    if (req.messages.empty()) {
        throw ProviderError(ProviderErrorKind::configuration, "chat request: no messages");
    }
    if (req.temperature < 0.0 || req.temperature > 2.0) {
        throw ProviderError(ProviderErrorKind::configuration,
                            "chat request: temperature outside [0, 2]");
    }
    if (req.max_output_tokens <= 0) {
        throw ProviderError(ProviderErrorKind::configuration,
                            "chat request: max_output_tokens must be positive");
    }
    if (req.sample_count < 1) {
        throw ProviderError(ProviderErrorKind::configuration,
                            "chat request: sample_count must be >= 1");
    }
}

void validate_request(const SearchRequest& req) {
    if (req.query_text.empty()) {
        throw ProviderError(ProviderErrorKind::configuration, "search request: empty query");
    }
    if (req.top_k <= 0) {
        throw ProviderError(ProviderErrorKind::configuration, "search request: top_k must be positive");
    }
}

// ---------------------------------------------------------------------------
// Usage ledger
// ---------------------------------------------------------------------------

void UsageLedger::record_chat(const std::string& item_id, std::int64_t input_tokens,
                              std::int64_t output_tokens) {
    std::lock_guard lock(mutex_);
    auto& item = state_.per_item[item_id];
    item.input_tokens += input_tokens;
    item.output_tokens += output_tokens;
    state_.total_input_tokens += input_tokens;
    state_.total_output_tokens += output_tokens;
}

void UsageLedger::record_search(const std::string& item_id) {
    std::lock_guard lock(mutex_);
    state_.per_item[item_id].search_queries += 1;
    state_.total_search_queries += 1;
}

UsageSnapshot UsageLedger::snapshot() const {
    std::lock_guard lock(mutex_);
    return state_;
}

ItemUsage UsageLedger::item_usage(const std::string& item_id) const {
    std::lock_guard lock(mutex_);
    auto it = state_.per_item.find(item_id);
    return it == state_.per_item.end() ? ItemUsage{} : it->second;
}

// ---------------------------------------------------------------------------
// Fingerprints
// ---------------------------------------------------------------------------

std::uint64_t fnv1a64(std::string_view data) {
    std::uint64_t hash = 0xcbf29ce484222325ull;
    for (unsigned char c : data) {
        hash ^= c;
        hash *= 0x100000001b3ull;
    }
    return hash;
}

std::string fingerprint(const ChatRequest& req) {
    std::string serialized;
    for (const auto& m : req.messages) {
        serialized += to_string(m.role);
        serialized += '\x1f';
        serialized += m.text;
        serialized += '\x1e';
    }
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%s|t=%.3f|n=%d|m=%016llx", req.model_id.c_str(),
                  req.temperature, req.sample_count,
                  static_cast<unsigned long long>(fnv1a64(serialized)));
    return buf;
}

// ---------------------------------------------------------------------------
// Scripted chat fake
// ---------------------------------------------------------------------------

namespace {

std::int64_t default_token_estimate(std::size_t chars) {
    return static_cast<std::int64_t>((chars + 3) / 4);
}

std::size_t request_char_count(const ChatRequest& req) {
    std::size_t total = 0;
    for (const auto& m : req.messages) total += m.text.size();
    return total;
}

ChatResponse response_from_json(const nlohmann::json& j) {
    ChatResponse resp;
    resp.completions = j.at("completions").get<std::vector<std::string>>();
    resp.input_tokens = j.value("input_tokens", std::int64_t{-1});
    resp.output_tokens = j.value("output_tokens", std::int64_t{-1});
    return resp;
}

nlohmann::json response_to_json(const ChatResponse& resp) {
    nlohmann::json j;
    j["completions"] = resp.completions;
    if (resp.input_tokens >= 0) j["input_tokens"] = resp.input_tokens;
    if (resp.output_tokens >= 0) j["output_tokens"] = resp.output_tokens;
    return j;
}

}  // namespace

void ScriptedChatProvider::load_script(const std::string& path) {
    for_each_jsonl_record(path, [&](const nlohmann::json& record, std::size_t line) {
        if (record.contains("fingerprint")) {
            add_exact_fingerprint(record.at("fingerprint").get<std::string>(),
                                  response_from_json(record.at("response")));
        } else if (record.contains("match_substring")) {
            add_rule(record.at("match_substring").get<std::string>(),
                     response_from_json(record.at("response")));
        } else {
            throw JsonlError(path, line, "entry needs 'fingerprint' or 'match_substring'");
        }
    });
}

void ScriptedChatProvider::save_script(const std::string& path) const {
    std::lock_guard lock(mutex_);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& [fp, resp] : exact_) {
        nlohmann::json j{{"fingerprint", fp}, {"response", response_to_json(resp)}};
        out << j.dump() << '\n';
    }
    for (const auto& [sub, resp] : rules_) {
        nlohmann::json j{{"match_substring", sub}, {"response", response_to_json(resp)}};
        out << j.dump() << '\n';
    }
}

void ScriptedChatProvider::add_exact(const ChatRequest& req, ChatResponse response) {
    add_exact_fingerprint(fingerprint(req), std::move(response));
}

void ScriptedChatProvider::add_exact_fingerprint(const std::string& fp, ChatResponse response) {
    std::lock_guard lock(mutex_);
    exact_[fp] = std::move(response);
}

void ScriptedChatProvider::add_rule(const std::string& match_substring, ChatResponse response) {
    std::lock_guard lock(mutex_);
    rules_.emplace_back(match_substring, std::move(response));
}

void ScriptedChatProvider::add_rule_text(const std::string& match_substring,
                                         const std::string& completion) {
    ChatResponse resp;
    resp.completions = {completion};
    resp.input_tokens = -1;
    resp.output_tokens = -1;
    add_rule(match_substring, std::move(resp));
}

void ScriptedChatProvider::inject_failures(int n, ProviderErrorKind kind) {
    std::lock_guard lock(mutex_);
    pending_failures_ = n;
    failure_kind_ = kind;
}

ChatResponse ScriptedChatProvider::finalize(const ChatRequest& req, ChatResponse resp) const {
    // Negative counts mean "not scripted": estimate deterministically.
    if (resp.input_tokens < 0) resp.input_tokens = default_token_estimate(request_char_count(req));
    if (resp.output_tokens < 0) {
        std::size_t chars = 0;
        for (const auto& c : resp.completions) chars += c.size();
        resp.output_tokens = default_token_estimate(chars);
    }
    if (static_cast<int>(resp.completions.size()) == req.sample_count) return resp;
    if (resp.completions.size() == 1 && req.sample_count > 1) {
        resp.completions.assign(req.sample_count, resp.completions.front());
        return resp;
    }
    throw ProviderError(ProviderErrorKind::script_miss,
                        "scripted response has " + std::to_string(resp.completions.size()) +
                            " completions but request asked for " +
                            std::to_string(req.sample_count));
}

ChatResponse ScriptedChatProvider::chat(const ChatRequest& req) {
    validate_request(req);
    std::lock_guard lock(mutex_);
    log_.push_back(req);
    if (pending_failures_ > 0) {
        --pending_failures_;
        throw ProviderError(failure_kind_, "injected fake failure");
    }
    const std::string fp = fingerprint(req);
    if (auto it = exact_.find(fp); it != exact_.end()) {
        return finalize(req, it->second);
    }
    const std::string* last_user = nullptr;
    for (const auto& m : req.messages) {
        if (m.role == Role::user) last_user = &m.text;
    }
    if (last_user != nullptr) {
        for (const auto& [sub, resp] : rules_) {
            if (last_user->find(sub) != std::string::npos) {
                return finalize(req, resp);
            }
        }
    }
    std::string head = last_user ? last_user->substr(0, 120) : std::string("<no user message>");
    throw ProviderError(ProviderErrorKind::script_miss,
                        "no scripted response for fingerprint " + fp + " (prompt head: " + head + ")");
}

std::vector<ChatRequest> ScriptedChatProvider::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t ScriptedChatProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

void ScriptedChatProvider::clear_log() {
    std::lock_guard lock(mutex_);
    log_.clear();
}

// ---------------------------------------------------------------------------
// Scripted search fake
// ---------------------------------------------------------------------------

void ScriptedSearchProvider::load_script(const std::string& path) {
    for_each_jsonl_record(path, [&](const nlohmann::json& record, std::size_t) {
        add(record.at("query").get<std::string>(),
            record.at("items").get<std::vector<SearchItem>>());
    });
}

void ScriptedSearchProvider::save_script(const std::string& path) const {
    std::lock_guard lock(mutex_);
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    for (const auto& [query, items] : entries_) {
        nlohmann::json j{{"query", query}, {"items", items}};
        out << j.dump() << '\n';
    }
}

void ScriptedSearchProvider::add(const std::string& query_text, std::vector<SearchItem> items) {
    std::lock_guard lock(mutex_);
    entries_[query_text] = std::move(items);
}

void ScriptedSearchProvider::inject_failures(int n, ProviderErrorKind kind) {
    std::lock_guard lock(mutex_);
    pending_failures_ = n;
    failure_kind_ = kind;
}

SearchResultSet ScriptedSearchProvider::search(const SearchRequest& req) {
    validate_request(req);
    std::lock_guard lock(mutex_);
    log_.push_back(req);
    if (pending_failures_ > 0) {
        --pending_failures_;
        throw ProviderError(failure_kind_, "injected fake failure");
    }
    SearchResultSet out;
    out.query_echo = req.query_text;
    if (auto it = entries_.find(req.query_text); it != entries_.end()) {
        const auto& items = it->second;
        const std::size_t n = std::min<std::size_t>(items.size(), static_cast<std::size_t>(req.top_k));
        out.items.assign(items.begin(), items.begin() + static_cast<std::ptrdiff_t>(n));
    }
    return out;
}

std::vector<SearchRequest> ScriptedSearchProvider::requests() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t ScriptedSearchProvider::call_count() const {
    std::lock_guard lock(mutex_);
    return log_.size();
}

// ---------------------------------------------------------------------------
// Retry
// ---------------------------------------------------------------------------

namespace {

void default_sleep(std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }

template <typename Fn>
auto with_retries(const RetryPolicy& policy, Fn&& fn) {
    auto backoff = policy.initial_backoff;
    const auto& sleeper = policy.sleeper ? policy.sleeper : default_sleep;
    for (int attempt = 1;; ++attempt) {
        try {
            return fn();
        } catch (const ProviderError& err) {
            if (!err.retryable() || attempt >= policy.max_attempts) throw;
            sleeper(backoff);
            backoff = std::chrono::milliseconds(
                static_cast<std::int64_t>(std::llround(static_cast<double>(backoff.count()) *
                                                       policy.backoff_factor)));
        }
    }
}

}  // namespace

RetryingChatProvider::RetryingChatProvider(ChatProvider& inner, RetryPolicy policy)
    : inner_(inner), policy_(std::move(policy)) {}

ChatResponse RetryingChatProvider::chat(const ChatRequest& req) {
    return with_retries(policy_, [&] { return inner_.chat(req); });
}

RetryingSearchProvider::RetryingSearchProvider(SearchProvider& inner, RetryPolicy policy)
    : inner_(inner), policy_(std::move(policy)) {}

SearchResultSet RetryingSearchProvider::search(const SearchRequest& req) {
    return with_retries(policy_, [&] { return inner_.search(req); });
}

// ---------------------------------------------------------------------------
// Metering
// ---------------------------------------------------------------------------

MeteredChatProvider::MeteredChatProvider(ChatProvider& inner, UsageLedger& ledger,
                                         std::string item_id)
    : inner_(inner), ledger_(ledger), item_id_(std::move(item_id)) {}

ChatResponse MeteredChatProvider::chat(const ChatRequest& req) {
    validate_request(req);
    ChatResponse resp = inner_.chat(req);
    if (static_cast<int>(resp.completions.size()) != req.sample_count) {
        throw ProviderError(ProviderErrorKind::malformed_payload,
                            "provider returned " + std::to_string(resp.completions.size()) +
                                " completions, expected " + std::to_string(req.sample_count));
    }
    ledger_.record_chat(item_id_, resp.input_tokens, resp.output_tokens);
    return resp;
}

MeteredSearchProvider::MeteredSearchProvider(SearchProvider& inner, UsageLedger& ledger,
                                             std::string item_id)
    : inner_(inner), ledger_(ledger), item_id_(std::move(item_id)) {}

SearchResultSet MeteredSearchProvider::search(const SearchRequest& req) {
    validate_request(req);
    SearchResultSet result = inner_.search(req);
    // One logical query per call, even when the result set is empty.
    ledger_.record_search(item_id_);
    return result;
}

}  // namespace tale::providers
