#include "tale/prompts.hpp"

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace tale::prompts {

namespace {

namespace fs = std::filesystem;

constexpr std::pair<TemplateId, const char*> kTemplateNames[] = {
    {TemplateId::candidate_cot, "candidate_cot"},
    {TemplateId::query_generation, "query_generation"},
    {TemplateId::evidence_summarization, "evidence_summarization"},
    {TemplateId::reflection, "reflection"},
    {TemplateId::query_refinement, "query_refinement"},
    {TemplateId::judgment, "judgment"},
    {TemplateId::no_tool_judgment, "no_tool_judgment"},
};

constexpr std::pair<PromptVariant, const char*> kVariantNames[] = {
    {PromptVariant::one_shot_cot, "one_shot_cot"},
    {PromptVariant::few_shot_cot, "few_shot_cot"},
    {PromptVariant::zero_shot, "zero_shot"},
};

std::string strip_trailing_newline(std::string text) {
    if (!text.empty() && text.back() == '\n') text.pop_back();
    if (!text.empty() && text.back() == '\r') text.pop_back();
    return text;
}

std::optional<std::string> read_part(const fs::path& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    std::ostringstream buf;
    buf << in.rdbuf();
    return strip_trailing_newline(buf.str());
}

}  // namespace

std::string to_string(TemplateId id) {
    for (auto [value, name] : kTemplateNames) {
        if (value == id) return name;
    }
    throw PromptError("unknown template id");
}

TemplateId template_id_from_string(const std::string& s) {
    for (auto [value, name] : kTemplateNames) {
        if (s == name) return value;
    }
    throw PromptError("unknown template id: " + s);
}

std::string to_string(PromptVariant v) {
    for (auto [value, name] : kVariantNames) {
        if (value == v) return name;
    }
    throw PromptError("unknown prompt variant");
}

PromptVariant variant_from_string(const std::string& s) {
    for (auto [value, name] : kVariantNames) {
        if (s == name) return value;
    }
    throw PromptError("unknown prompt variant: " + s);
}

// Defined in prompt_texts.cpp.
std::map<TemplateId, PromptTemplate> builtin_templates();

const PromptRegistry& PromptRegistry::builtin() {
    static const PromptRegistry registry = [] {
        PromptRegistry r;
        r.templates_ = builtin_templates();
        return r;
    }();
    return registry;
}

PromptRegistry PromptRegistry::with_overrides(const std::string& dir) {
    PromptRegistry registry = builtin();
    for (auto& [id, tmpl] : registry.templates_) {
        const fs::path base = fs::path(dir) / to_string(id);
        if (!fs::is_directory(base)) continue;
        if (auto header = read_part(base / "header.txt")) {
            tmpl.header = *header;
        }
        std::vector<std::string> examples;
        for (int i = 1; i <= 3; ++i) {
            auto part = read_part(base / ("example_" + std::to_string(i) + ".txt"));
            if (!part) break;
            examples.push_back(*part);
        }
        if (!examples.empty()) tmpl.examples = std::move(examples);
        if (auto footer = read_part(base / "footer.txt")) {
            tmpl.footer = *footer;
        }
    }
    return registry;
}

const PromptTemplate& PromptRegistry::get(TemplateId id) const {
    auto it = templates_.find(id);
    if (it == templates_.end()) throw PromptError("template not registered: " + to_string(id));
    return it->second;
}

std::string PromptRegistry::body(TemplateId id, PromptVariant variant) const {
    const PromptTemplate& tmpl = get(id);
    std::size_t example_count = 0;
    switch (variant) {
        case PromptVariant::zero_shot: example_count = 0; break;
        case PromptVariant::one_shot_cot: example_count = 1; break;
        case PromptVariant::few_shot_cot: example_count = 3; break;
    }
    example_count = std::min(example_count, tmpl.examples.size());

    std::string out = tmpl.header;
    for (std::size_t i = 0; i < example_count; ++i) {
        out += "\n\n";
        out += tmpl.examples[i];
    }
    if (!tmpl.footer.empty()) {
        out += "\n\n";
        out += tmpl.footer;
    }
    return out;
}

std::string PromptRegistry::render(TemplateId id, PromptVariant variant,
                                   const std::map<std::string, std::string>& bindings) const {
    const PromptTemplate& tmpl = get(id);
    for (const auto& [name, _] : bindings) {
        if (std::find(tmpl.placeholders.begin(), tmpl.placeholders.end(), name) ==
            tmpl.placeholders.end()) {
            throw PromptError("binding '" + name + "' is not a placeholder of " + to_string(id));
        }
    }

    const std::string text = body(id, variant);
    std::string out;
    out.reserve(text.size());
    std::size_t pos = 0;
    while (pos < text.size()) {
        const std::size_t open = text.find('{', pos);
        if (open == std::string::npos) {
            out.append(text, pos, std::string::npos);
            break;
        }
        out.append(text, pos, open - pos);
        // A slot is {lower_snake_case}; any other brace content is literal
        // text (the example outputs contain JSON objects).
        std::size_t end = open + 1;
        while (end < text.size() && (std::islower(static_cast<unsigned char>(text[end])) ||
                                     std::isdigit(static_cast<unsigned char>(text[end])) ||
                                     text[end] == '_')) {
            ++end;
        }
        if (end > open + 1 && end < text.size() && text[end] == '}') {
            const std::string name = text.substr(open + 1, end - open - 1);
            if (std::find(tmpl.placeholders.begin(), tmpl.placeholders.end(), name) !=
                tmpl.placeholders.end()) {
                auto it = bindings.find(name);
                if (it == bindings.end()) {
                    throw PromptError("missing binding '" + name + "' for " + to_string(id));
                }
                out += it->second;
                pos = end + 1;
                continue;
            }
        }
        out += '{';
        pos = open + 1;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Payload JSON adapters
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const QueryProposal& p) {
    j = nlohmann::json{{"query", p.query}, {"aspect", p.aspect}, {"rationale", p.rationale}};
}

void from_json(const nlohmann::json& j, QueryProposal& p) {
    p.query = j.at("query").get<std::string>();
    p.aspect = j.at("aspect").get<std::string>();
    p.rationale = j.at("rationale").get<std::string>();
}

void to_json(nlohmann::json& j, const ReflectionPayload& p) {
    j = nlohmann::json{{"reflection", p.reflection}};
}

void from_json(const nlohmann::json& j, ReflectionPayload& p) {
    p.reflection = j.at("reflection").get<std::string>();
}

void to_json(nlohmann::json& j, const JudgmentPayload& p) {
    j = nlohmann::json{{"decision", p.decision ? "True" : "False"},
                       {"explanation", p.explanation}};
}

void from_json(const nlohmann::json& j, JudgmentPayload& p) {
    p.decision = j.at("decision").get<std::string>() == "True";
    p.explanation = j.at("explanation").get<std::string>();
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

std::string to_string(ParseErrorKind kind) {
    switch (kind) {
        case ParseErrorKind::none: return "none";
        case ParseErrorKind::no_json_object: return "no_json_object";
        case ParseErrorKind::missing_key: return "missing_key";
        case ParseErrorKind::wrong_type: return "wrong_type";
        case ParseErrorKind::empty_field: return "empty_field";
        case ParseErrorKind::bad_literal: return "bad_literal";
    }
    return "unknown";
}

std::optional<nlohmann::json> extract_first_json_object(std::string_view raw) {
    for (std::size_t start = raw.find('{'); start != std::string_view::npos;
         start = raw.find('{', start + 1)) {
        std::string candidate;
        candidate.reserve(raw.size() - start);
        bool in_string = false;
        bool escaped = false;
        int depth = 0;
        bool complete = false;
        for (std::size_t i = start; i < raw.size(); ++i) {
            const char c = raw[i];
            if (in_string) {
                if (escaped) {
                    escaped = false;
                    candidate += c;
                } else if (c == '\\') {
                    escaped = true;
                    candidate += c;
                } else if (c == '"') {
                    in_string = false;
                    candidate += c;
                } else if (c == '\n') {
                    candidate += "\\n";
                } else if (c == '\r') {
                    candidate += "\\r";
                } else if (c == '\t') {
                    candidate += "\\t";
                } else {
                    candidate += c;
                }
                continue;
            }
            switch (c) {
                case '"': in_string = true; candidate += c; break;
                case '{': ++depth; candidate += c; break;
                case '}':
                    --depth;
                    candidate += c;
                    if (depth == 0) complete = true;
                    break;
                default: candidate += c; break;
            }
            if (complete) break;
        }
        if (!complete) continue;
        auto parsed = nlohmann::json::parse(candidate, nullptr, false);
        if (!parsed.is_discarded() && parsed.is_object()) return parsed;
    }
    return std::nullopt;
}

namespace {

struct FieldCheck {
    std::vector<std::string> missing;
    std::vector<std::string> wrong_type;
    std::vector<std::string> empty;
};

FieldCheck check_string_fields(const nlohmann::json& obj, const std::vector<const char*>& keys) {
    FieldCheck check;
    for (const char* key : keys) {
        if (!obj.contains(key)) {
            check.missing.emplace_back(key);
        } else if (!obj[key].is_string()) {
            check.wrong_type.emplace_back(key);
        } else if (obj[key].get<std::string>().empty()) {
            check.empty.emplace_back(key);
        }
    }
    return check;
}

std::string join(const std::vector<std::string>& parts) {
    std::string out;
    for (const auto& part : parts) {
        if (!out.empty()) out += ", ";
        out += part;
    }
    return out;
}

std::optional<ParseError> field_error(const std::string& raw, const FieldCheck& check) {
    if (!check.missing.empty()) {
        return ParseError{ParseErrorKind::missing_key, "missing: " + join(check.missing), raw};
    }
    if (!check.wrong_type.empty()) {
        return ParseError{ParseErrorKind::wrong_type, "not a string: " + join(check.wrong_type),
                          raw};
    }
    if (!check.empty.empty()) {
        return ParseError{ParseErrorKind::empty_field, "empty: " + join(check.empty), raw};
    }
    return std::nullopt;
}

std::string ascii_lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

}  // namespace

Parsed<QueryProposal> parse_query_proposal(const std::string& raw) {
    Parsed<QueryProposal> result;
    auto obj = extract_first_json_object(raw);
    if (!obj) {
        result.error = {ParseErrorKind::no_json_object, "", raw};
        return result;
    }
    auto check = check_string_fields(*obj, {"query", "aspect", "rationale"});
    if (auto err = field_error(raw, check)) {
        result.error = *err;
        return result;
    }
    result.value = QueryProposal{(*obj)["query"].get<std::string>(),
                                 (*obj)["aspect"].get<std::string>(),
                                 (*obj)["rationale"].get<std::string>()};
    return result;
}

Parsed<ReflectionPayload> parse_reflection(const std::string& raw) {
    Parsed<ReflectionPayload> result;
    auto obj = extract_first_json_object(raw);
    if (!obj) {
        result.error = {ParseErrorKind::no_json_object, "", raw};
        return result;
    }
    auto check = check_string_fields(*obj, {"reflection"});
    if (auto err = field_error(raw, check)) {
        result.error = *err;
        return result;
    }
    result.value = ReflectionPayload{(*obj)["reflection"].get<std::string>()};
    return result;
}

Parsed<JudgmentPayload> parse_judgment(const std::string& raw) {
    Parsed<JudgmentPayload> result;
    auto obj = extract_first_json_object(raw);
    if (!obj) {
        result.error = {ParseErrorKind::no_json_object, "", raw};
        return result;
    }
    if (!obj->contains("decision")) {
        result.error = {ParseErrorKind::missing_key, "missing: decision", raw};
        return result;
    }

    bool decision = false;
    const auto& decision_field = (*obj)["decision"];
    if (decision_field.is_string()) {
        const std::string literal = decision_field.get<std::string>();
        if (literal == "True") {
            decision = true;
        } else if (literal == "False") {
            decision = false;
        } else {
            const std::string lowered = ascii_lower(literal);
            if (lowered == "true" || lowered == "false") {
                decision = lowered == "true";
                result.warnings.push_back("case_insensitive_decision");
            } else {
                result.error = {ParseErrorKind::bad_literal, "decision literal: " + literal, raw};
                return result;
            }
        }
    } else if (decision_field.is_boolean()) {
        decision = decision_field.get<bool>();
        result.warnings.push_back("non_string_decision");
    } else {
        result.error = {ParseErrorKind::bad_literal, "decision is not a string", raw};
        return result;
    }

    auto check = check_string_fields(*obj, {"explanation"});
    if (auto err = field_error(raw, check)) {
        result.error = *err;
        return result;
    }
    result.value = JudgmentPayload{decision, (*obj)["explanation"].get<std::string>()};
    return result;
}

namespace {

std::string_view trim_view(std::string_view s) {
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
    while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
    return s;
}

}  // namespace

FinalAnswer extract_final_answer(std::string_view cot_text) {
    FinalAnswer out;
    const std::size_t pos = cot_text.rfind(kFinalAnswerMarker);
    std::string_view tail;
    if (pos == std::string_view::npos) {
        tail = trim_view(cot_text);
    } else {
        out.marker_found = true;
        tail = trim_view(cot_text.substr(pos + kFinalAnswerMarker.size()));
        while (!tail.empty() && tail.back() == '.') {
            tail.remove_suffix(1);
            tail = trim_view(tail);
        }
    }
    out.text = std::string(tail);
    return out;
}

}  // namespace tale::prompts
