#pragma once

#include <array>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

namespace tale::prompts {

// ---------------------------------------------------------------------------
// Template registry
// ---------------------------------------------------------------------------

enum class TemplateId {
    candidate_cot,
    query_generation,
    evidence_summarization,
    reflection,
    query_refinement,
    judgment,
    no_tool_judgment,
};

enum class PromptVariant {
    one_shot_cot,  // instructions + one in-context example (default)
    few_shot_cot,  // instructions + up to three examples
    zero_shot,     // instructions only; never strips instructions themselves
};

std::string to_string(TemplateId id);
TemplateId template_id_from_string(const std::string& s);
std::string to_string(PromptVariant v);
PromptVariant variant_from_string(const std::string& s);

constexpr std::array<TemplateId, 7> all_template_ids() {
    return {TemplateId::candidate_cot,       TemplateId::query_generation,
            TemplateId::evidence_summarization, TemplateId::reflection,
            TemplateId::query_refinement,    TemplateId::judgment,
            TemplateId::no_tool_judgment};
}

/// A template is stored in parts so variants can drop in-context examples
/// without touching instructions: header (instructions and input slots),
/// example blocks, and an optional footer holding trailing input slots.
struct PromptTemplate {
    TemplateId id = TemplateId::candidate_cot;
    std::string header;
    std::vector<std::string> examples;
    std::string footer;
    std::vector<std::string> placeholders;  // declared {name} slots
};

class PromptError : public std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Immutable after construction; rendering is pure, so a registry can be
/// shared freely across threads.
class PromptRegistry {
public:
    /// The built-in template set.
    static const PromptRegistry& builtin();

    /// Built-ins overridden by plain-text files under `dir`:
    ///   <dir>/<template_name>/header.txt
    ///   <dir>/<template_name>/example_1.txt ... example_3.txt
    ///   <dir>/<template_name>/footer.txt        (optional)
    /// A single trailing newline per file is stripped. Templates without a
    /// directory keep their built-in parts.
    static PromptRegistry with_overrides(const std::string& dir);

    const PromptTemplate& get(TemplateId id) const;

    /// Assembled template text for a variant; parts joined by blank lines.
    std::string body(TemplateId id, PromptVariant variant) const;

    /// Substitutes every declared {placeholder} with its binding, verbatim.
    /// Throws PromptError on a missing binding or a binding that is not a
    /// declared placeholder of the template.
    std::string render(TemplateId id, PromptVariant variant,
                       const std::map<std::string, std::string>& bindings) const;

    std::string render(TemplateId id, const std::map<std::string, std::string>& bindings) const {
        return render(id, PromptVariant::one_shot_cot, bindings);
    }

private:
    std::map<TemplateId, PromptTemplate> templates_;
};

// ---------------------------------------------------------------------------
// Output contracts
// ---------------------------------------------------------------------------

struct QueryProposal {
    std::string query;
    std::string aspect;
    std::string rationale;

    bool operator==(const QueryProposal&) const = default;
};

struct ReflectionPayload {
    std::string reflection;

    bool operator==(const ReflectionPayload&) const = default;
};

struct JudgmentPayload {
    bool decision = false;  // parsed from the "True"/"False" literals
    std::string explanation;

    bool operator==(const JudgmentPayload&) const = default;
};

void to_json(nlohmann::json& j, const QueryProposal& p);
void from_json(const nlohmann::json& j, QueryProposal& p);
void to_json(nlohmann::json& j, const ReflectionPayload& p);
void from_json(const nlohmann::json& j, ReflectionPayload& p);
void to_json(nlohmann::json& j, const JudgmentPayload& p);
void from_json(const nlohmann::json& j, JudgmentPayload& p);

enum class ParseErrorKind {
    none,
    no_json_object,  // no balanced {...} region parses as a JSON object
    missing_key,     // required key absent
    wrong_type,      // key present but not a string
    empty_field,     // key present but empty
    bad_literal,     // decision literal outside the documented domain
};

std::string to_string(ParseErrorKind kind);

struct ParseError {
    ParseErrorKind kind = ParseErrorKind::none;
    std::string detail;
    std::string raw;  // original model output, kept for the trace
};

/// Result of parsing an LLM output against a template's contract. Parsing is
/// total: any input yields either a payload or a classified error.
template <typename T>
struct Parsed {
    std::optional<T> value;
    ParseError error;
    std::vector<std::string> warnings;

    bool ok() const { return value.has_value(); }
};

/// A step output still violated its contract after the re-prompt retry.
class ContractViolation : public std::runtime_error {
public:
    explicit ContractViolation(ParseError error)
        : std::runtime_error("contract violation: " + to_string(error.kind) +
                             (error.detail.empty() ? "" : " (" + error.detail + ")")),
          error_(std::move(error)) {}

    const ParseError& error() const { return error_; }

private:
    ParseError error_;
};

/// Finds the first balanced {...} region that parses as a JSON object.
/// Tolerates code fences and surrounding prose; raw control characters inside
/// string literals are escaped before parsing, so multi-line strings survive.
std::optional<nlohmann::json> extract_first_json_object(std::string_view raw);

/// Contract of the query generation/refinement templates: a JSON object with
/// all three of "query", "aspect", "rationale" as non-empty strings.
Parsed<QueryProposal> parse_query_proposal(const std::string& raw);

/// Contract of the reflection template: a JSON object with the single
/// non-empty key "reflection".
Parsed<ReflectionPayload> parse_reflection(const std::string& raw);

/// Contract of the judgment templates: "decision" must be the literal "True"
/// or "False" plus a non-empty "explanation". Case-insensitive literals and
/// raw JSON booleans are accepted leniently, with a warning recorded.
Parsed<JudgmentPayload> parse_judgment(const std::string& raw);

struct FinalAnswer {
    std::string text;
    bool marker_found = false;
};

inline constexpr std::string_view kFinalAnswerMarker = "So the answer is:";

/// Returns the text after the last "So the answer is:" marker, trimmed of
/// surrounding whitespace and trailing periods. Without a marker the whole
/// trimmed text is returned and marker_found stays false.
FinalAnswer extract_final_answer(std::string_view cot_text);

/// Appended to a prompt for the single re-prompt retry after a contract
/// violation.
inline constexpr std::string_view kJsonOnlyReminder = "Return ONLY the JSON object.";

}  // namespace tale::prompts
