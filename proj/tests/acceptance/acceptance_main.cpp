// Acceptance suite: every release gate runs here, one line per criterion.
// Exit code is the number of failed criteria.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <random>
#include <set>
#include <sstream>

#include "../oracles.hpp"
#include "../test_support.hpp"
#include "tale/baselines.hpp"
#include "tale/harness.hpp"
#include "tale/metrics.hpp"
#include "tale/pipeline.hpp"

using namespace tale;

namespace {

struct CheckFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void require(bool condition, const std::string& what) {
    if (!condition) throw CheckFailure(what);
}

template <typename T>
void require_eq(const T& actual, const T& expected, const std::string& what) {
    if (!(actual == expected)) {
        std::ostringstream msg;
        msg << what << " (got " << actual << ", expected " << expected << ")";
        throw CheckFailure(msg.str());
    }
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --------------------------------------------------------------------------
// 1. Cost arithmetic
// --------------------------------------------------------------------------

void criterion_cost_arithmetic() {
    const auto start = std::chrono::steady_clock::now();

    providers::UsageSnapshot per_item;
    per_item.total_input_tokens = 4410;
    per_item.total_output_tokens = 989;
    per_item.total_search_queries = 3;
    harness::PriceTable prices;  // $0.15 / $0.60 per 1M tokens, $0.30 per 1k queries

    auto one = harness::cost_report(per_item, prices, 1, 0.0);
    require(one.llm_cost == money::Rational(12549, 10'000'000),
            "per-item LLM cost must be exactly 0.0012549");
    require(one.search_cost == money::Rational(9, 10'000),
            "per-item search cost must be exactly 0.0009000");
    require(one.total_cost == money::Rational(21549, 10'000'000),
            "per-item total must be exactly 0.0021549");
    require_eq(one.display_llm_per_item(), std::string("$0.00126"), "LLM display");
    require_eq(one.display_search_per_item(), std::string("$0.00090"), "search display");
    require_eq(one.display_per_item(), std::string("$0.00216"), "per-item display");

    providers::UsageSnapshot run_usage;
    run_usage.total_input_tokens = 4410 * 300;
    run_usage.total_output_tokens = 989 * 300;
    run_usage.total_search_queries = 3 * 300;
    auto full = harness::cost_report(run_usage, prices, 300, 0.0);
    require(full.per_item_cost == money::Rational(21549, 10'000'000),
            "300-item run keeps the exact per-item cost");
    require_eq(full.display_total(), std::string("$0.65"), "300-item total display");

    require(seconds_since(start) < 1.0, "cost arithmetic must finish in under a second");
}

// --------------------------------------------------------------------------
// 2. Episode loop structure
// --------------------------------------------------------------------------

void check_iteration_order(const std::string& text, std::size_t from, std::size_t to, int n,
                           const std::string& what) {
    std::size_t previous = from;
    for (int i = 1; i <= n; ++i) {
        const std::string header = "[Iteration " + std::to_string(i) + "]";
        const std::size_t at = text.find(header, previous);
        require(at != std::string::npos && at < to, what + ": missing/misplaced " + header);
        previous = at;
    }
}

void criterion_loop_structure() {
    const auto start = std::chrono::steady_clock::now();

    for (int n : {1, 2, 3, 4}) {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        providers::UsageLedger ledger;
        test::script_pipeline(chat, search);

        pipeline::EpisodeConfig config;
        config.iterations = n;
        config.judge_model = "judge-model";

        for (int item = 1; item <= 50; ++item) {
            const std::string item_id = "fx-" + std::to_string(item);
            const std::string question = "fixture question " + std::to_string(item) +
                                         " about topic " + std::to_string(item) + "?";
            const std::string candidate = "candidate-answer-" + std::to_string(item) + "-zzq";

            auto result =
                pipeline::run_episode(chat, search, ledger, prompts::PromptRegistry::builtin(),
                                      config, item_id, question, candidate);
            require(!result.errored, "episode must complete: " + result.error);
            require_eq(static_cast<int>(result.memory.size()), n, "memory length");
            require_eq(ledger.item_usage(item_id).search_queries, static_cast<std::int64_t>(n),
                       "search calls per episode");

            int judge_calls = 0;
            std::string judge_prompt;
            std::string initial_prompt;
            for (const auto& event : result.events) {
                if (event.kind != "chat") continue;
                const std::string text =
                    event.request.at("messages").at(0).at("text").get<std::string>();
                if (event.purpose == "judge") {
                    ++judge_calls;
                    judge_prompt = text;
                }
                if (event.purpose == "initial_query" && initial_prompt.empty()) {
                    initial_prompt = text;
                }
            }
            require_eq(judge_calls, 1, "judgment calls per episode");

            const std::size_t evidence_at = judge_prompt.find("Evidence Summary:");
            const std::size_t reflection_at = judge_prompt.find("Reflection:");
            require(evidence_at != std::string::npos && reflection_at != std::string::npos,
                    "judge prompt carries both aggregates");
            check_iteration_order(judge_prompt, evidence_at, reflection_at, n, "evidence order");
            check_iteration_order(judge_prompt, reflection_at, judge_prompt.size(), n,
                                  "reflection order");

            require(!initial_prompt.empty(), "initial query prompt recorded");
            require(initial_prompt.find(candidate) == std::string::npos,
                    "initial query prompt must not contain the candidate answer");
        }
    }

    require(seconds_since(start) < 30.0, "structural suite must finish in under 30 seconds");
}

// --------------------------------------------------------------------------
// 3. Metric oracle equivalence
// --------------------------------------------------------------------------

metrics::VerdictVector as_vector(const std::string& rater, const std::vector<bool>& labels) {
    metrics::VerdictVector v;
    v.rater_id = rater;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        v.set("item-" + std::to_string(i), labels[i]);
    }
    return v;
}

void criterion_metric_oracles() {
    require(metrics::cohen_kappa(as_vector("a", {true, true, false, false}),
                                 as_vector("b", {true, false, false, true})) == 0.0,
            "worked value: kappa([1,1,0,0],[1,0,0,1]) = 0");
    const double fleiss_worked = metrics::fleiss_kappa({{2, 1}, {1, 2}});
    require(std::abs(fleiss_worked - (-1.0 / 3.0)) <= 1e-12,
            "worked value: fleiss([[2,1],[1,2]]) = -1/3");

    std::mt19937 gen(424242);
    std::uniform_int_distribution<int> item_count(1, 20);
    std::uniform_int_distribution<int> rater_count(2, 5);
    std::uniform_int_distribution<int> coin(0, 1);
    const std::vector<std::string> words = {"the", "burj",  "khalifa", "dubai", "1969", "a",
                                            "an",  "nixon", "1,800",   "ft.",   "U.S."};
    std::uniform_int_distribution<std::size_t> pick(0, words.size() - 1);
    std::uniform_int_distribution<int> word_count(0, 5);
    auto random_text = [&] {
        std::string out;
        const int n = word_count(gen);
        for (int i = 0; i < n; ++i) {
            if (!out.empty()) out += ' ';
            out += words[pick(gen)];
        }
        return out;
    };

    for (int trial = 0; trial < 1000; ++trial) {
        const int n = item_count(gen);
        std::vector<bool> a, b;
        for (int i = 0; i < n; ++i) {
            a.push_back(coin(gen) == 1);
            b.push_back(coin(gen) == 1);
        }
        require(std::abs(metrics::cohen_kappa(as_vector("a", a), as_vector("b", b)) -
                         test::oracle::cohen_kappa(a, b)) <= 1e-9,
                "cohen kappa diverged from the oracle");
        require(std::abs(metrics::macro_f1(as_vector("a", a), as_vector("b", b)) -
                         test::oracle::macro_f1(a, b)) <= 1e-9,
                "macro f1 diverged from the oracle");

        const int raters = rater_count(gen);
        std::vector<std::vector<int>> matrix;
        std::vector<std::vector<bool>> by_item;
        for (int i = 0; i < n; ++i) {
            std::vector<bool> labels;
            int positives = 0;
            for (int r = 0; r < raters; ++r) {
                labels.push_back(coin(gen) == 1);
                if (labels.back()) ++positives;
            }
            by_item.push_back(labels);
            matrix.push_back({raters - positives, positives});
        }
        require(std::abs(metrics::fleiss_kappa(matrix) - test::oracle::fleiss_kappa(matrix)) <=
                    1e-9,
                "fleiss kappa diverged from the oracle");

        std::vector<metrics::VerdictVector> rater_vectors;
        for (int r = 0; r < raters; ++r) {
            std::vector<bool> labels;
            for (int i = 0; i < n; ++i) labels.push_back(by_item[i][r]);
            rater_vectors.push_back(as_vector("r" + std::to_string(r), labels));
        }
        require(std::abs(metrics::percent_agreement(rater_vectors) -
                         test::oracle::percent_agreement(by_item)) <= 1e-9,
                "percent agreement diverged from the oracle");

        const std::string answer = random_text();
        std::vector<std::string> references{random_text()};
        if (trial % 3 == 0) references.push_back(random_text());
        require(metrics::exact_match(answer, references) ==
                    test::oracle::exact_match(answer, references),
                "exact match diverged from the oracle");
        require(std::abs(metrics::token_f1(answer, references) -
                         test::oracle::token_f1(answer, references)) <= 1e-9,
                "token f1 diverged from the oracle");
    }
}

// --------------------------------------------------------------------------
// 4. Prompt goldens and example outputs
// --------------------------------------------------------------------------

void criterion_prompt_goldens() {
    const auto& registry = prompts::PromptRegistry::builtin();
    for (prompts::TemplateId id :
         {prompts::TemplateId::candidate_cot, prompts::TemplateId::query_generation,
          prompts::TemplateId::evidence_summarization, prompts::TemplateId::reflection,
          prompts::TemplateId::query_refinement, prompts::TemplateId::judgment}) {
        const auto& tmpl = registry.get(id);
        std::map<std::string, std::string> identity;
        for (const auto& name : tmpl.placeholders) identity[name] = "{" + name + "}";
        std::string golden = test::read_file(std::string(TALE_GOLDEN_DIR) + "/" +
                                             prompts::to_string(id) + ".txt");
        require(!golden.empty(), "golden file present for " + prompts::to_string(id));
        if (golden.back() == '\n') golden.pop_back();
        require(registry.render(id, prompts::PromptVariant::one_shot_cot, identity) == golden,
                "rendered template must byte-match its golden: " + prompts::to_string(id));
    }

    auto proposal = prompts::parse_query_proposal(R"({
  "query": "Apollo 11 moon landing year + NASA + 1969",
  "aspect": "historical event",
  "rationale": "The question asks about Apollo 11's landing year,
                so I'm including NASA, year, and 1969 to get relevant info."
})");
    require(proposal.ok() && proposal.value->query == "Apollo 11 moon landing year + NASA + 1969",
            "query-generation example output parses to the documented query");

    auto refined = prompts::parse_query_proposal(R"({
  "query": "Apollo 11 detailed timeline moon landing 1969",
  "aspect": "chronological sequence",
  "rationale": "The initial query did not specify the temporal progression
                of events."
})");
    require(
        refined.ok() && refined.value->query == "Apollo 11 detailed timeline moon landing 1969",
        "refinement example output parses to the documented query");

    auto reflection = prompts::parse_reflection(R"({
  "reflection": "I observed that the evidence overwhelmingly confirms
                 that Apollo 11 landed on the moon in 1969, though there
                 is slight variation in the reported landing times across
                 sources."
})");
    require(reflection.ok() &&
                reflection.value->reflection.rfind("I observed that the evidence", 0) == 0,
            "reflection example output parses to the documented payload");

    auto judgment = prompts::parse_judgment(R"({
  "decision": "True",
  "explanation": "The evidence overwhelmingly confirms that Apollo 11
                  landed on the moon in 1969."
})");
    require(judgment.ok() && judgment.value->decision &&
                judgment.value->explanation.find("Apollo 11") != std::string::npos,
            "judgment example output parses to the documented payload");
}

// --------------------------------------------------------------------------
// 5. Baseline call-count contracts
// --------------------------------------------------------------------------

void criterion_baseline_contracts() {
    {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        providers::UsageLedger ledger;
        chat.add_rule_text(test::kNoToolMarker, test::judgment_json("True", "fine"));
        baselines::BaselineConfig cfg;
        for (int i = 0; i < 10; ++i) {
            baselines::BaselineContext ctx{chat, search, ledger,
                                           prompts::PromptRegistry::builtin(),
                                           "nt-" + std::to_string(i)};
            auto result = baselines::judge_no_tool(ctx, cfg, "q?", "answer");
            require(!result.errored, "no-tool episode completes");
        }
        require_eq(ledger.snapshot().total_search_queries, std::int64_t{0},
                   "no-tool runs record zero searches");
    }
    {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        providers::UsageLedger ledger;
        providers::ChatResponse samples;
        for (int i = 0; i < 6; ++i) samples.completions.push_back(test::judgment_json("True", "t"));
        for (int i = 0; i < 4; ++i)
            samples.completions.push_back(test::judgment_json("False", "f"));
        chat.add_rule(test::kNoToolMarker, samples);
        baselines::BaselineConfig cfg;
        cfg.kind = baselines::BaselineKind::self_consistency;
        cfg.sample_count = 10;
        baselines::BaselineContext ctx{chat, search, ledger, prompts::PromptRegistry::builtin(),
                                       "sc-1"};
        auto result = baselines::judge_self_consistency(ctx, cfg, "q?", "answer");
        require(!result.errored && result.verdict.decision, "self-consistency majority verdict");
        require_eq(ledger.snapshot().total_search_queries, std::int64_t{0},
                   "self-consistency records zero searches");
        require_eq(static_cast<int>(result.events.size()), 1, "one sampling request");
        require_eq(result.events[0].request.at("sample_count").get<int>(), 10,
                   "self-consistency issues exactly k samples");
        require(result.events[0].request.at("temperature").get<double>() == 0.7,
                "self-consistency samples at temperature 0.7");
        require_eq(static_cast<int>(result.events[0].response.at("completions").size()), 10,
                   "k completions come back");
    }
    {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        providers::UsageLedger ledger;
        chat.add_rule_text(test::kInitialQueryMarker, test::proposal_json("one-shot query"));
        chat.add_rule_text(test::kJudgeMarker, test::judgment_json("True", "ok"));
        search.add("one-shot query", {{"T", "snippet", "url"}});
        baselines::BaselineConfig cfg;
        cfg.kind = baselines::BaselineKind::single_pass_tool;
        for (int i = 0; i < 10; ++i) {
            const std::string item = "sp-" + std::to_string(i);
            baselines::BaselineContext ctx{chat, search, ledger,
                                           prompts::PromptRegistry::builtin(), item};
            auto result = baselines::judge_single_pass(ctx, cfg, "q?", "answer");
            require(!result.errored, "single-pass episode completes");
            require_eq(ledger.item_usage(item).search_queries, std::int64_t{1},
                       "single-pass records exactly one search per item");
        }
    }
    {
        std::mt19937 gen(5150);
        std::uniform_int_distribution<int> size(1, 25);
        std::uniform_int_distribution<int> coin(0, 1);
        for (int trial = 0; trial < 200; ++trial) {
            std::vector<bool> votes;
            const int n = size(gen);
            for (int i = 0; i < n; ++i) votes.push_back(coin(gen) == 1);
            auto forward = baselines::simple_majority(votes);
            std::shuffle(votes.begin(), votes.end(), gen);
            auto shuffled = baselines::simple_majority(votes);
            require(forward.decision == shuffled.decision && forward.tie == shuffled.tie,
                    "majority must be invariant under sample permutation");
        }
    }
}

// --------------------------------------------------------------------------
// 6. Determinism and replay
// --------------------------------------------------------------------------

void write_scenario_inputs(const std::string& dir) {
    std::string dataset;
    std::string candidates;
    for (int i = 1; i <= 3; ++i) {
        dataset += nlohmann::json{{"id", "q" + std::to_string(i)},
                                  {"question", "question " + std::to_string(i) + "?"},
                                  {"references", {"ref " + std::to_string(i)}}}
                       .dump() +
                   "\n";
        candidates +=
            nlohmann::json{{"id", "q" + std::to_string(i)},
                           {"model_id", "cand"},
                           {"full_text", "So the answer is: option-" + std::to_string(i) + "."}}
                .dump() +
            "\n";
    }
    test::write_file(dir + "/dataset.jsonl", dataset);
    test::write_file(dir + "/candidates.jsonl", candidates);
    test::write_file(dir + "/annotations.jsonl",
                     R"({"id":"q1","votes":{"a":true,"b":true,"c":false}})"
                     "\n"
                     R"({"id":"q2","votes":{"a":false,"b":false,"c":true}})"
                     "\n"
                     R"({"id":"q3","votes":{"a":true,"b":true,"c":true}})"
                     "\n");
}

void criterion_determinism_and_replay() {
    const std::string dir = test::make_temp_dir("accept6");
    write_scenario_inputs(dir);

    auto run_once = [&](const std::string& out_dir) {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        test::script_pipeline(chat, search);
        harness::RunConfig cfg;
        cfg.dataset_path = dir + "/dataset.jsonl";
        cfg.candidates_path = dir + "/candidates.jsonl";
        cfg.annotations_path = dir + "/annotations.jsonl";
        cfg.method = harness::Method::tale;
        cfg.episode.iterations = 2;
        cfg.episode.judge_model = "judge-model";
        cfg.sample_size = 3;
        cfg.seed = 17;
        cfg.output_dir = out_dir;
        harness::RunProviders view{&chat, &search};
        return harness::run(cfg, view);
    };
    auto first = run_once(dir + "/run1");
    auto second = run_once(dir + "/run2");
    require(first.records.size() == 3 && second.records.size() == 3, "both runs completed");

    for (const std::string name : {"records.jsonl", "report.json"}) {
        const std::string a = test::read_file(dir + "/run1/" + name);
        const std::string b = test::read_file(dir + "/run2/" + name);
        require(!a.empty() && a == b, "byte-identical artifact across runs: " + name);
    }
    for (const auto& rec : first.records) {
        require(test::read_file(dir + "/run1/" + rec.trace_ref) ==
                    test::read_file(dir + "/run2/" + rec.trace_ref),
                "byte-identical trace for " + rec.item_id);
    }

    auto replayed = harness::replay(dir + "/run1", dir + "/replayed");
    require(replayed.records.size() == 3, "replay yields every record");
    require(test::read_file(dir + "/run1/records.jsonl") ==
                test::read_file(dir + "/replayed/records.jsonl"),
            "replayed records are byte-identical");
    require(test::read_file(dir + "/run1/report.json") ==
                test::read_file(dir + "/replayed/report.json"),
            "replayed agreement report is byte-identical");
}

// --------------------------------------------------------------------------
// 7. Robust parsing corpus
// --------------------------------------------------------------------------

void criterion_parsing_corpus() {
    using prompts::ParseErrorKind;

    enum class Want { query_ok, judgment_true, judgment_false, reflection_ok, error };
    struct Case {
        std::string name;
        std::string raw;
        char parser;  // 'q' proposal, 'j' judgment, 'r' reflection
        Want want;
        ParseErrorKind kind = ParseErrorKind::none;
    };

    const std::vector<Case> corpus = {
        {"plain proposal", R"({"query":"q","aspect":"a","rationale":"r"})", 'q', Want::query_ok},
        {"fenced proposal", "```json\n{\"query\":\"q\",\"aspect\":\"a\",\"rationale\":\"r\"}\n```",
         'q', Want::query_ok},
        {"prose-wrapped proposal",
         "Sure! Here is the JSON you asked for: {\"query\":\"q\",\"aspect\":\"a\","
         "\"rationale\":\"r\"} hope that helps",
         'q', Want::query_ok},
        {"multiline string values",
         "{\n  \"query\": \"line one\nline two\",\n  \"aspect\": \"a\",\n  \"rationale\": "
         "\"r\"\n}",
         'q', Want::query_ok},
        {"single missing key", R"({"query":"q","aspect":"a"})", 'q', Want::error,
         ParseErrorKind::missing_key},
        {"two missing keys", R"({"query":"q"})", 'q', Want::error, ParseErrorKind::missing_key},
        {"empty query value", R"({"query":"","aspect":"a","rationale":"r"})", 'q', Want::error,
         ParseErrorKind::empty_field},
        {"non-string query", R"({"query":17,"aspect":"a","rationale":"r"})", 'q', Want::error,
         ParseErrorKind::wrong_type},
        {"no json at all", "I could not come up with a query.", 'q', Want::error,
         ParseErrorKind::no_json_object},
        {"array is not an object", R"(["query","aspect","rationale"])", 'q', Want::error,
         ParseErrorKind::no_json_object},
        {"unterminated object", R"({"query":"q","aspect":"a","rationale":"r")", 'q', Want::error,
         ParseErrorKind::no_json_object},
        {"bad object then good object",
         "{oops} then {\"query\":\"q\",\"aspect\":\"a\",\"rationale\":\"r\"}", 'q',
         Want::query_ok},
        {"single quotes are not json", R"({'query':'q','aspect':'a','rationale':'r'})", 'q',
         Want::error, ParseErrorKind::no_json_object},
        {"nested braces in rationale",
         R"({"query":"q","aspect":"a","rationale":"uses {braces} inside"})", 'q', Want::query_ok},
        {"plain true judgment", R"({"decision":"True","explanation":"confirmed"})", 'j',
         Want::judgment_true},
        {"plain false judgment", R"({"decision":"False","explanation":"refuted"})", 'j',
         Want::judgment_false},
        {"lowercase literal", R"({"decision":"true","explanation":"confirmed"})", 'j',
         Want::judgment_true},
        {"uppercase literal", R"({"decision":"FALSE","explanation":"refuted"})", 'j',
         Want::judgment_false},
        {"raw boolean decision", R"({"decision":true,"explanation":"confirmed"})", 'j',
         Want::judgment_true},
        {"out-of-domain literal", R"({"decision":"maybe","explanation":"unsure"})", 'j',
         Want::error, ParseErrorKind::bad_literal},
        {"numeric decision", R"({"decision":1,"explanation":"confirmed"})", 'j', Want::error,
         ParseErrorKind::bad_literal},
        {"missing decision", R"({"explanation":"no verdict"})", 'j', Want::error,
         ParseErrorKind::missing_key},
        {"missing explanation", R"({"decision":"True"})", 'j', Want::error,
         ParseErrorKind::missing_key},
        {"empty explanation", R"({"decision":"True","explanation":""})", 'j', Want::error,
         ParseErrorKind::empty_field},
        {"fenced judgment", "```\n{\"decision\":\"False\",\"explanation\":\"refuted\"}\n```", 'j',
         Want::judgment_false},
        {"judgment with preamble and trailing prose",
         "After thinking it through:\n{\"decision\":\"True\",\"explanation\":\"ok\"}\nThanks!",
         'j', Want::judgment_true},
        {"plain reflection", R"({"reflection":"the evidence is thin"})", 'r', Want::reflection_ok},
        {"reflection with fences", "```json\n{\"reflection\":\"needs more sources\"}\n```", 'r',
         Want::reflection_ok},
        {"empty reflection", R"({"reflection":""})", 'r', Want::error,
         ParseErrorKind::empty_field},
        {"reflection key missing", R"({"thoughts":"wrong key"})", 'r', Want::error,
         ParseErrorKind::missing_key},
    };

    require(corpus.size() == 30, "the corpus holds exactly 30 cases");

    for (const auto& entry : corpus) {
        switch (entry.parser) {
            case 'q': {
                auto parsed = prompts::parse_query_proposal(entry.raw);
                if (entry.want == Want::query_ok) {
                    require(parsed.ok(), entry.name + ": expected a payload");
                    require(!parsed.value->query.empty(), entry.name + ": query populated");
                } else {
                    require(!parsed.ok() && parsed.error.kind == entry.kind,
                            entry.name + ": expected " + prompts::to_string(entry.kind) + ", got " +
                                prompts::to_string(parsed.error.kind));
                    require(parsed.error.raw == entry.raw,
                            entry.name + ": error carries the raw text");
                }
                break;
            }
            case 'j': {
                auto parsed = prompts::parse_judgment(entry.raw);
                if (entry.want == Want::judgment_true || entry.want == Want::judgment_false) {
                    require(parsed.ok(), entry.name + ": expected a payload");
                    require(parsed.value->decision == (entry.want == Want::judgment_true),
                            entry.name + ": decision value");
                } else {
                    require(!parsed.ok() && parsed.error.kind == entry.kind,
                            entry.name + ": expected " + prompts::to_string(entry.kind) + ", got " +
                                prompts::to_string(parsed.error.kind));
                }
                break;
            }
            case 'r': {
                auto parsed = prompts::parse_reflection(entry.raw);
                if (entry.want == Want::reflection_ok) {
                    require(parsed.ok(), entry.name + ": expected a payload");
                } else {
                    require(!parsed.ok() && parsed.error.kind == entry.kind,
                            entry.name + ": expected " + prompts::to_string(entry.kind) + ", got " +
                                prompts::to_string(parsed.error.kind));
                }
                break;
            }
            default: throw CheckFailure("unknown parser tag");
        }
    }
}

// --------------------------------------------------------------------------
// 8. End-to-end scripted scenario
// --------------------------------------------------------------------------

void criterion_theme_song_scenario() {
    const std::string question = "Who sings the theme song for the show Half & Half?";
    const std::string candidate =
        "Let's think step by step. The theme song is performed by Erica Campbell.\n"
        "So the answer is: Erica Campbell.";

    // Judged on pre-trained knowledge alone, the wrong answer sails through.
    {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        providers::UsageLedger ledger;
        chat.add_rule_text(test::kNoToolMarker,
                           test::judgment_json("True",
                                               "Erica Campbell is a known gospel singer, so the "
                                               "answer sounds right."));
        baselines::BaselineContext ctx{chat, search, ledger, prompts::PromptRegistry::builtin(),
                                       "half-and-half"};
        auto no_tool =
            baselines::judge_no_tool(ctx, baselines::BaselineConfig{}, question, candidate);
        require(!no_tool.errored && no_tool.verdict.decision,
                "the no-tool baseline accepts the wrong answer");
        require_eq(ledger.snapshot().total_search_queries, std::int64_t{0},
                   "no-tool used no search");
    }

    // The evidence loop retrieves the actual performer and rejects it.
    {
        providers::ScriptedChatProvider chat;
        providers::ScriptedSearchProvider search;
        providers::UsageLedger ledger;
        chat.add_rule_text(test::kInitialQueryMarker,
                           test::proposal_json("Half & Half sitcom theme song performer",
                                               "theme song attribution",
                                               "find who actually performs it"));
        chat.add_rule_text(test::kRefineMarker,
                           test::proposal_json("Half & Half theme song Melonie Daniels credits"));
        chat.add_rule_text(
            test::kSummarizeMarker,
            "Multiple sources state that Melonie Daniels performed the Half & Half theme song.");
        chat.add_rule_text(
            test::kReflectMarker,
            test::reflection_json("The evidence names Melonie Daniels as the performer, which "
                                  "contradicts the candidate answer of Erica Campbell."));
        chat.add_rule_text(
            test::kJudgeMarker,
            test::judgment_json("False",
                                "The gathered evidence shows Melonie Daniels performed the theme "
                                "song, contradicting the candidate's claim of Erica Campbell."));
        search.add("Half & Half sitcom theme song performer",
                   {{"Half & Half (TV series)",
                     "The theme song was performed by Melonie Daniels.", "https://enc.example"},
                    {"Theme credits", "Melonie Daniels recorded the opening theme.",
                     "https://credits.example"},
                    {"Fan wiki", "Opening performed by Melonie Daniels.", "https://wiki.example"}});
        search.add("Half & Half theme song Melonie Daniels credits",
                   {{"Discography", "Melonie Daniels, session vocalist, Half & Half theme.",
                     "https://disc.example"}});

        pipeline::EpisodeConfig config;
        config.iterations = 2;
        config.judge_model = "judge-model";
        auto result =
            pipeline::run_episode(chat, search, ledger, prompts::PromptRegistry::builtin(),
                                  config, "half-and-half", question, candidate);
        require(!result.errored, "evidence-loop episode completes: " + result.error);
        require(!result.verdict.decision, "the evidence loop rejects the wrong answer");
        require(result.verdict.rationale.find("Melonie Daniels") != std::string::npos,
                "the rationale cites the retrieved evidence");
        require_eq(ledger.item_usage("half-and-half").search_queries, std::int64_t{2},
                   "one search per iteration");
    }
}

struct Criterion {
    int number;
    std::string name;
    std::function<void()> body;
};

}  // namespace

int main() {
    const std::vector<Criterion> criteria = {
        {1, "cost arithmetic reproduction", criterion_cost_arithmetic},
        {2, "episode loop structural suite", criterion_loop_structure},
        {3, "metric oracle equivalence", criterion_metric_oracles},
        {4, "prompt golden files and example outputs", criterion_prompt_goldens},
        {5, "baseline call-count contracts", criterion_baseline_contracts},
        {6, "determinism and replay", criterion_determinism_and_replay},
        {7, "robust parsing corpus", criterion_parsing_corpus},
        {8, "end-to-end scripted scenario", criterion_theme_song_scenario},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        try {
            criterion.body();
            std::printf("PASS  criterion %d: %s\n", criterion.number, criterion.name.c_str());
        } catch (const std::exception& ex) {
            ++failures;
            std::printf("FAIL  criterion %d: %s — %s\n", criterion.number, criterion.name.c_str(),
                        ex.what());
        }
    }
    if (failures > 0) {
        std::printf("%d criterion(s) failed\n", failures);
    } else {
        std::printf("all %zu criteria passed\n", criteria.size());
    }
    return failures;
}
