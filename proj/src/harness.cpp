#include "tale/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <random>
#include <set>
#include <sstream>
#include <thread>

#include "tale/jsonl.hpp"

namespace tale::harness {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Dataset
// ---------------------------------------------------------------------------

std::vector<DatasetRecord> load_dataset(const std::string& path) {
    std::vector<DatasetRecord> records;
    std::set<std::string> seen;
    for_each_jsonl_record(path, [&](const nlohmann::json& j, std::size_t line) {
        DatasetRecord rec;
        if (!j.contains("id") || !j.at("id").is_string()) {
            throw JsonlError(path, line, "record needs a string 'id'");
        }
        rec.id = j.at("id").get<std::string>();
        if (!seen.insert(rec.id).second) {
            throw JsonlError(path, line, "duplicate id '" + rec.id + "'");
        }
        if (!j.contains("question") || !j.at("question").is_string() ||
            j.at("question").get<std::string>().empty()) {
            throw JsonlError(path, line, "record needs a non-empty 'question'");
        }
        rec.question = j.at("question").get<std::string>();
        if (!j.contains("references") || !j.at("references").is_array() ||
            j.at("references").empty()) {
            throw JsonlError(path, line, "record needs a non-empty 'references' array");
        }
        for (const auto& ref : j.at("references")) {
            if (!ref.is_string()) throw JsonlError(path, line, "references must be strings");
            rec.references.push_back(ref.get<std::string>());
        }
        if (j.contains("metadata")) {
            for (const auto& [key, value] : j.at("metadata").items()) {
                rec.metadata[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
        }
        records.push_back(std::move(rec));
    });
    return records;
}

std::vector<DatasetRecord> sample_records(const std::vector<DatasetRecord>& records,
                                          std::size_t n, std::uint64_t seed) {
    if (n > records.size()) {
        throw std::invalid_argument("sample size " + std::to_string(n) +
                                    " exceeds dataset size " + std::to_string(records.size()));
    }
    std::vector<DatasetRecord> shuffled = records;
    std::mt19937_64 gen(seed);
    // Pinned shuffle: Fisher-Yates with the index drawn by modulo, so the
    // sample is reproducible across standard library implementations.
    for (std::size_t i = shuffled.size(); i > 1; --i) {
        const std::size_t j = static_cast<std::size_t>(gen() % i);
        std::swap(shuffled[i - 1], shuffled[j]);
    }
    shuffled.resize(n);
    return shuffled;
}

// ---------------------------------------------------------------------------
// Methods / prices / config
// ---------------------------------------------------------------------------

std::string to_string(Method m) {
    switch (m) {
        case Method::tale: return "tale";
        case Method::no_tool: return "no_tool";
        case Method::single_pass: return "single_pass";
        case Method::self_consistency: return "self_consistency";
        case Method::multi_llm: return "multi_llm";
        case Method::em_f1: return "em_f1";
    }
    return "tale";
}

Method method_from_string(const std::string& s) {
    if (s == "tale") return Method::tale;
    if (s == "no_tool") return Method::no_tool;
    if (s == "single_pass") return Method::single_pass;
    if (s == "self_consistency") return Method::self_consistency;
    if (s == "multi_llm") return Method::multi_llm;
    if (s == "em_f1") return Method::em_f1;
    throw std::invalid_argument("unknown method: " + s);
}

void PriceTable::validate() const {
    if (input_per_million <= money::Rational(0) || output_per_million <= money::Rational(0) ||
        search_per_thousand <= money::Rational(0)) {
        throw std::invalid_argument("prices must be positive");
    }
}

void to_json(nlohmann::json& j, const PriceTable& p) {
    j = nlohmann::json{{"input_per_million", money::rational_to_json(p.input_per_million)},
                       {"output_per_million", money::rational_to_json(p.output_per_million)},
                       {"search_per_thousand", money::rational_to_json(p.search_per_thousand)}};
}

void from_json(const nlohmann::json& j, PriceTable& p) {
    p.input_per_million = money::rational_from_json(j.at("input_per_million"));
    p.output_per_million = money::rational_from_json(j.at("output_per_million"));
    p.search_per_thousand = money::rational_from_json(j.at("search_per_thousand"));
}

nlohmann::json run_config_to_json(const RunConfig& cfg) {
    return nlohmann::json{{"dataset_path", cfg.dataset_path},
                          {"method", to_string(cfg.method)},
                          {"episode", cfg.episode},
                          {"baseline", cfg.baseline},
                          {"sample_size", cfg.sample_size},
                          {"seed", cfg.seed},
                          {"candidates_path", cfg.candidates_path},
                          {"candidate_model", cfg.candidate_model},
                          {"annotations_path", cfg.annotations_path},
                          {"prompts_dir", cfg.prompts_dir},
                          {"output_dir", cfg.output_dir},
                          {"prices", cfg.prices},
                          {"workers", cfg.workers},
                          {"f1_tau", cfg.f1_tau}};
}

RunConfig run_config_from_json(const nlohmann::json& j) {
    RunConfig cfg;
    cfg.dataset_path = j.at("dataset_path").get<std::string>();
    cfg.method = method_from_string(j.at("method").get<std::string>());
    cfg.episode = j.at("episode").get<pipeline::EpisodeConfig>();
    cfg.baseline = j.at("baseline").get<baselines::BaselineConfig>();
    cfg.sample_size = j.at("sample_size").get<int>();
    cfg.seed = j.at("seed").get<std::uint64_t>();
    cfg.candidates_path = j.at("candidates_path").get<std::string>();
    cfg.candidate_model = j.at("candidate_model").get<std::string>();
    cfg.annotations_path = j.at("annotations_path").get<std::string>();
    cfg.prompts_dir = j.value("prompts_dir", "");
    cfg.output_dir = j.at("output_dir").get<std::string>();
    cfg.prices = j.at("prices").get<PriceTable>();
    cfg.workers = j.at("workers").get<int>();
    cfg.f1_tau = j.at("f1_tau").get<double>();
    return cfg;
}

// ---------------------------------------------------------------------------
// Cost
// ---------------------------------------------------------------------------

CostReport cost_report(const providers::UsageSnapshot& usage, const PriceTable& prices,
                       int n_items, double wall_seconds) {
    if (n_items < 1) throw std::invalid_argument("cost report needs n_items >= 1");
    prices.validate();
    CostReport report;
    report.n_items = n_items;
    report.wall_seconds = wall_seconds;
    report.llm_cost = money::Rational(usage.total_input_tokens) * prices.input_per_million /
                          money::Rational(1'000'000) +
                      money::Rational(usage.total_output_tokens) * prices.output_per_million /
                          money::Rational(1'000'000);
    report.search_cost = money::Rational(usage.total_search_queries) * prices.search_per_thousand /
                         money::Rational(1'000);
    report.total_cost = report.llm_cost + report.search_cost;
    report.per_item_cost = report.total_cost / money::Rational(n_items);
    return report;
}

std::string CostReport::display_llm_per_item() const {
    return money::format_money_ceil(llm_cost / money::Rational(n_items), 5);
}

std::string CostReport::display_search_per_item() const {
    return money::format_money_ceil(search_cost / money::Rational(n_items), 5);
}

std::string CostReport::display_per_item() const {
    return money::format_money_ceil(per_item_cost, 5);
}

std::string CostReport::display_total() const {
    return money::format_money_ceil(total_cost, 2);
}

nlohmann::json cost_report_to_json(const CostReport& report) {
    return nlohmann::json{
        {"llm_cost", money::rational_to_json(report.llm_cost)},
        {"search_cost", money::rational_to_json(report.search_cost)},
        {"total_cost", money::rational_to_json(report.total_cost)},
        {"per_item_cost", money::rational_to_json(report.per_item_cost)},
        {"llm_cost_approx", money::to_double(report.llm_cost)},
        {"search_cost_approx", money::to_double(report.search_cost)},
        {"total_cost_approx", money::to_double(report.total_cost)},
        {"per_item_cost_approx", money::to_double(report.per_item_cost)},
        {"display", nlohmann::json{{"llm_per_item", report.display_llm_per_item()},
                                   {"search_per_item", report.display_search_per_item()},
                                   {"per_item", report.display_per_item()},
                                   {"total", report.display_total()}}},
        {"n_items", report.n_items},
        {"wall_seconds", report.wall_seconds}};
}

// ---------------------------------------------------------------------------
// Evaluation records
// ---------------------------------------------------------------------------

void to_json(nlohmann::json& j, const EvaluationRecord& r) {
    j = nlohmann::json{{"item_id", r.item_id},
                       {"method", r.method},
                       {"candidate", r.candidate},
                       {"flags", r.flags},
                       {"usage", r.usage},
                       {"trace_ref", r.trace_ref},
                       {"error", r.error}};
    j["verdict"] = r.verdict ? nlohmann::json(*r.verdict) : nlohmann::json();
    j["em"] = r.em ? nlohmann::json(*r.em) : nlohmann::json();
    j["f1"] = r.f1 ? nlohmann::json(*r.f1) : nlohmann::json();
}

void from_json(const nlohmann::json& j, EvaluationRecord& r) {
    r.item_id = j.at("item_id").get<std::string>();
    r.method = j.at("method").get<std::string>();
    r.candidate = j.at("candidate").get<candidates::CandidateAnswer>();
    r.flags = j.at("flags").get<std::vector<std::string>>();
    r.usage = j.at("usage").get<providers::ItemUsage>();
    r.trace_ref = j.at("trace_ref").get<std::string>();
    r.error = j.at("error").get<std::string>();
    r.verdict = j.at("verdict").is_null()
                    ? std::nullopt
                    : std::optional<pipeline::Verdict>(j.at("verdict").get<pipeline::Verdict>());
    r.em = j.at("em").is_null() ? std::nullopt : std::optional<int>(j.at("em").get<int>());
    r.f1 = j.at("f1").is_null() ? std::nullopt : std::optional<double>(j.at("f1").get<double>());
}

// ---------------------------------------------------------------------------
// Annotations and agreement
// ---------------------------------------------------------------------------

AnnotationSet load_annotations(const std::string& path) {
    std::map<std::string, metrics::VerdictVector> raters;
    std::set<std::string> rater_ids;
    bool first = true;
    for_each_jsonl_record(path, [&](const nlohmann::json& j, std::size_t line) {
        const std::string id = j.at("id").get<std::string>();
        if (!j.contains("votes") || !j.at("votes").is_object() || j.at("votes").empty()) {
            throw JsonlError(path, line, "annotation record needs a non-empty 'votes' object");
        }
        std::set<std::string> line_raters;
        for (const auto& [rater, vote] : j.at("votes").items()) {
            if (!vote.is_boolean() && !vote.is_number_integer()) {
                throw JsonlError(path, line, "votes must be booleans or 0/1");
            }
            const bool value = vote.is_boolean() ? vote.get<bool>() : vote.get<int>() != 0;
            raters[rater].rater_id = rater;
            raters[rater].set(id, value);
            line_raters.insert(rater);
        }
        if (first) {
            rater_ids = line_raters;
            first = false;
        } else if (line_raters != rater_ids) {
            throw JsonlError(path, line, "every item must carry the same rater set");
        }
    });
    AnnotationSet out;
    for (auto& [_, vector] : raters) out.raters.push_back(std::move(vector));
    return out;
}

namespace {

/// Restricts two vectors to their common ids (alignment is by id).
std::pair<metrics::VerdictVector, metrics::VerdictVector> restrict_to_common(
    const metrics::VerdictVector& a, const metrics::VerdictVector& b) {
    metrics::VerdictVector ra{a.rater_id, {}};
    metrics::VerdictVector rb{b.rater_id, {}};
    for (const auto& [id, label] : a.labels) {
        auto it = b.labels.find(id);
        if (it != b.labels.end()) {
            ra.labels[id] = label;
            rb.labels[id] = it->second;
        }
    }
    return {ra, rb};
}

}  // namespace

metrics::AgreementReport agreement_against(const metrics::VerdictVector& evaluator,
                                           const AnnotationSet& annotations) {
    if (annotations.raters.empty()) throw std::invalid_argument("no annotation raters");
    metrics::AgreementReport report;
    metrics::VerdictVector gold;
    if (annotations.raters.size() >= 2) {
        gold = metrics::majority_vote(annotations.raters);
        report.percent_agreement = metrics::percent_agreement(annotations.raters);
        std::vector<std::vector<int>> matrix;
        for (const auto& [id, _] : annotations.raters[0].labels) {
            int positives = 0;
            for (const auto& rater : annotations.raters) {
                if (rater.labels.at(id)) ++positives;
            }
            matrix.push_back({static_cast<int>(annotations.raters.size()) - positives, positives});
        }
        report.fleiss_kappa = metrics::fleiss_kappa(matrix);
    } else {
        gold = annotations.raters[0];
        auto [e, g] = restrict_to_common(evaluator, gold);
        report.percent_agreement = metrics::percent_agreement({e, g});
    }
    report.cohen_kappa = metrics::cohen_kappa(evaluator, gold);
    report.macro_f1 = metrics::macro_f1(evaluator, gold);
    auto [e, g] = restrict_to_common(evaluator, gold);
    report.n_items = static_cast<int>(e.labels.size());
    return report;
}

// ---------------------------------------------------------------------------
// Per-item evaluation
// ---------------------------------------------------------------------------

namespace {

std::vector<std::string> sorted_unique(std::vector<std::string> flags) {
    std::sort(flags.begin(), flags.end());
    flags.erase(std::unique(flags.begin(), flags.end()), flags.end());
    return flags;
}

nlohmann::json method_config_json(const RunConfig& cfg) {
    switch (cfg.method) {
        case Method::tale: return cfg.episode;
        case Method::em_f1: return nlohmann::json{{"f1_tau", cfg.f1_tau}};
        default: return cfg.baseline;
    }
}

struct ItemOutcome {
    EvaluationRecord record;
    trace::EpisodeTrace trace;
};

ItemOutcome evaluate_item(const RunConfig& cfg, const DatasetRecord& item,
                          const candidates::CandidateAnswer& candidate,
                          std::vector<trace::TraceEvent> candidate_events,
                          const RunProviders& run_providers, providers::UsageLedger& ledger,
                          const prompts::PromptRegistry& registry) {
    ItemOutcome out;
    trace::EpisodeTrace& t = out.trace;
    t.episode_id = item.id;
    t.method = to_string(cfg.method);
    t.config = method_config_json(cfg);
    t.question = item.question;
    t.candidate_answer = candidate.full_text;
    t.extra = nlohmann::json{{"candidate", candidate}};
    t.events = std::move(candidate_events);

    EvaluationRecord& rec = out.record;
    rec.item_id = item.id;
    rec.method = t.method;
    rec.candidate = candidate;
    rec.trace_ref = "traces/" + item.id + ".json";

    if (cfg.method == Method::em_f1) {
        rec.em = metrics::exact_match(candidate.final_answer, item.references);
        rec.f1 = metrics::token_f1(candidate.final_answer, item.references);
        t.extra["references"] = item.references;
        t.extra["em"] = *rec.em;
        t.extra["f1"] = *rec.f1;
        t.memory = nlohmann::json::array();
        t.verdict = nullptr;
    } else {
        pipeline::EpisodeResult result;
        baselines::BaselineContext ctx{*run_providers.chat, *run_providers.search, ledger,
                                       registry, item.id};
        switch (cfg.method) {
            case Method::tale:
                result = pipeline::run_episode(*run_providers.chat, *run_providers.search, ledger,
                                               registry, cfg.episode, item.id, item.question,
                                               candidate.full_text);
                break;
            case Method::no_tool:
                result = baselines::judge_no_tool(ctx, cfg.baseline, item.question,
                                                  candidate.full_text);
                break;
            case Method::single_pass:
                result = baselines::judge_single_pass(ctx, cfg.baseline, item.question,
                                                      candidate.full_text);
                break;
            case Method::self_consistency:
                result = baselines::judge_self_consistency(ctx, cfg.baseline, item.question,
                                                           candidate.full_text);
                break;
            case Method::multi_llm:
                result = baselines::judge_multi_llm(ctx, cfg.baseline, item.question,
                                                    candidate.full_text);
                break;
            default: break;
        }
        t.events.insert(t.events.end(), result.events.begin(), result.events.end());
        t.memory = result.memory.entries();
        t.flags = result.flags;
        t.error = result.error;
        rec.error = result.error;
        rec.flags = sorted_unique(result.flags);
        if (!result.errored) {
            t.verdict = result.verdict;
            rec.verdict = result.verdict;
        } else {
            t.verdict = nullptr;
        }
    }

    rec.usage = ledger.item_usage(item.id);
    t.usage = rec.usage;
    return out;
}

metrics::VerdictVector vector_from_records(const std::vector<EvaluationRecord>& records,
                                           const std::string& rater_id,
                                           const std::function<std::optional<bool>(
                                               const EvaluationRecord&)>& label_of) {
    metrics::VerdictVector v;
    v.rater_id = rater_id;
    for (const auto& rec : records) {
        if (auto label = label_of(rec)) v.set(rec.item_id, *label);
    }
    return v;
}

nlohmann::json build_report(const RunConfig& cfg, const std::vector<EvaluationRecord>& records,
                            const AnnotationSet& annotations) {
    int errored = 0;
    for (const auto& rec : records) {
        if (!rec.ok()) ++errored;
    }
    nlohmann::json vectors = nlohmann::json::object();
    auto add_vector = [&](const std::string& name, const metrics::VerdictVector& v) {
        try {
            vectors[name] = agreement_against(v, annotations);
        } catch (const std::exception& ex) {
            vectors[name] = nlohmann::json{{"error", ex.what()}};
        }
    };
    if (cfg.method == Method::em_f1) {
        add_vector("em", vector_from_records(records, "em", [](const EvaluationRecord& r) {
                       return r.ok() && r.em ? std::optional<bool>(*r.em == 1) : std::nullopt;
                   }));
        const double tau = cfg.f1_tau;
        add_vector("f1", vector_from_records(records, "f1", [tau](const EvaluationRecord& r) {
                       return r.ok() && r.f1
                                  ? std::optional<bool>(metrics::binarize_f1(*r.f1, tau) == 1)
                                  : std::nullopt;
                   }));
    } else {
        // Errored items are excluded from agreement but still tallied.
        add_vector(to_string(cfg.method),
                   vector_from_records(records, to_string(cfg.method),
                                       [](const EvaluationRecord& r) {
                                           return r.ok() && r.verdict
                                                      ? std::optional<bool>(r.verdict->decision)
                                                      : std::nullopt;
                                       }));
    }
    return nlohmann::json{{"schema_version", trace::kSchemaVersion},
                          {"method", to_string(cfg.method)},
                          {"n_sampled", records.size()},
                          {"n_errored", errored},
                          {"vectors", vectors}};
}

void write_text(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << content;
}

void write_records(const std::string& path, const std::vector<EvaluationRecord>& records) {
    std::string body;
    for (const auto& rec : records) {
        body += nlohmann::json(rec).dump();
        body += '\n';
    }
    write_text(path, body);
}

}  // namespace

// ---------------------------------------------------------------------------
// Run
// ---------------------------------------------------------------------------

RunOutput run(const RunConfig& cfg, const RunProviders& run_providers) {
    const auto started = std::chrono::steady_clock::now();

    if (cfg.dataset_path.empty()) throw std::invalid_argument("dataset path not set");
    if (cfg.output_dir.empty()) throw std::invalid_argument("output dir not set");
    if (cfg.workers < 1) throw std::invalid_argument("workers must be >= 1");
    cfg.prices.validate();
    if (cfg.method == Method::tale) cfg.episode.validate();
    if (cfg.method != Method::tale && cfg.method != Method::em_f1) cfg.baseline.validate();

    const bool needs_chat = cfg.method != Method::em_f1 || !cfg.candidate_model.empty();
    const bool needs_search =
        cfg.method == Method::tale || cfg.method == Method::single_pass;
    if (needs_chat && run_providers.chat == nullptr) {
        throw std::invalid_argument("method requires a chat provider");
    }
    if (needs_search && run_providers.search == nullptr) {
        throw std::invalid_argument("method requires a search provider");
    }
    if (cfg.candidates_path.empty() && cfg.candidate_model.empty()) {
        throw std::invalid_argument("need a candidates file or a candidate model");
    }

    const auto dataset = load_dataset(cfg.dataset_path);
    const std::size_t n = cfg.sample_size > 0 ? static_cast<std::size_t>(cfg.sample_size)
                                              : dataset.size();
    const auto sampled = sample_records(dataset, n, cfg.seed);

    std::map<std::string, candidates::CandidateAnswer> preloaded;
    if (!cfg.candidates_path.empty()) {
        std::set<std::string> ids;
        for (const auto& rec : dataset) ids.insert(rec.id);
        auto loaded = candidates::load_candidates(cfg.candidates_path, ids);
        for (const auto& warning : loaded.warnings) std::cerr << "warning: " << warning << "\n";
        for (auto& [id, answer] : loaded.items) preloaded[id] = std::move(answer);
        for (const auto& item : sampled) {
            if (!preloaded.contains(item.id)) {
                throw std::invalid_argument("no candidate answer for sampled item '" + item.id +
                                            "'");
            }
        }
    }

    fs::create_directories(fs::path(cfg.output_dir) / "traces");

    const prompts::PromptRegistry registry =
        cfg.prompts_dir.empty() ? prompts::PromptRegistry::builtin()
                                : prompts::PromptRegistry::with_overrides(cfg.prompts_dir);
    providers::UsageLedger ledger;
    std::vector<EvaluationRecord> records(sampled.size());
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next.fetch_add(1); i < sampled.size(); i = next.fetch_add(1)) {
            const DatasetRecord& item = sampled[i];
            try {
                candidates::CandidateAnswer candidate;
                std::vector<trace::TraceEvent> candidate_events;
                if (auto it = preloaded.find(item.id); it != preloaded.end()) {
                    candidate = it->second;
                } else {
                    candidate = candidates::generate_candidate(
                        item.question, cfg.candidate_model, *run_providers.chat, ledger,
                        registry, item.id, cfg.episode.prompt_variant, &candidate_events);
                }
                ItemOutcome outcome =
                    evaluate_item(cfg, item, candidate, std::move(candidate_events),
                                  run_providers, ledger, registry);
                trace::save_trace(outcome.trace,
                                  (fs::path(cfg.output_dir) / outcome.record.trace_ref).string());
                records[i] = std::move(outcome.record);
            } catch (const std::exception& ex) {
                EvaluationRecord rec;
                rec.item_id = item.id;
                rec.method = to_string(cfg.method);
                rec.error = ex.what();
                rec.trace_ref = "traces/" + item.id + ".json";
                trace::EpisodeTrace t;
                t.episode_id = item.id;
                t.method = rec.method;
                t.config = method_config_json(cfg);
                t.question = item.question;
                t.error = rec.error;
                t.memory = nlohmann::json::array();
                t.verdict = nullptr;
                t.usage = providers::ItemUsage{};
                t.extra = nlohmann::json{{"candidate", rec.candidate}};
                try {
                    trace::save_trace(t, (fs::path(cfg.output_dir) / rec.trace_ref).string());
                } catch (const std::exception& save_ex) {
                    std::cerr << "warning: could not persist trace for " << item.id << ": "
                              << save_ex.what() << "\n";
                }
                records[i] = std::move(rec);
            }
        }
    };

    if (cfg.workers == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < cfg.workers; ++w) pool.emplace_back(worker);
        for (auto& thread : pool) thread.join();
    }

    RunOutput out;
    out.output_dir = cfg.output_dir;
    out.records = std::move(records);

    write_records((fs::path(cfg.output_dir) / "records.jsonl").string(), out.records);

    nlohmann::json manifest{{"schema_version", trace::kSchemaVersion},
                            {"config", run_config_to_json(cfg)},
                            {"items", nlohmann::json::array()}};
    for (const auto& item : sampled) manifest["items"].push_back(item.id);
    write_text((fs::path(cfg.output_dir) / "run_config.json").string(), manifest.dump(2) + "\n");

    if (!cfg.annotations_path.empty()) {
        out.report = build_report(cfg, out.records, load_annotations(cfg.annotations_path));
    }
    write_text((fs::path(cfg.output_dir) / "report.json").string(), out.report.dump(2) + "\n");

    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    out.cost = cost_report(ledger.snapshot(), cfg.prices,
                           std::max<int>(1, static_cast<int>(out.records.size())), wall);
    write_text((fs::path(cfg.output_dir) / "cost.json").string(),
               cost_report_to_json(out.cost).dump(2) + "\n");
    return out;
}

// ---------------------------------------------------------------------------
// Ablation
// ---------------------------------------------------------------------------

std::vector<std::pair<int, nlohmann::json>> ablate_iterations(const RunConfig& cfg,
                                                              const RunProviders& run_providers,
                                                              const std::vector<int>& n_values) {
    if (n_values.empty()) throw std::invalid_argument("no iteration counts given");
    std::vector<std::pair<int, nlohmann::json>> reports;
    for (int n : n_values) {
        RunConfig sub = cfg;
        sub.method = Method::tale;
        sub.episode.iterations = n;
        sub.output_dir = (fs::path(cfg.output_dir) / ("N=" + std::to_string(n))).string();
        RunOutput result = run(sub, run_providers);
        reports.emplace_back(n, result.report);
    }
    nlohmann::json summary = nlohmann::json::array();
    for (const auto& [n, report] : reports) {
        summary.push_back({{"iterations", n}, {"report", report}});
    }
    fs::create_directories(cfg.output_dir);
    write_text((fs::path(cfg.output_dir) / "ablation.json").string(), summary.dump(2) + "\n");
    return reports;
}

// ---------------------------------------------------------------------------
// Replay
// ---------------------------------------------------------------------------

namespace {

struct DerivedJudgment {
    std::optional<pipeline::Verdict> verdict;
    std::vector<std::string> flags;
    bool missing = false;
};

/// Re-runs the parse-and-degrade logic over the judgment events of one
/// purpose, mirroring the live retry behavior.
DerivedJudgment derive_simple_judgment(const std::vector<trace::TraceEvent>& events,
                                       const std::string& purpose) {
    DerivedJudgment out;
    std::vector<const trace::TraceEvent*> attempts;
    for (const auto& e : events) {
        if (e.kind == "chat" && e.purpose == purpose) attempts.push_back(&e);
    }
    if (attempts.empty()) {
        out.missing = true;
        return out;
    }
    for (const auto* event : attempts) {
        const auto completions = event->response.at("completions");
        auto parsed = prompts::parse_judgment(completions.at(0).get<std::string>());
        for (const auto& w : parsed.warnings) out.flags.push_back(w);
        if (parsed.ok()) {
            out.verdict = pipeline::Verdict{parsed.value->decision, parsed.value->explanation};
            return out;
        }
    }
    out.flags.push_back(std::string(pipeline::kFlagJudgmentUnparseable));
    out.verdict =
        pipeline::Verdict{false, std::string(pipeline::kUnparseableJudgmentRationale)};
    return out;
}

DerivedJudgment derive_self_consistency(const std::vector<trace::TraceEvent>& events) {
    DerivedJudgment out;
    const trace::TraceEvent* sc_event = nullptr;
    for (const auto& e : events) {
        if (e.kind == "chat" && e.purpose == "sc_judge") sc_event = &e;
    }
    if (sc_event == nullptr) {
        out.missing = true;
        return out;
    }
    const auto completions =
        sc_event->response.at("completions").get<std::vector<std::string>>();
    std::vector<prompts::JudgmentPayload> samples;
    for (const auto& completion : completions) {
        auto parsed = prompts::parse_judgment(completion);
        if (parsed.ok()) samples.push_back(*parsed.value);
    }
    const int k = static_cast<int>(completions.size());
    const int dropped = k - static_cast<int>(samples.size());
    if (2 * dropped > k) {
        out.flags.push_back("sc_unparseable_majority");
        out.verdict = pipeline::Verdict{
            false, "more than half of the sampled verdicts were unparseable"};
        return out;
    }
    std::vector<bool> votes;
    for (const auto& s : samples) votes.push_back(s.decision);
    auto majority = baselines::simple_majority(votes);
    if (majority.tie) {
        out.flags.push_back("sc_tie");
        out.verdict =
            pipeline::Verdict{false, "self-consistency vote tied between True and False"};
        return out;
    }
    for (const auto& s : samples) {
        if (s.decision == majority.decision) {
            out.verdict = pipeline::Verdict{majority.decision, s.explanation};
            return out;
        }
    }
    return out;
}

DerivedJudgment derive_multi_llm(const std::vector<trace::TraceEvent>& events,
                                 const std::vector<std::string>& voter_models) {
    DerivedJudgment out;
    std::vector<bool> votes;
    std::string rationale;
    bool saw_any_event = false;
    for (const auto& voter : voter_models) {
        if (!rationale.empty()) rationale += '\n';
        const trace::TraceEvent* last = nullptr;
        for (const auto& e : events) {
            if (e.kind == "chat" && e.purpose == "voter_judge" &&
                e.request.at("model_id").get<std::string>() == voter) {
                last = &e;
                saw_any_event = true;
            }
        }
        std::optional<prompts::JudgmentPayload> payload;
        if (last != nullptr) {
            auto parsed =
                prompts::parse_judgment(last->response.at("completions").at(0).get<std::string>());
            for (const auto& w : parsed.warnings) out.flags.push_back(w);
            if (parsed.ok()) payload = *parsed.value;
        }
        if (payload) {
            votes.push_back(payload->decision);
            rationale += "[" + voter + "] " + payload->explanation;
        } else {
            out.flags.push_back("voter_abstained:" + voter);
            rationale += "[" + voter + "] (abstained)";
        }
    }
    if (!saw_any_event) {
        out.missing = true;
        return out;
    }
    if (votes.empty()) {
        out.flags.push_back("all_voters_abstained");
        out.verdict = pipeline::Verdict{false, rationale};
        return out;
    }
    auto majority = baselines::simple_majority(votes);
    if (majority.tie) out.flags.push_back("multi_llm_tie");
    out.verdict = pipeline::Verdict{majority.tie ? false : majority.decision, rationale};
    return out;
}

}  // namespace

EvaluationRecord derive_record_from_trace(const trace::EpisodeTrace& trace, double f1_tau) {
    EvaluationRecord rec;
    rec.item_id = trace.episode_id;
    rec.method = trace.method;
    rec.trace_ref = "traces/" + trace.episode_id + ".json";
    rec.error = trace.error;
    if (trace.extra.contains("candidate")) {
        rec.candidate = trace.extra.at("candidate").get<candidates::CandidateAnswer>();
    }
    if (!trace.usage.is_null()) rec.usage = trace.usage.get<providers::ItemUsage>();

    std::vector<std::string> flags = trace.flags;
    if (trace.method == "em_f1") {
        if (rec.ok()) {
            const auto references = trace.extra.at("references").get<std::vector<std::string>>();
            rec.em = metrics::exact_match(rec.candidate.final_answer, references);
            rec.f1 = metrics::token_f1(rec.candidate.final_answer, references);
            (void)f1_tau;
        }
    } else if (rec.ok()) {
        DerivedJudgment derived;
        if (trace.method == "self_consistency") {
            derived = derive_self_consistency(trace.events);
        } else if (trace.method == "multi_llm") {
            const auto voters = trace.config.at("voter_models").get<std::vector<std::string>>();
            derived = derive_multi_llm(trace.events, voters);
        } else {
            derived = derive_simple_judgment(
                trace.events, trace.method == "no_tool" ? "no_tool_judge" : "judge");
        }
        if (derived.missing) {
            rec.error = "missing judgment record in trace";
        } else {
            rec.verdict = derived.verdict;
            for (const auto& f : derived.flags) flags.push_back(f);
            if (!trace.verdict.is_null() &&
                trace.verdict.get<pipeline::Verdict>() != *derived.verdict) {
                flags.push_back("replay_verdict_mismatch");
            }
        }
    }
    std::sort(flags.begin(), flags.end());
    flags.erase(std::unique(flags.begin(), flags.end()), flags.end());
    rec.flags = std::move(flags);
    return rec;
}

RunOutput replay(const std::string& run_dir, const std::string& output_dir) {
    std::ifstream manifest_in(fs::path(run_dir) / "run_config.json");
    if (!manifest_in) {
        throw std::runtime_error("run_config.json not found under " + run_dir);
    }
    std::ostringstream buf;
    buf << manifest_in.rdbuf();
    auto manifest = nlohmann::json::parse(buf.str(), nullptr, false);
    if (manifest.is_discarded()) throw std::runtime_error("run_config.json is corrupt");
    if (manifest.at("schema_version").get<int>() != trace::kSchemaVersion) {
        throw std::runtime_error("run_config.json has an unsupported schema version");
    }
    RunConfig cfg = run_config_from_json(manifest.at("config"));
    const auto items = manifest.at("items").get<std::vector<std::string>>();

    RunOutput out;
    out.output_dir = output_dir;
    providers::UsageSnapshot usage;
    for (const auto& id : items) {
        auto t = trace::load_trace((fs::path(run_dir) / "traces" / (id + ".json")).string());
        EvaluationRecord rec = derive_record_from_trace(t, cfg.f1_tau);
        usage.total_input_tokens += rec.usage.input_tokens;
        usage.total_output_tokens += rec.usage.output_tokens;
        usage.total_search_queries += rec.usage.search_queries;
        usage.per_item[id] = rec.usage;
        out.records.push_back(std::move(rec));
    }

    fs::create_directories(output_dir);
    write_records((fs::path(output_dir) / "records.jsonl").string(), out.records);
    if (!cfg.annotations_path.empty() && fs::exists(cfg.annotations_path)) {
        out.report = build_report(cfg, out.records, load_annotations(cfg.annotations_path));
    }
    write_text((fs::path(output_dir) / "report.json").string(), out.report.dump(2) + "\n");
    out.cost = cost_report(usage, cfg.prices, std::max<int>(1, static_cast<int>(items.size())),
                           0.0);
    write_text((fs::path(output_dir) / "cost.json").string(),
               cost_report_to_json(out.cost).dump(2) + "\n");
    return out;
}

// ---------------------------------------------------------------------------
// Trace audits
// ---------------------------------------------------------------------------

std::vector<std::string> audit_temperatures(const trace::EpisodeTrace& trace,
                                            double sc_temperature) {
    std::vector<std::string> violations;
    for (const auto& event : trace.events) {
        if (event.kind != "chat") continue;
        const double temperature = event.request.at("temperature").get<double>();
        const double expected = event.purpose == "sc_judge" ? sc_temperature : 0.0;
        if (temperature != expected) {
            violations.push_back(trace.episode_id + ": " + event.purpose + " ran at temperature " +
                                 std::to_string(temperature));
        }
    }
    return violations;
}

std::vector<std::string> audit_candidate_isolation(const trace::EpisodeTrace& trace) {
    std::vector<std::string> violations;
    if (trace.candidate_answer.empty()) return violations;
    for (const auto& event : trace.events) {
        if (event.kind != "chat" || event.purpose != "initial_query") continue;
        for (const auto& message : event.request.at("messages")) {
            if (message.at("text").get<std::string>().find(trace.candidate_answer) !=
                std::string::npos) {
                violations.push_back(trace.episode_id +
                                     ": initial query prompt contains the candidate answer");
            }
        }
    }
    return violations;
}

std::vector<std::string> audit_no_references(const trace::EpisodeTrace& trace,
                                             const std::vector<std::string>& references) {
    std::vector<std::string> violations;
    for (const auto& event : trace.events) {
        if (event.kind != "chat") continue;
        for (const auto& message : event.request.at("messages")) {
            const std::string text = message.at("text").get<std::string>();
            for (const auto& reference : references) {
                if (!reference.empty() && text.find(reference) != std::string::npos) {
                    violations.push_back(trace.episode_id + ": prompt for '" + event.purpose +
                                         "' contains reference '" + reference + "'");
                }
            }
        }
    }
    return violations;
}

}  // namespace tale::harness
