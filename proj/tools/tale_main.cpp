// Command-line front end: run evaluations, sweep iteration counts, replay
// persisted traces, and print reports.

#include <cstdio>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "tale/harness.hpp"
#include "tale/http_clients.hpp"
#include "tale/jsonl.hpp"

namespace {

using namespace tale;

struct ProviderBundle {
    std::unique_ptr<providers::ScriptedChatProvider> fake_chat;
    std::unique_ptr<providers::ScriptedSearchProvider> fake_search;
    std::unique_ptr<providers::ChatCompletionsClient> live_chat;
    std::unique_ptr<providers::SerperSearchClient> live_search;
    std::unique_ptr<providers::RetryingChatProvider> retry_chat;
    std::unique_ptr<providers::RetryingSearchProvider> retry_search;

    harness::RunProviders view() {
        harness::RunProviders v;
        if (retry_chat) {
            v.chat = retry_chat.get();
        } else if (fake_chat) {
            v.chat = fake_chat.get();
        }
        if (retry_search) {
            v.search = retry_search.get();
        } else if (fake_search) {
            v.search = fake_search.get();
        }
        return v;
    }
};

struct CommonOptions {
    harness::RunConfig cfg;
    std::string method = "tale";
    std::string query_mode = "generated";
    std::string prompt_variant = "one_shot_cot";
    std::string voters;
    std::string fake_chat_script;
    std::string fake_search_script;
    std::string price_input = "0.15";
    std::string price_output = "0.60";
    std::string price_search = "0.30";
    bool live = false;
};

void add_run_options(CLI::App* cmd, CommonOptions& opt) {
    cmd->add_option("--dataset", opt.cfg.dataset_path, "dataset JSONL file")->required();
    cmd->add_option("--method", opt.method,
                    "tale | no_tool | single_pass | self_consistency | multi_llm | em_f1");
    cmd->add_option("--candidates", opt.cfg.candidates_path, "pre-generated candidate answers");
    cmd->add_option("--candidate-model", opt.cfg.candidate_model,
                    "generate candidate answers with this model");
    cmd->add_option("--judge-model", opt.cfg.episode.judge_model, "judge model id");
    cmd->add_option("--iterations,-N", opt.cfg.episode.iterations, "evidence-loop iterations");
    cmd->add_option("--top-k", opt.cfg.episode.top_k, "search results per query");
    cmd->add_option("--query-mode", opt.query_mode, "generated | passthrough");
    cmd->add_option("--prompt-variant", opt.prompt_variant,
                    "one_shot_cot | few_shot_cot | zero_shot");
    cmd->add_option("--early-stop-marker", opt.cfg.episode.early_stop_marker,
                    "stop iterating when a reflection contains this marker (off by default)");
    cmd->add_option("--sample-size", opt.cfg.sample_size,
                    "items to sample (0 = whole dataset)");
    cmd->add_option("--seed", opt.cfg.seed, "sampling seed");
    cmd->add_option("--workers", opt.cfg.workers, "concurrent episode workers");
    cmd->add_option("--annotations", opt.cfg.annotations_path, "human votes JSONL file");
    cmd->add_option("--prompts-dir", opt.cfg.prompts_dir,
                    "prompt template override directory");
    cmd->add_option("--out", opt.cfg.output_dir, "output directory")->required();
    cmd->add_option("--sc-samples", opt.cfg.baseline.sample_count,
                    "self-consistency sample count");
    cmd->add_option("--sc-temperature", opt.cfg.baseline.sc_temperature,
                    "self-consistency sampling temperature");
    cmd->add_option("--voters", opt.voters, "comma-separated voter models (multi_llm)");
    cmd->add_option("--f1-tau", opt.cfg.f1_tau, "binarization threshold for F1 verdicts");
    cmd->add_option("--price-input", opt.price_input, "USD per 1M input tokens");
    cmd->add_option("--price-output", opt.price_output, "USD per 1M output tokens");
    cmd->add_option("--price-search", opt.price_search, "USD per 1k search queries");
    cmd->add_option("--fake-chat-script", opt.fake_chat_script, "scripted chat fake (JSONL)");
    cmd->add_option("--fake-search-script", opt.fake_search_script,
                    "scripted search fake (JSONL)");
    cmd->add_flag("--live", opt.live, "use live providers (keys from the environment)");
}

harness::RunConfig finalize_config(CommonOptions& opt) {
    harness::RunConfig cfg = opt.cfg;
    cfg.method = harness::method_from_string(opt.method);
    cfg.episode.query_mode = pipeline::query_mode_from_string(opt.query_mode);
    cfg.episode.prompt_variant = prompts::variant_from_string(opt.prompt_variant);
    cfg.baseline.prompt_variant = cfg.episode.prompt_variant;
    cfg.baseline.model_id = cfg.episode.judge_model;
    cfg.baseline.top_k = cfg.episode.top_k;
    switch (cfg.method) {
        case harness::Method::no_tool: cfg.baseline.kind = baselines::BaselineKind::no_tool; break;
        case harness::Method::single_pass:
            cfg.baseline.kind = baselines::BaselineKind::single_pass_tool;
            break;
        case harness::Method::self_consistency:
            cfg.baseline.kind = baselines::BaselineKind::self_consistency;
            break;
        case harness::Method::multi_llm:
            cfg.baseline.kind = baselines::BaselineKind::multi_llm_vote;
            break;
        default: break;
    }
    if (!opt.voters.empty()) {
        cfg.baseline.voter_models.clear();
        std::istringstream stream(opt.voters);
        std::string voter;
        while (std::getline(stream, voter, ',')) {
            if (!voter.empty()) cfg.baseline.voter_models.push_back(voter);
        }
    } else if (cfg.method == harness::Method::multi_llm && cfg.baseline.voter_models.empty()) {
        cfg.baseline.voter_models = {"gpt-4o-mini", "gpt-3.5-turbo", "mistral-7b-instruct"};
    }
    cfg.prices.input_per_million = money::parse_decimal(opt.price_input);
    cfg.prices.output_per_million = money::parse_decimal(opt.price_output);
    cfg.prices.search_per_thousand = money::parse_decimal(opt.price_search);
    return cfg;
}

ProviderBundle build_providers(const CommonOptions& opt, const harness::RunConfig& cfg) {
    ProviderBundle bundle;
    const bool needs_chat =
        cfg.method != harness::Method::em_f1 || !cfg.candidate_model.empty();
    const bool needs_search =
        cfg.method == harness::Method::tale || cfg.method == harness::Method::single_pass;

    if (!opt.fake_chat_script.empty()) {
        bundle.fake_chat = std::make_unique<providers::ScriptedChatProvider>();
        bundle.fake_chat->load_script(opt.fake_chat_script);
    }
    if (!opt.fake_search_script.empty()) {
        bundle.fake_search = std::make_unique<providers::ScriptedSearchProvider>();
        bundle.fake_search->load_script(opt.fake_search_script);
    }
    if (opt.live) {
        if (needs_chat && !bundle.fake_chat) {
            bundle.live_chat = std::make_unique<providers::ChatCompletionsClient>(
                providers::ChatCompletionsClient::config_from_env());
            bundle.retry_chat =
                std::make_unique<providers::RetryingChatProvider>(*bundle.live_chat);
        }
        if (needs_search && !bundle.fake_search) {
            bundle.live_search = std::make_unique<providers::SerperSearchClient>(
                providers::SerperSearchClient::config_from_env());
            bundle.retry_search =
                std::make_unique<providers::RetryingSearchProvider>(*bundle.live_search);
        }
    }
    return bundle;
}

void print_report_table(const nlohmann::json& report) {
    if (report.is_null() || !report.contains("vectors")) return;
    std::printf("\n%-12s %8s %10s %10s %10s %10s\n", "vector", "items", "kappa", "macro-F1",
                "%agree", "fleiss");
    for (const auto& [name, stats] : report.at("vectors").items()) {
        if (stats.contains("error")) {
            std::printf("%-12s (not computed: %s)\n", name.c_str(),
                        stats.at("error").get<std::string>().c_str());
            continue;
        }
        const auto fleiss = stats.at("fleiss_kappa");
        std::printf("%-12s %8d %10.4f %10.4f %10.2f %10s\n", name.c_str(),
                    stats.at("n_items").get<int>(), stats.at("cohen_kappa").get<double>(),
                    stats.at("macro_f1").get<double>(),
                    stats.at("percent_agreement").get<double>(),
                    fleiss.is_null() ? "-" : std::to_string(fleiss.get<double>()).c_str());
    }
}

void print_run_summary(const harness::RunOutput& out) {
    int errored = 0;
    int positive = 0;
    int decided = 0;
    for (const auto& rec : out.records) {
        if (!rec.ok()) ++errored;
        if (rec.verdict) {
            ++decided;
            if (rec.verdict->decision) ++positive;
        }
    }
    std::printf("items: %zu  errored: %d\n", out.records.size(), errored);
    if (decided > 0) {
        std::printf("verdicts: %d True / %d False\n", positive, decided - positive);
    }
    std::printf("cost: %s per item (llm %s + search %s), total %s, wall %.1fs\n",
                out.cost.display_per_item().c_str(), out.cost.display_llm_per_item().c_str(),
                out.cost.display_search_per_item().c_str(), out.cost.display_total().c_str(),
                out.cost.wall_seconds);
    print_report_table(out.report);
    std::printf("artifacts written to %s\n", out.output_dir.c_str());
}

int run_command(CommonOptions& opt) {
    auto cfg = finalize_config(opt);
    auto bundle = build_providers(opt, cfg);
    auto out = harness::run(cfg, bundle.view());
    print_run_summary(out);
    return 0;
}

int ablate_command(CommonOptions& opt, const std::string& iteration_list) {
    auto cfg = finalize_config(opt);
    auto bundle = build_providers(opt, cfg);
    std::vector<int> n_values;
    std::istringstream stream(iteration_list);
    std::string token;
    while (std::getline(stream, token, ',')) {
        if (!token.empty()) n_values.push_back(std::stoi(token));
    }
    auto reports = harness::ablate_iterations(cfg, bundle.view(), n_values);
    for (const auto& [n, report] : reports) {
        std::printf("\n== iterations N=%d ==\n", n);
        print_report_table(report);
    }
    std::printf("\nablation artifacts under %s\n", cfg.output_dir.c_str());
    return 0;
}

int replay_command(const std::string& run_dir, const std::string& out_dir) {
    auto out = harness::replay(run_dir, out_dir);
    print_run_summary(out);
    return 0;
}

int report_command(const std::string& run_dir) {
    const std::string path = run_dir + "/report.json";
    std::ifstream in(path);
    if (!in) {
        std::fprintf(stderr, "no report.json under %s\n", run_dir.c_str());
        return 1;
    }
    std::ostringstream buf;
    buf << in.rdbuf();
    auto report = nlohmann::json::parse(buf.str(), nullptr, false);
    if (report.is_discarded()) {
        std::fprintf(stderr, "report.json is corrupt\n");
        return 1;
    }
    if (report.is_null()) {
        std::printf("run had no annotations; no agreement report\n");
        return 0;
    }
    std::printf("method: %s  sampled: %d  errored: %d\n",
                report.at("method").get<std::string>().c_str(),
                report.at("n_sampled").get<int>(), report.at("n_errored").get<int>());
    print_report_table(report);
    return 0;
}

int cost_command(std::int64_t input_tokens, std::int64_t output_tokens, std::int64_t searches,
                 int items, const CommonOptions& opt) {
    providers::UsageSnapshot usage;
    usage.total_input_tokens = input_tokens;
    usage.total_output_tokens = output_tokens;
    usage.total_search_queries = searches;
    harness::PriceTable prices;
    prices.input_per_million = money::parse_decimal(opt.price_input);
    prices.output_per_million = money::parse_decimal(opt.price_output);
    prices.search_per_thousand = money::parse_decimal(opt.price_search);
    auto report = harness::cost_report(usage, prices, items, 0.0);
    std::printf("llm %s/item + search %s/item = %s/item; run total %s over %d item(s)\n",
                report.display_llm_per_item().c_str(), report.display_search_per_item().c_str(),
                report.display_per_item().c_str(), report.display_total().c_str(), items);
    std::printf("exact: llm %lld/%lld, search %lld/%lld, total %lld/%lld USD\n",
                static_cast<long long>(report.llm_cost.numerator()),
                static_cast<long long>(report.llm_cost.denominator()),
                static_cast<long long>(report.search_cost.numerator()),
                static_cast<long long>(report.search_cost.denominator()),
                static_cast<long long>(report.total_cost.numerator()),
                static_cast<long long>(report.total_cost.denominator()));
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"tale — tool-augmented evaluation of free-form LLM answers"};
    app.require_subcommand(1);

    CommonOptions run_opt;
    auto* run_cmd = app.add_subcommand("run", "evaluate a dataset sample with one method");
    add_run_options(run_cmd, run_opt);

    CommonOptions ablate_opt;
    std::string iteration_list = "1,2,3,4";
    auto* ablate_cmd = app.add_subcommand("ablate", "sweep the evidence-loop iteration count");
    add_run_options(ablate_cmd, ablate_opt);
    ablate_cmd->add_option("--iterations-list", iteration_list, "comma-separated N values");

    std::string replay_run_dir;
    std::string replay_out_dir;
    auto* replay_cmd =
        app.add_subcommand("replay", "re-derive records from persisted traces, offline");
    replay_cmd->add_option("--run", replay_run_dir, "directory of a previous run")->required();
    replay_cmd->add_option("--out", replay_out_dir, "output directory")->required();

    std::string report_run_dir;
    auto* report_cmd = app.add_subcommand("report", "print the agreement report of a run");
    report_cmd->add_option("--run", report_run_dir, "directory of a previous run")->required();

    CommonOptions cost_opt;
    std::int64_t cost_in = 0;
    std::int64_t cost_out = 0;
    std::int64_t cost_searches = 0;
    int cost_items = 1;
    auto* cost_cmd = app.add_subcommand("cost", "price a given usage profile");
    cost_cmd->add_option("--input-tokens", cost_in)->required();
    cost_cmd->add_option("--output-tokens", cost_out)->required();
    cost_cmd->add_option("--searches", cost_searches)->required();
    cost_cmd->add_option("--items", cost_items);
    cost_cmd->add_option("--price-input", cost_opt.price_input);
    cost_cmd->add_option("--price-output", cost_opt.price_output);
    cost_cmd->add_option("--price-search", cost_opt.price_search);

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return run_command(run_opt);
        if (ablate_cmd->parsed()) return ablate_command(ablate_opt, iteration_list);
        if (replay_cmd->parsed()) return replay_command(replay_run_dir, replay_out_dir);
        if (report_cmd->parsed()) return report_command(report_run_dir);
        if (cost_cmd->parsed()) {
            return cost_command(cost_in, cost_out, cost_searches, cost_items, cost_opt);
        }
    } catch (const std::exception& ex) {
        std::fprintf(stderr, "error: %s\n", ex.what());
        return 1;
    }
    return 0;
}
