#include "polytrans/cli.hpp"

#include "polytrans/analysis.hpp"
#include "polytrans/backend.hpp"
#include "polytrans/dataset.hpp"
#include "polytrans/engine.hpp"
#include "polytrans/error.hpp"
#include "polytrans/planner.hpp"
#include "polytrans/verifier.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace polytrans {

namespace fs = std::filesystem;

namespace {

enum class LogLevel { quiet, info, debug };

struct CliConfig {
    std::string backend_config;
    std::string toolchain_config;
    std::string languages_file;
    std::string scratch_dir = (fs::temp_directory_path() / "polytrans").string();
    int parallelism = 1;
    std::optional<std::int64_t> seed;
    std::string log_level = "info";
    bool no_timing = false;
    int time_limit_ms = 0;

    LogLevel level() const {
        if (log_level == "quiet") return LogLevel::quiet;
        if (log_level == "debug") return LogLevel::debug;
        return LogLevel::info;
    }
};

constexpr std::int64_t kDefaultSeed = 42;

std::vector<std::string> split_list(const std::string& s) {
    std::vector<std::string> out;
    std::stringstream ss(s);
    for (std::string item; std::getline(ss, item, ',');) {
        item.erase(0, item.find_first_not_of(" \t"));
        item.erase(item.find_last_not_of(" \t") + 1);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

void write_output(const std::string& text, const std::string& out_path, std::ostream& out) {
    if (out_path.empty() || out_path == "-") {
        out << text;
        return;
    }
    std::ofstream f(out_path, std::ios::trunc);
    if (!f) throw ConfigError("cannot write " + out_path);
    f << text;
}

class Session {
public:
    Session(const CliConfig& cfg, std::ostream& err) : cfg_(cfg), err_(err), registry_(LanguageRegistry::builtin()) {
        if (!cfg_.languages_file.empty()) registry_.load_file(cfg_.languages_file);
    }

    const LanguageRegistry& registry() const { return registry_; }

    std::vector<Language> pool(const std::string& intermediates) const {
        if (intermediates.empty()) return registry_.all();
        return registry_.resolve_list(split_list(intermediates));
    }

    // Backend, verifier and engine context, built on first use.
    EngineContext& engine(const std::string& dataset) {
        if (!ctx_) {
            const auto path = cfg_.backend_config.empty() ? env_or("POLYTRANS_BACKEND_CONFIG", "")
                                                          : cfg_.backend_config;
            if (path.empty()) throw ConfigError("no backend config (use --backend-config or POLYTRANS_BACKEND_CONFIG)");
            backend_config_ = BackendConfig::load(path);
            backend_ = backend_config_->make_backend();

            auto toolchains = ToolchainRegistry::builtin();
            const auto tc_path = cfg_.toolchain_config.empty() ? env_or("POLYTRANS_TOOLCHAINS", "")
                                                               : cfg_.toolchain_config;
            if (!tc_path.empty()) toolchains.load_file(tc_path);
            if (cfg_.time_limit_ms > 0) toolchains.set_time_limit(std::chrono::milliseconds{cfg_.time_limit_ms});
            verifier_ = std::make_unique<SubprocessVerifier>(std::move(toolchains), cfg_.scratch_dir,
                                                             std::max(1, cfg_.parallelism));

            DecodingParams params = backend_config_->params;
            if (cfg_.seed) params.seed = *cfg_.seed;
            else if (!params.seed) params.seed = kDefaultSeed;
            ctx_.emplace(EngineContext{*backend_, *verifier_, registry_, backend_config_->template_for(dataset), params});
        }
        return *ctx_;
    }

    void progress(const std::string& line) const {
        if (cfg_.level() != LogLevel::quiet) err_ << line << '\n';
    }

    const CliConfig& config() const { return cfg_; }

private:
    const CliConfig& cfg_;
    std::ostream& err_;
    LanguageRegistry registry_;
    std::optional<BackendConfig> backend_config_;
    std::unique_ptr<Backend> backend_;
    std::unique_ptr<SubprocessVerifier> verifier_;
    std::optional<EngineContext> ctx_;
};

// --- plan --------------------------------------------------------------------

struct PlanArgs {
    std::string source, target, intermediates, format = "text";
    int max_depth = 4;
};

int cmd_plan(Session& s, const PlanArgs& a, std::ostream& out) {
    const auto src = s.registry().resolve_list({a.source}).front();
    const auto tgt = s.registry().resolve_list({a.target}).front();
    PlanConfig cfg = a.intermediates.empty()
                         ? PlanConfig::for_pair(src, tgt, s.registry().all(), a.max_depth)
                         : PlanConfig{src, tgt, s.registry().resolve_list(split_list(a.intermediates)), a.max_depth};
    out << format_paths(generate_paths(cfg), parse_plan_format(a.format));
    return kExitSuccess;
}

// --- translate -------------------------------------------------------------

struct TranslateArgs {
    std::string manifest, problem_id, mode = "early_stop", intermediates, out;
    int max_depth = 4;
    int k = 10;
};

int cmd_translate(Session& s, const TranslateArgs& a, std::ostream& out) {
    const auto manifest = load_manifest(a.manifest, s.registry());
    const auto* problem = manifest.find(a.problem_id);
    if (!problem) throw ConfigError("no problem '" + a.problem_id + "' in " + a.manifest);
    const auto mode = run_mode_from_string(a.mode);
    auto& ctx = s.engine(manifest.dataset_name);

    RunRecord record;
    if (mode == RunMode::direct_k) {
        record = direct_baseline(*problem, a.k, ctx);
    } else {
        const auto cfg = PlanConfig::for_pair(s.registry().get(problem->source_lang),
                                              s.registry().get(problem->target_lang), s.pool(a.intermediates),
                                              a.max_depth);
        record = execute_problem(*problem, cfg, generate_paths(cfg), ctx, mode);
    }
    if (!a.out.empty()) RunLogWriter(a.out, false, !s.config().no_timing).append(record);

    if (record.success) {
        out << "success: " << record.winning_path->to_string() << " (attempts " << record.attempts_used
            << ", inference calls " << record.inference_calls << ")\n";
        if (auto code = record.winning_code()) out << *code << '\n';
        return kExitSuccess;
    }
    out << "failed: no candidate passed (attempts " << record.attempts_used << ", inference calls "
        << record.inference_calls << ")\n";
    return kExitTranslationFailed;
}

// --- bench -------------------------------------------------------------------

struct BenchArgs {
    std::string manifest, mode = "early_stop", intermediates, out;
    int max_depth = 4;
    int k = 10;
    bool resume = false;
    std::size_t min_tests = 0;
    std::size_t max_source_bytes = 0;
};

int cmd_bench(Session& s, const BenchArgs& a, std::ostream& out) {
    auto manifest = load_manifest(a.manifest, s.registry());
    const ValidationPolicy policy{a.min_tests, a.max_source_bytes};
    std::erase_if(manifest.problems, [&](const TranslationProblem& p) {
        const auto v = validate_problem(p, policy);
        if (!v) {
            std::string why;
            for (const auto& r : v.reasons) why += (why.empty() ? "" : "; ") + r;
            s.progress("skip " + p.id + ": " + why);
        }
        return !v.ok;
    });

    BenchmarkOptions opts;
    opts.intermediate_pool = s.pool(a.intermediates);
    opts.max_depth = a.max_depth;
    opts.mode = run_mode_from_string(a.mode);
    opts.k = a.k;
    opts.parallelism = s.config().parallelism;
    opts.log_path = a.out;
    opts.resume = a.resume;
    opts.include_timing = !s.config().no_timing;
    opts.on_record = [&](const RunRecord& r, std::size_t done, std::size_t total) {
        s.progress("[" + std::to_string(done) + "/" + std::to_string(total) + "] " + r.problem_id + " " +
                   (r.success ? "ok via " + r.winning_path->to_string() : std::string("failed")) + " (calls " +
                   std::to_string(r.inference_calls) + ")");
    };

    auto& ctx = s.engine(manifest.dataset_name);
    const auto records = run_benchmark(manifest, opts, ctx);
    if (records.empty()) {
        out << "no problems\n";
        return kExitSuccess;
    }
    const auto report = compute_ca(records);
    out << emit_report({{manifest.dataset_name.empty() ? "run" : manifest.dataset_name, report}}, nullptr,
                       ReportFormat::text_table);
    return kExitSuccess;
}

// --- report / ablate ---------------------------------------------------------

struct ReportArgs {
    std::string runs, baseline_runs, format = "text", out;
    int depth = 0;
    bool stats = false;
    bool contingency = false;
};

int cmd_report(const ReportArgs& a, std::ostream& out) {
    const auto records = read_run_log(a.runs);
    if (records.empty()) throw ConfigError("run log " + a.runs + " is empty");
    const auto fmt = parse_report_format(a.format);

    std::string text;
    if (a.contingency) {
        text = emit_contingency(depth_contingency(records), fmt);
    } else {
        const auto report = a.depth > 0 ? restrict_depth(records, a.depth) : compute_ca(records);
        const std::string label = a.depth > 0 ? "depth<=" + std::to_string(a.depth) : to_string(records.front().mode);
        std::optional<CAReport> baseline;
        if (!a.baseline_runs.empty()) {
            const auto base_records = read_run_log(a.baseline_runs);
            if (base_records.empty()) throw ConfigError("baseline run log " + a.baseline_runs + " is empty");
            baseline = compute_ca(base_records);
        }
        text = emit_report({{label, report}}, baseline ? &*baseline : nullptr, fmt);
    }
    if (a.stats) {
        if (auto st = attempts_stats(records)) {
            std::ostringstream ss;
            ss << "attempts: n=" << st->count << " mean=" << st->mean;
            for (const auto& [p, v] : st->percentiles) ss << " p" << p << "=" << v;
            ss << "\nhistogram:";
            for (const auto& [att, n] : st->histogram) ss << ' ' << att << ':' << n;
            text += ss.str() + "\n";
        } else {
            text += "attempts: no successful records\n";
        }
    }
    write_output(text, a.out, out);
    return kExitSuccess;
}

struct AblateArgs {
    std::string runs, remove_langs, format = "text", out;
    bool all = false;
    bool heatmap = false;
};

int cmd_ablate(const AblateArgs& a, std::ostream& out) {
    const auto records = read_run_log(a.runs);
    if (records.empty()) throw ConfigError("run log " + a.runs + " is empty");
    const auto fmt = parse_report_format(a.format);
    const auto full = compute_ca(records);

    std::string text;
    if (a.heatmap) {
        text = emit_heatmap(ablation_heatmap(records), fmt);
    } else if (a.all) {
        std::vector<NamedReport> reports;
        std::map<LanguagePair, std::vector<RunRecord>> by_pair;
        for (const auto& r : records) by_pair[{r.source_lang, r.target_lang}].push_back(r);
        for (const auto& [pair, recs] : by_pair) {
            std::vector<std::string> inter;
            if (recs.front().config.contains("intermediates"))
                inter = recs.front().config.at("intermediates").get<std::vector<std::string>>();
            for (const auto& spec : enumerate_ablation_specs(inter))
                reports.push_back({"-" + spec.label(), ablate_languages(recs, spec)});
        }
        text = emit_report(reports, &full, fmt);
    } else {
        if (a.remove_langs.empty()) throw ConfigError("ablate needs --remove-langs, --all, or --heatmap");
        const auto langs = split_list(a.remove_langs);
        AblationSpec spec{{langs.begin(), langs.end()}};
        text = emit_report({{"-" + spec.label(), ablate_languages(records, spec)}}, &full, fmt);
    }
    write_output(text, a.out, out);
    return kExitSuccess;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Multi-hop LLM code translation: plan, translate, benchmark, analyze", "polytrans"};
    app.require_subcommand(1);
    app.fallthrough();
    app.set_help_all_flag("--help-all", "Expand all help");

    CliConfig cfg;
    app.add_option("--backend-config", cfg.backend_config, "Backend config JSON (env POLYTRANS_BACKEND_CONFIG)");
    app.add_option("--toolchains", cfg.toolchain_config, "Toolchain config JSON (env POLYTRANS_TOOLCHAINS)");
    app.add_option("--languages", cfg.languages_file, "Extra language definitions (JSON array)");
    app.add_option("--scratch", cfg.scratch_dir, "Scratch directory for verification workspaces");
    app.add_option("--parallelism", cfg.parallelism, "Problems executed concurrently")->check(CLI::PositiveNumber);
    app.add_option("--seed", cfg.seed, "Fixed inference seed for engine runs");
    app.add_option("--log-level", cfg.log_level, "quiet, info, or debug")
        ->check(CLI::IsMember({"quiet", "info", "debug"}));
    app.add_flag("--no-timing", cfg.no_timing, "Omit timing fields from run logs");
    app.add_option("--time-limit-ms", cfg.time_limit_ms, "Per-test time limit override");

    PlanArgs plan;
    auto* plan_cmd = app.add_subcommand("plan", "Print every translation path for a language pair");
    plan_cmd->add_option("--source", plan.source)->required();
    plan_cmd->add_option("--target", plan.target)->required();
    plan_cmd->add_option("--intermediates", plan.intermediates, "Comma-separated; must include source, exclude target");
    plan_cmd->add_option("--max-depth", plan.max_depth)->check(CLI::PositiveNumber);
    plan_cmd->add_option("--format", plan.format)->check(CLI::IsMember({"text", "json", "dot"}));

    TranslateArgs tr;
    auto* tr_cmd = app.add_subcommand("translate", "Translate one problem from a manifest");
    tr_cmd->add_option("--manifest", tr.manifest)->required();
    tr_cmd->add_option("--problem-id", tr.problem_id)->required();
    tr_cmd->add_option("--max-depth", tr.max_depth)->check(CLI::PositiveNumber);
    tr_cmd->add_option("--mode", tr.mode)->check(CLI::IsMember({"early_stop", "exhaustive", "direct_k", "direct"}));
    tr_cmd->add_option("--k", tr.k, "Samples for direct_k mode")->check(CLI::PositiveNumber);
    tr_cmd->add_option("--intermediates", tr.intermediates, "Comma-separated intermediate pool");
    tr_cmd->add_option("--out", tr.out, "Write the run record here");

    BenchArgs bench;
    auto* bench_cmd = app.add_subcommand("bench", "Run every problem of a manifest");
    bench_cmd->add_option("--manifest", bench.manifest)->required();
    bench_cmd->add_option("--max-depth", bench.max_depth)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--mode", bench.mode)->check(CLI::IsMember({"early_stop", "exhaustive", "direct_k", "direct"}));
    bench_cmd->add_option("--k", bench.k)->check(CLI::PositiveNumber);
    bench_cmd->add_option("--intermediates", bench.intermediates);
    bench_cmd->add_option("--out", bench.out, "JSONL run log")->required();
    bench_cmd->add_flag("--resume", bench.resume, "Skip problems already in the run log");
    bench_cmd->add_option("--min-tests", bench.min_tests, "Skip problems with fewer tests");
    bench_cmd->add_option("--max-source-bytes", bench.max_source_bytes, "Skip problems with larger sources");

    ReportArgs rep;
    auto* rep_cmd = app.add_subcommand("report", "Computational accuracy tables from run logs");
    rep_cmd->add_option("--runs", rep.runs)->required();
    rep_cmd->add_option("--baseline-runs", rep.baseline_runs);
    rep_cmd->add_option("--depth", rep.depth, "Restrict exhaustive runs to paths of at most this many edges")
        ->check(CLI::PositiveNumber);
    rep_cmd->add_option("--format", rep.format)->check(CLI::IsMember({"text", "csv", "json"}));
    rep_cmd->add_option("--out", rep.out);
    rep_cmd->add_flag("--stats", rep.stats, "Append attempt statistics");
    rep_cmd->add_flag("--contingency", rep.contingency, "Success/failure counts per depth");

    AblateArgs abl;
    auto* abl_cmd = app.add_subcommand("ablate", "Intermediate-language removal analysis over exhaustive runs");
    abl_cmd->add_option("--runs", abl.runs)->required();
    abl_cmd->add_option("--remove-langs", abl.remove_langs, "Comma-separated languages to remove");
    abl_cmd->add_flag("--all", abl.all, "Every nonempty subset of each pair's intermediates");
    abl_cmd->add_flag("--heatmap", abl.heatmap, "Pair x removed-language decrease map");
    abl_cmd->add_option("--format", abl.format)->check(CLI::IsMember({"text", "csv", "json"}));
    abl_cmd->add_option("--out", abl.out);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp& e) {
        out << app.help();
        return kExitSuccess;
    } catch (const CLI::CallForAllHelp& e) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    }

    try {
        Session session(cfg, err);
        if (*plan_cmd) return cmd_plan(session, plan, out);
        if (*tr_cmd) return cmd_translate(session, tr, out);
        if (*bench_cmd) return cmd_bench(session, bench, out);
        if (*rep_cmd) return cmd_report(rep, out);
        if (*abl_cmd) return cmd_ablate(abl, out);
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "fatal: " << e.what() << '\n';
        return kExitUsage;
    }
    return kExitUsage;
}

}  // namespace polytrans
