#include "polytrans/engine.hpp"

#include "polytrans/error.hpp"
#include "polytrans/hash.hpp"

#include <algorithm>
#include <atomic>
#include <fstream>
#include <set>
#include <thread>

namespace polytrans {

using nlohmann::json;
using Clock = std::chrono::steady_clock;

namespace {

std::chrono::milliseconds since(Clock::time_point start) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(Clock::now() - start);
}

json plan_snapshot(const PlanConfig& plan, const EngineContext& ctx, RunMode mode) {
    std::vector<std::string> inter;
    for (const auto& l : plan.intermediates) inter.push_back(l.id);
    return json{{"mode", to_string(mode)},
                {"intermediates", inter},
                {"max_depth", plan.max_depth},
                {"model_id", ctx.backend.model_id()},
                {"template_id", ctx.prompt.id()},
                {"params", to_json(ctx.params)},
                {"params_fingerprint", ctx.params.fingerprint()}};
}

class ProblemRun {
public:
    ProblemRun(const TranslationProblem& problem, EngineContext& ctx, RunRecord& record)
        : problem_(problem), ctx_(ctx), record_(record) {}

    // Returns the cached or freshly computed edge for `prefix`. The prefix
    // one shorter must already be cached and ok (or prefix has one edge).
    const EdgeResult& edge(const std::vector<std::string>& prefix) {
        EdgeKey key{problem_.id, prefix, ctx_.backend.model_id(), ctx_.prompt.id(), ctx_.params.seed,
                    ctx_.params.fingerprint()};
        if (auto it = cache_.find(key); it != cache_.end()) return record_.edges[it->second];

        std::string input = problem_.source_code;
        if (prefix.size() > 2) {
            std::vector<std::string> parent(prefix.begin(), prefix.end() - 1);
            input = edge(parent).code;
        }
        const auto& from = ctx_.registry.get(prefix[prefix.size() - 2]);
        const auto& to = ctx_.registry.get(prefix.back());

        EdgeResult result;
        result.key = key;
        const auto started = Clock::now();
        InferenceRequest req{ctx_.prompt.render(from, to, input),
                             ctx_.prompt.system(),
                             ctx_.params,
                             ctx_.backend.model_id(),
                             1,
                             from.id,
                             to.id,
                             input};
        ++record_.inference_calls;
        try {
            auto out = ctx_.backend.complete(req);
            result.endpoint_id = out.endpoint_id;
            result.raw_completion = out.completions.empty() ? std::string{} : out.completions.front();
            auto extracted = extract_code(result.raw_completion, to);
            if (extracted.ok()) {
                result.status = EdgeStatus::ok;
                result.code = std::move(extracted.code);
            } else {
                result.status = EdgeStatus::extraction_failed;
            }
        } catch (const ScenarioGapError&) {
            throw;
        } catch (const std::exception& e) {
            result.status = EdgeStatus::backend_failed;
            result.error = e.what();
        }
        result.timing = since(started);
        record_.edges.push_back(std::move(result));
        cache_.emplace(std::move(key), record_.edges.size() - 1);
        return record_.edges.back();
    }

    Verdict verify(const TranslationPath& path, const std::string& code) {
        VerifyRequest req{problem_.id, path.to_string(), problem_.target_lang, code, problem_.tests};
        try {
            return ctx_.verifier.verify(req);
        } catch (const ToolchainMissingError&) {
            throw;
        } catch (const std::exception& e) {
            Verdict v;
            v.status = VerdictStatus::runtime_error;
            v.per_test.assign(problem_.tests.size(), VerdictStatus::runtime_error);
            v.diagnostics = std::string("verifier infrastructure error: ") + e.what();
            return v;
        }
    }

private:
    const TranslationProblem& problem_;
    EngineContext& ctx_;
    RunRecord& record_;
    std::map<EdgeKey, std::size_t> cache_;
};

RunRecord new_record(const TranslationProblem& problem, RunMode mode) {
    RunRecord r;
    r.problem_id = problem.id;
    r.dataset = problem.dataset;
    r.source_lang = problem.source_lang;
    r.target_lang = problem.target_lang;
    r.mode = mode;
    return r;
}

}  // namespace

std::string to_string(RunMode m) {
    switch (m) {
        case RunMode::early_stop: return "early_stop";
        case RunMode::exhaustive: return "exhaustive";
        case RunMode::direct_k: return "direct_k";
    }
    return "unknown";
}

RunMode run_mode_from_string(const std::string& s) {
    if (s == "early_stop" || s == "early-stop") return RunMode::early_stop;
    if (s == "exhaustive") return RunMode::exhaustive;
    if (s == "direct_k" || s == "direct") return RunMode::direct_k;
    throw ConfigError("unknown mode '" + s + "' (expected early_stop, exhaustive, or direct_k)");
}

std::string to_string(EdgeStatus s) {
    switch (s) {
        case EdgeStatus::ok: return "ok";
        case EdgeStatus::extraction_failed: return "extraction_failed";
        case EdgeStatus::backend_failed: return "backend_failed";
    }
    return "unknown";
}

std::string to_string(PathStatus s) {
    switch (s) {
        case PathStatus::verified_pass: return "verified_pass";
        case PathStatus::verified_fail: return "verified_fail";
        case PathStatus::extraction_failed: return "extraction_failed";
        case PathStatus::backend_failed: return "backend_failed";
        case PathStatus::skipped: return "skipped";
    }
    return "unknown";
}

PathStatus path_status_from_string(const std::string& s) {
    for (auto v : {PathStatus::verified_pass, PathStatus::verified_fail, PathStatus::extraction_failed,
                   PathStatus::backend_failed, PathStatus::skipped})
        if (to_string(v) == s) return v;
    throw ValidationError("unknown path status '" + s + "'");
}

// ---------------------------------------------------------------------------
// Execution

RunRecord execute_problem(const TranslationProblem& problem, const PlanConfig& plan, const PathSet& paths,
                          EngineContext& ctx, RunMode mode) {
    if (mode == RunMode::direct_k)
        throw ConfigError("execute_problem runs early_stop or exhaustive plans; use direct_baseline for direct_k");
    if (plan.source.id != problem.source_lang || plan.target.id != problem.target_lang)
        throw ConfigError("plan " + plan.source.id + "->" + plan.target.id + " does not match problem '" + problem.id +
                          "' (" + problem.source_lang + "->" + problem.target_lang + ")");
    if (paths.empty()) throw ConfigError("empty path set for problem '" + problem.id + "'");
    for (const auto& p : paths)
        if (p.langs.size() < 2 || p.source() != problem.source_lang || p.target() != problem.target_lang)
            throw ConfigError("path " + p.to_string() + " does not match problem '" + problem.id + "'");
    problem.check_structure();
    for (const auto& p : paths)
        for (const auto& id : p.langs) ctx.registry.get(id);
    ctx.verifier.require_language(problem.target_lang);

    const auto started = Clock::now();
    RunRecord record = new_record(problem, mode);
    record.config = plan_snapshot(plan, ctx, mode);
    ProblemRun run(problem, ctx, record);

    for (const auto& path : paths) {
        PathOutcome outcome{path, PathStatus::skipped, std::nullopt, std::nullopt};
        if (mode == RunMode::early_stop && record.success) {
            record.outcomes.push_back(std::move(outcome));
            continue;
        }
        std::vector<std::string> prefix{path.langs.front()};
        for (std::size_t k = 1; k < path.langs.size(); ++k) {
            prefix.push_back(path.langs[k]);
            const EdgeResult& edge = run.edge(prefix);
            if (!edge.ok()) {
                outcome.status = edge.status == EdgeStatus::extraction_failed ? PathStatus::extraction_failed
                                                                             : PathStatus::backend_failed;
                break;
            }
            if (prefix.back() != problem.target_lang) continue;

            const std::string code = edge.code;
            outcome.verdict = run.verify(path, code);
            outcome.attempt_index = ++record.attempts_used;
            if (outcome.verdict->passed()) {
                outcome.status = PathStatus::verified_pass;
                if (!record.success) {
                    record.success = true;
                    record.winning_path = path;
                }
            } else {
                outcome.status = PathStatus::verified_fail;
            }
        }
        record.outcomes.push_back(std::move(outcome));
    }
    record.elapsed = since(started);
    return record;
}

RunRecord direct_baseline(const TranslationProblem& problem, int k, EngineContext& ctx) {
    if (k < 1) throw ConfigError("direct baseline needs k >= 1");
    problem.check_structure();
    const auto& from = ctx.registry.get(problem.source_lang);
    const auto& to = ctx.registry.get(problem.target_lang);
    ctx.verifier.require_language(problem.target_lang);

    DecodingParams params = ctx.params;
    params.seed.reset();

    const auto started = Clock::now();
    RunRecord record = new_record(problem, RunMode::direct_k);
    record.config = json{{"mode", to_string(RunMode::direct_k)},
                         {"k", k},
                         {"model_id", ctx.backend.model_id()},
                         {"template_id", ctx.prompt.id()},
                         {"params", to_json(params)},
                         {"params_fingerprint", params.fingerprint()},
                         {"max_depth", 1}};
    const TranslationPath direct{{problem.source_lang, problem.target_lang}};
    const EdgeKey key{problem.id, direct.langs, ctx.backend.model_id(), ctx.prompt.id(), std::nullopt,
                      params.fingerprint()};

    InferenceRequest req{ctx.prompt.render(from, to, problem.source_code),
                         ctx.prompt.system(),
                         params,
                         ctx.backend.model_id(),
                         k,
                         from.id,
                         to.id,
                         problem.source_code};
    ++record.inference_calls;
    InferenceResult out;
    try {
        out = ctx.backend.complete(req);
    } catch (const ScenarioGapError&) {
        throw;
    } catch (const std::exception& e) {
        EdgeResult failed{key, EdgeStatus::backend_failed, {}, {}, e.what(), {}, 0, since(started)};
        record.edges.push_back(std::move(failed));
        record.outcomes.push_back({direct, PathStatus::backend_failed, std::nullopt, std::nullopt});
        record.elapsed = since(started);
        return record;
    }

    for (std::size_t i = 0; i < out.completions.size(); ++i) {
        EdgeResult edge{key, EdgeStatus::ok, {}, out.completions[i], {}, out.endpoint_id, static_cast<int>(i),
                        out.latency};
        auto extracted = extract_code(edge.raw_completion, to);
        PathOutcome outcome{direct, PathStatus::extraction_failed, std::nullopt, std::nullopt};
        if (extracted.ok()) {
            edge.code = std::move(extracted.code);
            VerifyRequest vreq{problem.id, direct.to_string() + "#" + std::to_string(i), problem.target_lang,
                               edge.code, problem.tests};
            try {
                outcome.verdict = ctx.verifier.verify(vreq);
            } catch (const ToolchainMissingError&) {
                throw;
            } catch (const std::exception& e) {
                Verdict v;
                v.status = VerdictStatus::runtime_error;
                v.per_test.assign(problem.tests.size(), VerdictStatus::runtime_error);
                v.diagnostics = std::string("verifier infrastructure error: ") + e.what();
                outcome.verdict = std::move(v);
            }
            outcome.attempt_index = ++record.attempts_used;
            outcome.status = outcome.verdict->passed() ? PathStatus::verified_pass : PathStatus::verified_fail;
            if (outcome.verdict->passed() && !record.success) {
                record.success = true;
                record.winning_path = direct;
            }
        } else {
            edge.status = EdgeStatus::extraction_failed;
        }
        record.edges.push_back(std::move(edge));
        record.outcomes.push_back(std::move(outcome));
    }
    record.elapsed = since(started);
    return record;
}

// ---------------------------------------------------------------------------
// Records

int RunRecord::recorded_max_depth() const {
    if (config.contains("max_depth") && config.at("max_depth").is_number_integer())
        return config.at("max_depth").get<int>();
    std::size_t deepest = 0;
    for (const auto& o : outcomes) deepest = std::max(deepest, o.path.edges());
    return static_cast<int>(deepest);
}

std::optional<std::string> RunRecord::winning_code() const {
    if (!winning_path) return std::nullopt;
    for (const auto& e : edges)
        if (e.key.lang_prefix == winning_path->langs && e.ok()) return e.code;
    return std::nullopt;
}

namespace {

json verdict_to_json(const Verdict& v) {
    std::vector<std::string> per;
    for (auto s : v.per_test) per.push_back(to_string(s));
    return json{{"status", to_string(v.status)}, {"per_test", per}, {"diagnostics", v.diagnostics}};
}

Verdict verdict_from_json(const json& j) {
    Verdict v;
    v.status = verdict_status_from_string(j.at("status").get<std::string>());
    for (const auto& s : j.value("per_test", std::vector<std::string>{})) v.per_test.push_back(verdict_status_from_string(s));
    v.diagnostics = j.value("diagnostics", "");
    return v;
}

}  // namespace

json to_json(const RunRecord& r, bool include_timing) {
    json outcomes = json::array();
    for (const auto& o : r.outcomes) {
        json jo{{"path", o.path.langs}, {"status", to_string(o.status)}};
        jo["verdict"] = o.verdict ? verdict_to_json(*o.verdict) : json(nullptr);
        jo["attempt_index"] = o.attempt_index ? json(*o.attempt_index) : json(nullptr);
        outcomes.push_back(std::move(jo));
    }
    json edges = json::array();
    for (const auto& e : r.edges) {
        json je{{"prefix", e.key.lang_prefix},
                {"status", to_string(e.status)},
                {"code", e.code},
                {"raw_completion", e.raw_completion},
                {"sample", e.sample}};
        if (!e.error.empty()) je["error"] = e.error;
        if (include_timing) {
            je["elapsed_ms"] = e.timing.count();
            je["endpoint"] = e.endpoint_id;
        }
        edges.push_back(std::move(je));
    }
    json j{{"schema", kRunRecordSchema},
           {"problem_id", r.problem_id},
           {"dataset", r.dataset},
           {"source_lang", r.source_lang},
           {"target_lang", r.target_lang},
           {"mode", to_string(r.mode)},
           {"success", r.success},
           {"winning_path", r.winning_path ? json(r.winning_path->langs) : json(nullptr)},
           {"attempts_used", r.attempts_used},
           {"inference_calls", r.inference_calls},
           {"outcomes", std::move(outcomes)},
           {"edges", std::move(edges)},
           {"config", r.config}};
    if (include_timing) j["elapsed_ms"] = r.elapsed.count();
    return j;
}

RunRecord run_record_from_json(const json& j) {
    const auto schema = j.value("schema", "");
    if (schema != kRunRecordSchema)
        throw SchemaVersionError("run record schema '" + schema + "' is not supported (expected '" +
                                 std::string(kRunRecordSchema) + "')");
    RunRecord r;
    try {
        r.problem_id = j.at("problem_id").get<std::string>();
        r.dataset = j.value("dataset", "");
        r.source_lang = j.at("source_lang").get<std::string>();
        r.target_lang = j.at("target_lang").get<std::string>();
        r.mode = run_mode_from_string(j.at("mode").get<std::string>());
        r.success = j.at("success").get<bool>();
        if (!j.at("winning_path").is_null())
            r.winning_path = TranslationPath{j.at("winning_path").get<std::vector<std::string>>()};
        r.attempts_used = j.at("attempts_used").get<int>();
        r.inference_calls = j.at("inference_calls").get<int>();
        for (const auto& jo : j.at("outcomes")) {
            PathOutcome o;
            o.path = TranslationPath{jo.at("path").get<std::vector<std::string>>()};
            o.status = path_status_from_string(jo.at("status").get<std::string>());
            if (jo.contains("verdict") && !jo.at("verdict").is_null()) o.verdict = verdict_from_json(jo.at("verdict"));
            if (jo.contains("attempt_index") && !jo.at("attempt_index").is_null())
                o.attempt_index = jo.at("attempt_index").get<int>();
            r.outcomes.push_back(std::move(o));
        }
        r.config = j.value("config", json::object());
        std::optional<std::int64_t> seed;
        if (r.config.contains("params") && r.config["params"].contains("seed") && !r.config["params"]["seed"].is_null())
            seed = r.config["params"]["seed"].get<std::int64_t>();
        for (const auto& je : j.value("edges", json::array())) {
            EdgeResult e;
            e.key = EdgeKey{r.problem_id,
                            je.at("prefix").get<std::vector<std::string>>(),
                            r.config.value("model_id", ""),
                            r.config.value("template_id", ""),
                            seed,
                            r.config.value("params_fingerprint", "")};
            const auto status = je.at("status").get<std::string>();
            e.status = status == "ok"                  ? EdgeStatus::ok
                       : status == "extraction_failed" ? EdgeStatus::extraction_failed
                                                       : EdgeStatus::backend_failed;
            e.code = je.value("code", "");
            e.raw_completion = je.value("raw_completion", "");
            e.error = je.value("error", "");
            e.endpoint_id = je.value("endpoint", "");
            e.sample = je.value("sample", 0);
            e.timing = std::chrono::milliseconds{je.value("elapsed_ms", 0)};
            r.edges.push_back(std::move(e));
        }
        r.elapsed = std::chrono::milliseconds{j.value("elapsed_ms", 0)};
    } catch (const json::exception& e) {
        throw ValidationError("malformed run record '" + j.value("problem_id", "?") + "': " + e.what());
    }
    return r;
}

json strip_timing(json j) {
    if (j.is_object()) {
        j.erase("elapsed_ms");
        j.erase("endpoint");
        for (auto& [_, v] : j.items()) v = strip_timing(std::move(v));
    } else if (j.is_array()) {
        for (auto& v : j) v = strip_timing(std::move(v));
    }
    return j;
}

// ---------------------------------------------------------------------------
// Run log

std::vector<RunRecord> read_run_log(const std::filesystem::path& path, bool* truncated_tail) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open run log " + path.string());
    std::vector<std::string> lines;
    for (std::string line; std::getline(in, line);)
        if (line.find_first_not_of(" \t\r") != std::string::npos) lines.push_back(std::move(line));

    if (truncated_tail) *truncated_tail = false;
    std::vector<RunRecord> records;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        json j;
        try {
            j = json::parse(lines[i]);
        } catch (const json::parse_error& e) {
            if (i + 1 == lines.size()) {
                if (truncated_tail) *truncated_tail = true;
                break;
            }
            throw ParseError(path.string() + ": " + e.what(), i + 1);
        }
        records.push_back(run_record_from_json(j));
    }
    return records;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path, bool append, bool include_timing)
    : path_(path), include_timing_(include_timing) {
    if (!path_.parent_path().empty()) std::filesystem::create_directories(path_.parent_path());
    std::ofstream out(path_, append ? std::ios::app : std::ios::trunc);
    if (!out) throw ConfigError("cannot open run log " + path_.string() + " for writing");
}

void RunLogWriter::append(const RunRecord& record) {
    const auto line = to_json(record, include_timing_).dump() + "\n";
    std::lock_guard lock(mu_);
    std::ofstream out(path_, std::ios::app | std::ios::binary);
    out << line;
    out.flush();
    if (!out) throw WorkspaceError("cannot append to run log " + path_.string());
}

// ---------------------------------------------------------------------------
// Benchmark

const PathSet& PlanCache::get(const PlanConfig& config) {
    std::lock_guard lock(mu_);
    const auto key = std::make_pair(config.source.id, config.target.id);
    if (auto it = plans_.find(key); it != plans_.end()) return it->second.second;
    auto paths = generate_paths(config);
    ++generations_;
    auto [it, _] = plans_.emplace(key, std::make_pair(config, std::move(paths)));
    return it->second.second;
}

std::size_t PlanCache::generations() const {
    std::lock_guard lock(mu_);
    return generations_;
}

std::vector<RunRecord> run_benchmark(const Manifest& manifest, const BenchmarkOptions& options, EngineContext& ctx,
                                     PlanCache* plans) {
    if (options.parallelism < 1) throw ConfigError("parallelism must be >= 1");
    PlanCache local_plans;
    PlanCache& cache = plans ? *plans : local_plans;

    // Configuration errors surface here, before any inference.
    std::map<std::pair<std::string, std::string>, PlanConfig> configs;
    std::set<std::string> targets;
    for (const auto& p : manifest.problems) {
        p.check_structure();
        targets.insert(p.target_lang);
        const auto pair = std::make_pair(p.source_lang, p.target_lang);
        if (configs.contains(pair)) continue;
        auto cfg = PlanConfig::for_pair(ctx.registry.get(p.source_lang), ctx.registry.get(p.target_lang),
                                        options.intermediate_pool, options.mode == RunMode::direct_k ? 1 : options.max_depth);
        cfg.validate();
        configs.emplace(pair, std::move(cfg));
    }
    for (const auto& t : targets) ctx.verifier.require_language(t);
    if (options.mode != RunMode::direct_k)
        for (const auto& [_, cfg] : configs) cache.get(cfg);

    std::map<std::string, RunRecord> done;
    if (options.resume && !options.log_path.empty() && std::filesystem::exists(options.log_path)) {
        bool truncated = false;
        auto previous = read_run_log(options.log_path, &truncated);
        for (const auto& r : previous)
            if (r.mode != options.mode)
                throw ConfigError("run log " + options.log_path.string() + " holds " + to_string(r.mode) +
                                  " records; cannot resume in " + to_string(options.mode) + " mode");
        if (truncated) {
            // Drop the torn tail so appends start on a clean line.
            RunLogWriter rewrite(options.log_path, false, options.include_timing);
            for (const auto& r : previous) rewrite.append(r);
        }
        for (auto& r : previous) done.insert_or_assign(r.problem_id, std::move(r));
    }

    std::optional<RunLogWriter> log;
    if (!options.log_path.empty()) log.emplace(options.log_path, options.resume, options.include_timing);

    std::vector<std::size_t> pending;
    for (std::size_t i = 0; i < manifest.problems.size(); ++i)
        if (!done.contains(manifest.problems[i].id)) pending.push_back(i);

    std::vector<std::optional<RunRecord>> fresh(manifest.problems.size());
    std::atomic<std::size_t> next{0};
    std::atomic<std::size_t> completed{done.size()};
    std::mutex error_mu;
    std::mutex callback_mu;
    std::exception_ptr first_error;

    auto worker = [&] {
        for (;;) {
            const auto slot = next.fetch_add(1);
            if (slot >= pending.size()) return;
            {
                std::lock_guard lock(error_mu);
                if (first_error) return;
            }
            const auto& problem = manifest.problems[pending[slot]];
            try {
                RunRecord record;
                if (options.mode == RunMode::direct_k) {
                    record = direct_baseline(problem, options.k, ctx);
                } else {
                    const auto& cfg = configs.at({problem.source_lang, problem.target_lang});
                    record = execute_problem(problem, cfg, cache.get(cfg), ctx, options.mode);
                }
                if (log) log->append(record);
                if (options.on_record) {
                    std::lock_guard lock(callback_mu);
                    options.on_record(record, ++completed, manifest.problems.size());
                }
                fresh[pending[slot]] = std::move(record);
            } catch (...) {
                std::lock_guard lock(error_mu);
                if (!first_error) first_error = std::current_exception();
                return;
            }
        }
    };

    const auto n_workers = std::min<std::size_t>(static_cast<std::size_t>(options.parallelism), pending.size());
    if (n_workers <= 1) {
        worker();
    } else {
        std::vector<std::jthread> threads;
        for (std::size_t i = 0; i < n_workers; ++i) threads.emplace_back(worker);
    }
    if (first_error) std::rethrow_exception(first_error);

    std::vector<RunRecord> out;
    out.reserve(manifest.problems.size());
    for (std::size_t i = 0; i < manifest.problems.size(); ++i) {
        if (fresh[i]) out.push_back(std::move(*fresh[i]));
        else out.push_back(std::move(done.at(manifest.problems[i].id)));
    }
    return out;
}

}  // namespace polytrans
