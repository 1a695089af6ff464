#pragma once

// Plan execution: walks a PathSet for one problem, translating edge by edge
// through the backend with prefix memoization, verifying every candidate
// that lands in the target language.

#include "polytrans/backend.hpp"
#include "polytrans/dataset.hpp"
#include "polytrans/extractor.hpp"
#include "polytrans/planner.hpp"
#include "polytrans/verifier.hpp"

#include <json.hpp>

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

namespace polytrans {

inline constexpr const char* kRunRecordSchema = "polytrans.run/1";

enum class RunMode { early_stop, exhaustive, direct_k };

std::string to_string(RunMode m);
RunMode run_mode_from_string(const std::string& s);

/// Identity of one translation edge. Two paths sharing a language prefix
/// produce equal keys, which is what makes cross-path reuse sound.
struct EdgeKey {
    std::string problem_id;
    std::vector<std::string> lang_prefix;
    std::string model_id;
    std::string template_id;
    std::optional<std::int64_t> seed;
    std::string params_fingerprint;

    friend auto operator<=>(const EdgeKey&, const EdgeKey&) = default;
    friend bool operator==(const EdgeKey&, const EdgeKey&) = default;
};

enum class EdgeStatus { ok, extraction_failed, backend_failed };

std::string to_string(EdgeStatus s);

struct EdgeResult {
    EdgeKey key;
    EdgeStatus status = EdgeStatus::ok;
    std::string code;
    std::string raw_completion;
    std::string error;
    std::string endpoint_id;
    int sample = 0;
    std::chrono::milliseconds timing{0};

    bool ok() const noexcept { return status == EdgeStatus::ok; }
};

enum class PathStatus { verified_pass, verified_fail, extraction_failed, backend_failed, skipped };

std::string to_string(PathStatus s);
PathStatus path_status_from_string(const std::string& s);

struct PathOutcome {
    TranslationPath path;
    PathStatus status = PathStatus::skipped;
    std::optional<Verdict> verdict;
    std::optional<int> attempt_index;  // 1-based order among verified candidates

    bool has_verdict() const noexcept { return verdict.has_value(); }
};

struct RunRecord {
    std::string problem_id;
    std::string dataset;
    std::string source_lang;
    std::string target_lang;
    RunMode mode = RunMode::early_stop;
    std::vector<PathOutcome> outcomes;
    bool success = false;
    std::optional<TranslationPath> winning_path;
    int attempts_used = 0;
    int inference_calls = 0;
    std::vector<EdgeResult> edges;
    nlohmann::json config = nlohmann::json::object();
    std::chrono::milliseconds elapsed{0};

    /// Deepest path the record's plan allowed (config snapshot), falling back
    /// to the longest recorded path.
    int recorded_max_depth() const;

    /// The winning code, when successful.
    std::optional<std::string> winning_code() const;
};

nlohmann::json to_json(const RunRecord& r, bool include_timing = true);

/// Throws SchemaVersionError when the record's schema is not ours.
RunRecord run_record_from_json(const nlohmann::json& j);

/// Removes every timing field, recursively.
nlohmann::json strip_timing(nlohmann::json j);

/// Everything plan execution needs besides the problem itself.
struct EngineContext {
    Backend& backend;
    CandidateVerifier& verifier;
    const LanguageRegistry& registry;
    PromptTemplate prompt = PromptTemplate::default_template();
    DecodingParams params;  // params.seed is the fixed engine seed
};

/// Executes `paths` (planned by `plan`) for one problem. Configuration
/// errors are raised before any inference; per-edge backend and verifier
/// failures are recorded in the result.
RunRecord execute_problem(const TranslationProblem& problem, const PlanConfig& plan, const PathSet& paths,
                          EngineContext& ctx, RunMode mode);

/// CA@k baseline: one request for k samples without a fixed seed, each
/// sample extracted and verified independently.
RunRecord direct_baseline(const TranslationProblem& problem, int k, EngineContext& ctx);

/// Plans computed once per (source, target) pair.
class PlanCache {
public:
    const PathSet& get(const PlanConfig& config);
    std::size_t generations() const;

private:
    mutable std::mutex mu_;
    std::map<std::pair<std::string, std::string>, std::pair<PlanConfig, PathSet>> plans_;
    std::size_t generations_ = 0;
};

struct BenchmarkOptions {
    std::vector<Language> intermediate_pool;
    int max_depth = 4;
    RunMode mode = RunMode::early_stop;
    int k = 10;
    int parallelism = 1;
    std::filesystem::path log_path;  // empty: no log
    bool resume = false;
    bool include_timing = true;
    std::function<void(const RunRecord&, std::size_t done, std::size_t total)> on_record;
};

/// Runs every problem of `manifest`, appending each record to the run log
/// as it completes. With `resume`, problems already present in the log are
/// not re-executed. Returns all records (resumed and fresh) in manifest order.
std::vector<RunRecord> run_benchmark(const Manifest& manifest, const BenchmarkOptions& options, EngineContext& ctx,
                                     PlanCache* plans = nullptr);

/// Reads a JSONL run log. A single malformed trailing line (an interrupted
/// append) is tolerated and reported through `truncated_tail`.
std::vector<RunRecord> read_run_log(const std::filesystem::path& path, bool* truncated_tail = nullptr);

/// Serialized appends to a JSONL run log.
class RunLogWriter {
public:
    RunLogWriter(const std::filesystem::path& path, bool append, bool include_timing);

    void append(const RunRecord& record);

private:
    std::mutex mu_;
    std::filesystem::path path_;
    bool include_timing_;
};

}  // namespace polytrans
