#pragma once

// Execution-based verification of candidate translations.
//
// Candidates are written to a scratch workspace, compiled when the toolchain
// has a compile step, and run against the problem's tests in a subprocess
// with wall-time and address-space limits. This is a desk-scale trust model:
// there is no container or syscall sandbox, so only verify code you are
// prepared to run as the current user.

#include "polytrans/dataset.hpp"
#include "polytrans/subprocess.hpp"

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <semaphore>
#include <span>
#include <string>
#include <vector>

namespace polytrans {

enum class VerdictStatus { pass, wrong_output, compile_error, runtime_error, timeout };

std::string to_string(VerdictStatus s);
VerdictStatus verdict_status_from_string(const std::string& s);

struct Verdict {
    VerdictStatus status = VerdictStatus::pass;
    std::vector<VerdictStatus> per_test;
    std::string diagnostics;
    std::vector<std::chrono::milliseconds> run_times;  // per executed test; not serialized

    bool passed() const noexcept { return status == VerdictStatus::pass; }
};

/// Command templates are argv vectors; `{src_file}`, `{bin_file}` and
/// `{workdir}` are substituted per element.
struct ToolchainSpec {
    std::string language;
    std::optional<std::vector<std::string>> compile_cmd;
    std::vector<std::string> run_cmd;
    std::string source_file;  // e.g. "main.py", "Main.java"
    std::string bin_file = "main.bin";
    std::chrono::milliseconds time_limit{10'000};
    std::chrono::milliseconds compile_time_limit{60'000};
    std::uint64_t memory_limit = 512ull << 20;
    /// Text inserted between candidate and harness when composing.
    std::string harness_separator = "\n";

    void validate() const;

    /// Executables named by the templates (placeholders skipped).
    std::vector<std::string> required_programs() const;

    bool available() const;
};

/// Per-language toolchains. Built-ins cover the six default languages;
/// a JSON file may override or add entries:
///   {"<lang>": {"compile": [...] | null, "run": [...], "source_file",
///               "time_limit_ms", "compile_time_limit_ms", "memory_limit_mb",
///               "harness_separator"}}
class ToolchainRegistry {
public:
    static ToolchainRegistry builtin();

    void set(ToolchainSpec spec);
    void load_file(const std::filesystem::path& path);

    const ToolchainSpec* find(const std::string& lang) const;

    /// Throws ToolchainMissingError when unconfigured or not installed.
    const ToolchainSpec& require(const std::string& lang) const;

    /// Applies a uniform per-test time limit to every toolchain.
    void set_time_limit(std::chrono::milliseconds limit);

private:
    std::map<std::string, ToolchainSpec> specs_;
};

/// CRLF to LF, trailing whitespace stripped per line, trailing blank lines
/// dropped. Everything else is compared byte-exact.
std::string normalize_output(std::string_view raw);

struct WorkspaceOptions {
    std::filesystem::path scratch_root = std::filesystem::temp_directory_path() / "polytrans";
    std::string problem_id = "adhoc";
    std::string path_key = "direct";
    bool keep = false;
};

/// Compiles and runs `code` against `tests`. Throws ToolchainMissingError
/// when `tc` cannot run here, WorkspaceError on scratch I/O failure.
Verdict verify_candidate(std::string_view code, std::span<const TestCase> tests, const ToolchainSpec& tc,
                         const WorkspaceOptions& workspace = {});

struct VerifyRequest {
    std::string problem_id;
    std::string path_key;
    std::string target_lang;
    std::string code;
    std::span<const TestCase> tests;
};

/// Engine-facing verification seam.
class CandidateVerifier {
public:
    virtual ~CandidateVerifier() = default;

    virtual Verdict verify(const VerifyRequest& req) = 0;

    /// Throws ToolchainMissingError if `lang` cannot be verified here.
    virtual void require_language(const std::string& lang) const = 0;
};

/// Subprocess-backed verifier with a cap on concurrent verifications.
class SubprocessVerifier : public CandidateVerifier {
public:
    SubprocessVerifier(ToolchainRegistry toolchains, std::filesystem::path scratch_root,
                       int max_parallel = 1);

    Verdict verify(const VerifyRequest& req) override;
    void require_language(const std::string& lang) const override;

    const ToolchainRegistry& toolchains() const noexcept { return toolchains_; }

private:
    ToolchainRegistry toolchains_;
    std::filesystem::path scratch_root_;
    std::unique_ptr<std::counting_semaphore<>> slots_;
};

}  // namespace polytrans
