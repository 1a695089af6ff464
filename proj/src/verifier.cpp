#include "polytrans/verifier.hpp"

#include "polytrans/error.hpp"
#include "polytrans/hash.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <unistd.h>

namespace polytrans {

namespace fs = std::filesystem;
using nlohmann::json;

std::string to_string(VerdictStatus s) {
    switch (s) {
        case VerdictStatus::pass: return "pass";
        case VerdictStatus::wrong_output: return "wrong_output";
        case VerdictStatus::compile_error: return "compile_error";
        case VerdictStatus::runtime_error: return "runtime_error";
        case VerdictStatus::timeout: return "timeout";
    }
    return "unknown";
}

VerdictStatus verdict_status_from_string(const std::string& s) {
    for (auto v : {VerdictStatus::pass, VerdictStatus::wrong_output, VerdictStatus::compile_error,
                   VerdictStatus::runtime_error, VerdictStatus::timeout})
        if (to_string(v) == s) return v;
    throw ValidationError("unknown verdict status '" + s + "'");
}

// ---------------------------------------------------------------------------
// Toolchains

namespace {

bool is_placeholder(const std::string& arg) { return arg.find('{') != std::string::npos; }

std::string substitute(std::string arg, const std::map<std::string, std::string>& vars) {
    for (const auto& [name, value] : vars) {
        const std::string token = "{" + name + "}";
        for (auto pos = arg.find(token); pos != std::string::npos; pos = arg.find(token, pos + value.size()))
            arg.replace(pos, token.size(), value);
    }
    return arg;
}

std::vector<std::string> expand(const std::vector<std::string>& tmpl, const std::map<std::string, std::string>& vars) {
    std::vector<std::string> out;
    out.reserve(tmpl.size());
    for (const auto& a : tmpl) out.push_back(substitute(a, vars));
    return out;
}

std::vector<std::string> command_from_json(const json& j) {
    if (j.is_string()) {
        std::vector<std::string> out;
        std::string word;
        for (char c : j.get<std::string>()) {
            if (c == ' ' || c == '\t') {
                if (!word.empty()) out.push_back(std::move(word));
                word.clear();
            } else {
                word += c;
            }
        }
        if (!word.empty()) out.push_back(std::move(word));
        return out;
    }
    return j.get<std::vector<std::string>>();
}

}  // namespace

void ToolchainSpec::validate() const {
    if (language.empty()) throw ConfigError("toolchain without a language");
    if (run_cmd.empty()) throw ConfigError("toolchain '" + language + "' has no run command");
    if (compile_cmd && compile_cmd->empty())
        throw ConfigError("toolchain '" + language + "' has an empty compile command");
    if (source_file.empty()) throw ConfigError("toolchain '" + language + "' has no source_file");
}

std::vector<std::string> ToolchainSpec::required_programs() const {
    std::vector<std::string> out;
    if (compile_cmd && !is_placeholder(compile_cmd->front())) out.push_back(compile_cmd->front());
    if (!is_placeholder(run_cmd.front())) out.push_back(run_cmd.front());
    return out;
}

bool ToolchainSpec::available() const {
    for (const auto& prog : required_programs())
        if (find_executable(prog).empty()) return false;
    return true;
}

ToolchainRegistry ToolchainRegistry::builtin() {
    ToolchainRegistry reg;
    auto add = [&](std::string lang, std::optional<std::vector<std::string>> compile, std::vector<std::string> run,
                   std::string source, std::uint64_t memory) {
        ToolchainSpec tc;
        tc.language = std::move(lang);
        tc.compile_cmd = std::move(compile);
        tc.run_cmd = std::move(run);
        tc.source_file = std::move(source);
        tc.memory_limit = memory;
        reg.set(std::move(tc));
    };
    constexpr std::uint64_t mb512 = 512ull << 20;
    add("python", std::nullopt, {"python3", "{src_file}"}, "main.py", mb512);
    add("cpp", std::vector<std::string>{"g++", "-std=c++17", "-O2", "-o", "{bin_file}", "{src_file}"},
        {"./{bin_file}"}, "main.cpp", mb512);
    add("rust", std::vector<std::string>{"rustc", "-O", "--edition", "2021", "-o", "{bin_file}", "{src_file}"},
        {"./{bin_file}"}, "main.rs", mb512);
    add("go", std::vector<std::string>{"go", "build", "-o", "{bin_file}", "{src_file}"}, {"./{bin_file}"}, "main.go",
        0);
    // V8 and the JVM reserve far more address space than they use, so an
    // RLIMIT_AS cap breaks them; their heap flags bound memory instead.
    add("javascript", std::nullopt, {"node", "--max-old-space-size=512", "{src_file}"}, "main.js", 0);
    add("java", std::vector<std::string>{"javac", "{src_file}"}, {"java", "-Xmx512m", "-cp", ".", "Main"}, "Main.java",
        0);
    return reg;
}

void ToolchainRegistry::set(ToolchainSpec spec) {
    spec.validate();
    auto lang = spec.language;
    specs_.insert_or_assign(std::move(lang), std::move(spec));
}

void ToolchainRegistry::load_file(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open toolchain config " + path.string());
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError(path.string() + ": " + e.what(), 0);
    }
    if (!doc.is_object()) throw ParseError(path.string() + ": expected an object keyed by language id", 0);
    try {
        for (const auto& [lang, j] : doc.items()) {
            ToolchainSpec tc;
            if (const auto* existing = find(lang)) tc = *existing;
            tc.language = lang;
            if (j.contains("compile"))
                tc.compile_cmd = j.at("compile").is_null() ? std::nullopt
                                                           : std::optional(command_from_json(j.at("compile")));
            if (j.contains("run")) tc.run_cmd = command_from_json(j.at("run"));
            if (tc.source_file.empty()) tc.source_file = "main." + lang;
            tc.source_file = j.value("source_file", tc.source_file);
            tc.bin_file = j.value("bin_file", tc.bin_file);
            if (j.contains("time_limit_ms")) tc.time_limit = std::chrono::milliseconds{j.at("time_limit_ms").get<long>()};
            if (j.contains("compile_time_limit_ms"))
                tc.compile_time_limit = std::chrono::milliseconds{j.at("compile_time_limit_ms").get<long>()};
            if (j.contains("memory_limit_mb")) tc.memory_limit = j.at("memory_limit_mb").get<std::uint64_t>() << 20;
            tc.harness_separator = j.value("harness_separator", tc.harness_separator);
            set(std::move(tc));
        }
    } catch (const json::exception& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
}

const ToolchainSpec* ToolchainRegistry::find(const std::string& lang) const {
    auto it = specs_.find(lang);
    return it == specs_.end() ? nullptr : &it->second;
}

const ToolchainSpec& ToolchainRegistry::require(const std::string& lang) const {
    const auto* tc = find(lang);
    if (tc == nullptr) throw ToolchainMissingError("no toolchain configured for '" + lang + "'");
    for (const auto& prog : tc->required_programs())
        if (find_executable(prog).empty())
            throw ToolchainMissingError("toolchain for '" + lang + "' needs '" + prog + "', which is not installed");
    return *tc;
}

void ToolchainRegistry::set_time_limit(std::chrono::milliseconds limit) {
    for (auto& [_, tc] : specs_) tc.time_limit = limit;
}

// ---------------------------------------------------------------------------
// Output comparison

std::string normalize_output(std::string_view raw) {
    std::vector<std::string_view> lines;
    std::size_t pos = 0;
    while (pos <= raw.size()) {
        auto nl = raw.find('\n', pos);
        auto line = raw.substr(pos, nl == std::string_view::npos ? std::string_view::npos : nl - pos);
        if (line.ends_with('\r')) line.remove_suffix(1);
        const auto end = line.find_last_not_of(" \t\r\f\v");
        lines.push_back(end == std::string_view::npos ? std::string_view{} : line.substr(0, end + 1));
        if (nl == std::string_view::npos) break;
        pos = nl + 1;
    }
    while (!lines.empty() && lines.back().empty()) lines.pop_back();
    std::string out;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        if (i != 0) out += '\n';
        out += lines[i];
    }
    return out;
}

// ---------------------------------------------------------------------------
// Verification

namespace {

constexpr std::size_t kDiagnosticBytes = 2000;

std::string sanitize_component(const std::string& s) {
    std::string out;
    for (char c : s) {
        const bool keep = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '-' ||
                          c == '_' || c == '.';
        out += keep ? c : '_';
    }
    if (out.empty() || out == "." || out == "..") out = "_" + out;
    return out;
}

class Workspace {
public:
    explicit Workspace(const WorkspaceOptions& opts) : keep_(opts.keep) {
        const fs::path parent = opts.scratch_root / sanitize_component(opts.problem_id);
        std::error_code ec;
        fs::create_directories(parent, ec);
        if (ec) throw WorkspaceError("cannot create " + parent.string() + ": " + ec.message());
        std::string tmpl = (parent / (content_hash(opts.path_key) + ".XXXXXX")).string();
        if (::mkdtemp(tmpl.data()) == nullptr) throw WorkspaceError("cannot create workspace under " + parent.string());
        dir_ = tmpl;
    }
    ~Workspace() {
        if (keep_) return;
        std::error_code ec;
        fs::remove_all(dir_, ec);
    }
    Workspace(const Workspace&) = delete;
    Workspace& operator=(const Workspace&) = delete;

    const fs::path& dir() const noexcept { return dir_; }

    void write(const std::string& name, std::string_view content) const {
        std::ofstream out(dir_ / name, std::ios::binary | std::ios::trunc);
        if (!out) throw WorkspaceError("cannot write " + (dir_ / name).string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw WorkspaceError("short write to " + (dir_ / name).string());
    }

private:
    fs::path dir_;
    bool keep_;
};

std::string excerpt(std::string_view text) {
    if (text.size() <= kDiagnosticBytes) return std::string(text);
    return std::string(text.substr(0, kDiagnosticBytes)) + "\n[... truncated]";
}

std::map<std::string, std::string> vars_for(const ToolchainSpec& tc, const fs::path& dir) {
    return {{"src_file", tc.source_file}, {"bin_file", tc.bin_file}, {"workdir", dir.string()}};
}

// Returns an error diagnostic when the build fails.
std::optional<std::string> build(const ToolchainSpec& tc, const Workspace& ws, std::string_view source) {
    ws.write(tc.source_file, source);
    if (!tc.compile_cmd) return std::nullopt;
    ProcessLimits limits;
    limits.wall_time = tc.compile_time_limit;
    auto r = run_process(expand(*tc.compile_cmd, vars_for(tc, ws.dir())), ws.dir(), "", limits);
    if (r.success()) return std::nullopt;
    if (r.timed_out) return "compilation timed out";
    return excerpt(r.stderr_text.empty() ? r.stdout_text : r.stderr_text);
}

ProcessResult execute(const ToolchainSpec& tc, const Workspace& ws, const std::string& stdin_text) {
    ProcessLimits limits;
    limits.wall_time = tc.time_limit;
    limits.memory_bytes = tc.memory_limit;
    return run_process(expand(tc.run_cmd, vars_for(tc, ws.dir())), ws.dir(), stdin_text, limits);
}

VerdictStatus classify_run(const ProcessResult& r) {
    if (r.timed_out) return VerdictStatus::timeout;
    if (!r.success()) return VerdictStatus::runtime_error;
    return VerdictStatus::pass;
}

void append_diag(std::string& diag, std::size_t index, const std::string& text) {
    if (text.empty() || diag.size() >= kDiagnosticBytes) return;
    diag += "[test " + std::to_string(index) + "] " + excerpt(text) + "\n";
}

}  // namespace

Verdict verify_candidate(std::string_view code, std::span<const TestCase> tests, const ToolchainSpec& tc,
                         const WorkspaceOptions& workspace) {
    if (tests.empty()) throw ValidationError("verify_candidate needs at least one test");
    for (const auto& prog : tc.required_programs())
        if (find_executable(prog).empty())
            throw ToolchainMissingError("toolchain for '" + tc.language + "' needs '" + prog + "', which is not installed");

    Verdict verdict;
    const auto kind = tests.front().kind;

    if (kind == TestKind::io) {
        Workspace ws(workspace);
        if (auto err = build(tc, ws, code)) {
            verdict.per_test.assign(tests.size(), VerdictStatus::compile_error);
            verdict.diagnostics = *err;
        } else {
            for (std::size_t i = 0; i < tests.size(); ++i) {
                const auto r = execute(tc, ws, tests[i].stdin_text);
                verdict.run_times.push_back(r.wall_time);
                auto status = classify_run(r);
                if (status == VerdictStatus::pass &&
                    normalize_output(r.stdout_text) != normalize_output(tests[i].expected_stdout))
                    status = VerdictStatus::wrong_output;
                if (status != VerdictStatus::pass)
                    append_diag(verdict.diagnostics, i, r.timed_out ? "time limit exceeded" : r.stderr_text);
                verdict.per_test.push_back(status);
            }
        }
    } else {
        for (std::size_t i = 0; i < tests.size(); ++i) {
            Workspace ws(workspace);
            std::string composed(code);
            composed += tc.harness_separator;
            composed += tests[i].harness_code;
            if (auto err = build(tc, ws, composed)) {
                verdict.per_test.push_back(VerdictStatus::compile_error);
                append_diag(verdict.diagnostics, i, *err);
                continue;
            }
            const auto r = execute(tc, ws, "");
            verdict.run_times.push_back(r.wall_time);
            const auto status = classify_run(r);
            if (status != VerdictStatus::pass)
                append_diag(verdict.diagnostics, i, r.timed_out ? "time limit exceeded" : r.stderr_text);
            verdict.per_test.push_back(status);
        }
    }

    verdict.status = VerdictStatus::pass;
    for (auto s : verdict.per_test) {
        if (s != VerdictStatus::pass) {
            verdict.status = s;
            break;
        }
    }
    return verdict;
}

SubprocessVerifier::SubprocessVerifier(ToolchainRegistry toolchains, fs::path scratch_root, int max_parallel)
    : toolchains_(std::move(toolchains)),
      scratch_root_(std::move(scratch_root)),
      slots_(std::make_unique<std::counting_semaphore<>>(std::max(1, max_parallel))) {}

Verdict SubprocessVerifier::verify(const VerifyRequest& req) {
    const auto& tc = toolchains_.require(req.target_lang);
    slots_->acquire();
    struct Release {
        std::counting_semaphore<>* s;
        ~Release() { s->release(); }
    } release{slots_.get()};
    return verify_candidate(req.code, req.tests, tc, {scratch_root_, req.problem_id, req.path_key, false});
}

void SubprocessVerifier::require_language(const std::string& lang) const { toolchains_.require(lang); }

}  // namespace polytrans
