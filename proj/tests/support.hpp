#pragma once

// Shared helpers and independent oracles for the test binaries.

#include "polytrans/backend.hpp"
#include "polytrans/dataset.hpp"
#include "polytrans/engine.hpp"
#include "polytrans/error.hpp"
#include "polytrans/planner.hpp"
#include "polytrans/verifier.hpp"

#include <atomic>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

using namespace polytrans;

inline std::filesystem::path fixture(const std::string& name) { return std::filesystem::path(POLYTRANS_FIXTURES) / name; }

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        std::string tmpl = (std::filesystem::temp_directory_path() / "polytrans-test.XXXXXX").string();
        path = ::mkdtemp(tmpl.data());
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;
};

// Brute force: every sequence source, x1..x(k-1), target with interior drawn
// from the intermediates and no language repeated back to back. Ordered by
// length, then by interior positions in config order.
inline std::vector<TranslationPath> brute_force_paths(const PlanConfig& cfg) {
    std::vector<std::string> ids;
    for (const auto& l : cfg.intermediates) ids.push_back(l.id);
    const auto n = ids.size();
    std::vector<std::pair<std::vector<std::size_t>, TranslationPath>> found;
    for (int k = 1; k <= cfg.max_depth; ++k) {
        const int interior = k - 1;
        std::size_t total = 1;
        for (int i = 0; i < interior; ++i) total *= n;
        for (std::size_t code = 0; code < total; ++code) {
            std::vector<std::size_t> digits(interior);
            std::size_t c = code;
            for (int i = interior - 1; i >= 0; --i) {
                digits[i] = c % n;
                c /= n;
            }
            std::vector<std::string> seq{cfg.source.id};
            for (auto d : digits) seq.push_back(ids[d]);
            seq.push_back(cfg.target.id);
            bool ok = true;
            for (std::size_t i = 1; i < seq.size(); ++i) ok = ok && seq[i] != seq[i - 1];
            if (ok) found.push_back({digits, TranslationPath{seq}});
        }
    }
    std::stable_sort(found.begin(), found.end(), [](const auto& a, const auto& b) {
        if (a.first.size() != b.first.size()) return a.first.size() < b.first.size();
        return a.first < b.first;
    });
    std::vector<TranslationPath> out;
    for (auto& f : found) out.push_back(std::move(f.second));
    return out;
}

inline std::size_t prefix_count(const std::vector<TranslationPath>& paths) {
    std::set<std::vector<std::string>> prefixes;
    for (const auto& p : paths)
        for (std::size_t len = 2; len <= p.langs.size(); ++len)
            prefixes.insert(std::vector<std::string>(p.langs.begin(), p.langs.begin() + len));
    return prefixes.size();
}

inline std::size_t sum_of_lengths(const std::vector<TranslationPath>& paths) {
    std::size_t s = 0;
    for (const auto& p : paths) s += p.edges();
    return s;
}

// Verifier whose verdict depends only on the candidate text.
class ScriptedVerifier : public CandidateVerifier {
public:
    explicit ScriptedVerifier(std::set<std::string> passing = {}) : passing_(std::move(passing)) {}

    Verdict verify(const VerifyRequest& req) override {
        ++calls_;
        Verdict v;
        v.status = passing_.count(req.code) ? VerdictStatus::pass : VerdictStatus::wrong_output;
        v.per_test.assign(req.tests.size(), v.status);
        return v;
    }
    void require_language(const std::string& lang) const override {
        if (missing_.count(lang)) throw ToolchainMissingError("no toolchain for " + lang);
    }

    void mark_missing(const std::string& lang) { missing_.insert(lang); }
    std::size_t calls() const { return calls_.load(); }

private:
    std::set<std::string> passing_;
    std::set<std::string> missing_;
    std::atomic<std::size_t> calls_{0};
};

inline TranslationProblem make_problem(std::string id, std::string src, std::string tgt, std::string code) {
    TranslationProblem p;
    p.id = std::move(id);
    p.dataset = "unit";
    p.source_lang = std::move(src);
    p.target_lang = std::move(tgt);
    p.source_code = std::move(code);
    p.tests = {TestCase::io("1\n", "1\n")};
    return p;
}

inline std::string fenced(const std::string& tag, const std::string& code) {
    return "Here is the translation:\n```" + tag + "\n" + code + "\n```\n";
}

// Hand simulation of tree execution with prefix reuse and early stopping.
// `edge` maps (language prefix ending at the new language, input code) to
// the extracted output, or nullopt when extraction fails.
struct SimResult {
    bool success = false;
    std::optional<TranslationPath> winner;
    int calls = 0;
    int attempts = 0;
    std::vector<PathStatus> statuses;
};

inline SimResult simulate_tree(const std::vector<TranslationPath>& paths, const std::string& source_code,
                               const std::function<std::optional<std::string>(const std::string& from,
                                                                              const std::string& to,
                                                                              const std::string& code)>& edge,
                               const std::function<bool(const std::string&)>& passes, bool early_stop) {
    SimResult r;
    std::map<std::vector<std::string>, std::optional<std::string>> memo;
    for (const auto& path : paths) {
        if (early_stop && r.success) {
            r.statuses.push_back(PathStatus::skipped);
            continue;
        }
        std::string code = source_code;
        bool broke = false;
        for (std::size_t i = 1; i < path.langs.size(); ++i) {
            std::vector<std::string> prefix(path.langs.begin(), path.langs.begin() + i + 1);
            auto it = memo.find(prefix);
            if (it == memo.end()) {
                ++r.calls;
                it = memo.emplace(prefix, edge(path.langs[i - 1], path.langs[i], code)).first;
            }
            if (!it->second) {
                broke = true;
                break;
            }
            code = *it->second;
        }
        if (broke) {
            r.statuses.push_back(PathStatus::extraction_failed);
            continue;
        }
        ++r.attempts;
        if (passes(code)) {
            r.statuses.push_back(PathStatus::verified_pass);
            if (!r.success) r.winner = path;
            r.success = true;
        } else {
            r.statuses.push_back(PathStatus::verified_fail);
        }
    }
    return r;
}

// The running example: python to java through cpp, depth 3.
struct WorkedTreeScenario {
    LanguageRegistry registry = LanguageRegistry::builtin();
    MockBackend backend{"mock-model"};
    ScriptedVerifier verifier{{"JAVA_VIA_CPP"}};
    TranslationProblem problem = make_problem("worked", "python", "java", "print(int(input()))");
    PlanConfig plan;

    WorkedTreeScenario() {
        plan = PlanConfig{registry.get("python"), registry.get("java"),
                          registry.resolve_list({"python", "rust", "javascript", "cpp", "go"}), 3};
        const auto& src = problem.source_code;
        backend.script("python", "java", src, fenced("java", "JAVA_DIRECT"));
        backend.script("python", "rust", src, "I could not translate this program.");
        backend.script("python", "javascript", src, fenced("javascript", "JS1"));
        backend.script("javascript", "java", "JS1", fenced("java", "JAVA_VIA_JS"));
        backend.script("python", "cpp", src, fenced("cpp", "CPP1"));
        backend.script("cpp", "java", "CPP1", fenced("java", "JAVA_VIA_CPP"));
    }

    // Same table, expressed for the simulator.
    static std::optional<std::string> edge(const std::string& from, const std::string& to, const std::string& code) {
        static const std::map<std::tuple<std::string, std::string, std::string>, std::optional<std::string>> table{
            {{"python", "java", "print(int(input()))"}, "JAVA_DIRECT"},
            {{"python", "rust", "print(int(input()))"}, std::nullopt},
            {{"python", "javascript", "print(int(input()))"}, "JS1"},
            {{"javascript", "java", "JS1"}, "JAVA_VIA_JS"},
            {{"python", "cpp", "print(int(input()))"}, "CPP1"},
            {{"cpp", "java", "CPP1"}, "JAVA_VIA_CPP"},
        };
        return table.at({from, to, code});
    }

    EngineContext context() {
        DecodingParams params;
        params.seed = 42;
        return EngineContext{backend, verifier, registry, PromptTemplate::default_template(), params};
    }
};

// Random exhaustive records for analysis properties. Each path independently
// passes with probability `p_pass`; the record is consistent with itself.
inline RunRecord synthetic_exhaustive_record(std::mt19937_64& rng, const std::string& id, const PlanConfig& cfg,
                                             double p_pass) {
    const auto paths = generate_paths(cfg);
    std::bernoulli_distribution pass(p_pass);
    std::bernoulli_distribution extract_fail(0.1);
    RunRecord r;
    r.problem_id = id;
    r.dataset = "synthetic";
    r.source_lang = cfg.source.id;
    r.target_lang = cfg.target.id;
    r.mode = RunMode::exhaustive;
    std::vector<std::string> inter;
    for (const auto& l : cfg.intermediates) inter.push_back(l.id);
    r.config = {{"intermediates", inter}, {"max_depth", cfg.max_depth}};
    int attempt = 0;
    for (const auto& p : paths) {
        PathOutcome o;
        o.path = p;
        if (extract_fail(rng)) {
            o.status = PathStatus::extraction_failed;
        } else {
            Verdict v;
            v.status = pass(rng) ? VerdictStatus::pass : VerdictStatus::wrong_output;
            o.status = v.passed() ? PathStatus::verified_pass : PathStatus::verified_fail;
            o.verdict = v;
            o.attempt_index = ++attempt;
            if (v.passed() && !r.success) {
                r.success = true;
                r.winning_path = p;
            }
        }
        r.outcomes.push_back(std::move(o));
    }
    r.attempts_used = attempt;
    return r;
}

}  // namespace testsupport
