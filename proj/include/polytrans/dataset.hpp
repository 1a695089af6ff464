#pragma once

// Translation problems and their test suites, loaded from JSONL manifests.
//
// One problem per line:
//   {"id", "dataset", "source_lang", "target_lang", "source_code",
//    "tests": [{"kind":"io","stdin","expected_stdout"} | {"kind":"harness","harness_code"}],
//    "metadata": {...}}

#include "polytrans/language.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

namespace polytrans {

enum class TestKind { io, harness };

std::string to_string(TestKind kind);

struct TestCase {
    TestKind kind = TestKind::io;
    std::string stdin_text;
    std::string expected_stdout;
    std::string harness_code;

    static TestCase io(std::string stdin_text, std::string expected_stdout);
    static TestCase harness(std::string code);
};

struct TranslationProblem {
    std::string id;
    std::string dataset;
    std::string source_lang;
    std::string target_lang;
    std::string source_code;
    std::vector<TestCase> tests;
    nlohmann::json metadata = nlohmann::json::object();

    /// Structural checks: distinct languages, nonempty and kind-homogeneous
    /// tests. Throws ValidationError naming the problem id.
    void check_structure() const;

    TestKind test_kind() const { return tests.front().kind; }
};

struct Manifest {
    std::string dataset_name;
    std::vector<TranslationProblem> problems;

    const TranslationProblem* find(const std::string& id) const;
};

nlohmann::json to_json(const TranslationProblem& p);

/// Parses and structurally validates one manifest record. Language ids are
/// resolved (aliases allowed) and stored canonically.
TranslationProblem problem_from_json(const nlohmann::json& j, const LanguageRegistry& registry);

Manifest parse_manifest(std::istream& in, const LanguageRegistry& registry);
Manifest load_manifest(const std::filesystem::path& path, const LanguageRegistry& registry);

void write_manifest(std::ostream& out, const Manifest& manifest);

/// Dataset filters. Zero means "no limit" for either field.
struct ValidationPolicy {
    std::size_t min_tests = 0;
    std::size_t max_source_bytes = 0;
};

struct ValidationResult {
    bool ok = true;
    std::vector<std::string> reasons;

    explicit operator bool() const noexcept { return ok; }
};

ValidationResult validate_problem(const TranslationProblem& p, const ValidationPolicy& policy);

}  // namespace polytrans
