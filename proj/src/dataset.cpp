#include "polytrans/dataset.hpp"

#include "polytrans/error.hpp"

#include <fstream>
#include <set>

namespace polytrans {

using nlohmann::json;

std::string to_string(TestKind kind) { return kind == TestKind::io ? "io" : "harness"; }

TestCase TestCase::io(std::string stdin_text, std::string expected_stdout) {
    TestCase t;
    t.kind = TestKind::io;
    t.stdin_text = std::move(stdin_text);
    t.expected_stdout = std::move(expected_stdout);
    return t;
}

TestCase TestCase::harness(std::string code) {
    TestCase t;
    t.kind = TestKind::harness;
    t.harness_code = std::move(code);
    return t;
}

void TranslationProblem::check_structure() const {
    const std::string who = "problem '" + id + "': ";
    if (id.empty()) throw ValidationError("problem with empty id");
    if (source_lang == target_lang)
        throw ValidationError(who + "source and target language are both '" + source_lang + "'");
    if (tests.empty()) throw ValidationError(who + "no tests");
    for (const auto& t : tests) {
        if (t.kind != tests.front().kind)
            throw ValidationError(who + "mixes io and harness tests");
        if (t.kind == TestKind::harness && t.harness_code.empty())
            throw ValidationError(who + "harness test with empty harness_code");
    }
}

const TranslationProblem* Manifest::find(const std::string& id) const {
    for (const auto& p : problems)
        if (p.id == id) return &p;
    return nullptr;
}

json to_json(const TranslationProblem& p) {
    json tests = json::array();
    for (const auto& t : p.tests) {
        if (t.kind == TestKind::io)
            tests.push_back({{"kind", "io"}, {"stdin", t.stdin_text}, {"expected_stdout", t.expected_stdout}});
        else
            tests.push_back({{"kind", "harness"}, {"harness_code", t.harness_code}});
    }
    return json{{"id", p.id},
                {"dataset", p.dataset},
                {"source_lang", p.source_lang},
                {"target_lang", p.target_lang},
                {"source_code", p.source_code},
                {"tests", std::move(tests)},
                {"metadata", p.metadata}};
}

namespace {

std::string required_string(const json& j, const char* field, const std::string& who) {
    auto it = j.find(field);
    if (it == j.end()) throw ValidationError(who + "missing field '" + field + "'");
    if (!it->is_string()) throw ValidationError(who + "field '" + field + "' must be a string");
    return it->get<std::string>();
}

std::string resolve_lang(const LanguageRegistry& registry, const std::string& tag) {
    if (const auto* lang = registry.resolve_tag(tag)) return lang->id;
    throw UnknownLanguageError(tag);
}

TestCase test_from_json(const json& t, const std::string& who) {
    if (!t.is_object()) throw ValidationError(who + "test entries must be objects");
    const auto kind = required_string(t, "kind", who);
    if (kind == "io") {
        if (t.contains("harness_code"))
            throw ValidationError(who + "io test carries harness_code");
        return TestCase::io(required_string(t, "stdin", who),
                            required_string(t, "expected_stdout", who));
    }
    if (kind == "harness") {
        if (t.contains("stdin") || t.contains("expected_stdout"))
            throw ValidationError(who + "harness test carries io fields");
        return TestCase::harness(required_string(t, "harness_code", who));
    }
    throw ValidationError(who + "unknown test kind '" + kind + "'");
}

}  // namespace

TranslationProblem problem_from_json(const json& j, const LanguageRegistry& registry) {
    if (!j.is_object()) throw ValidationError("manifest record must be a JSON object");
    TranslationProblem p;
    p.id = required_string(j, "id", "record: ");
    const std::string who = "problem '" + p.id + "': ";
    p.dataset = j.value("dataset", "");
    p.source_lang = resolve_lang(registry, required_string(j, "source_lang", who));
    p.target_lang = resolve_lang(registry, required_string(j, "target_lang", who));
    p.source_code = required_string(j, "source_code", who);

    auto tests = j.find("tests");
    if (tests == j.end()) throw ValidationError(who + "missing field 'tests'");
    if (!tests->is_array()) throw ValidationError(who + "field 'tests' must be an array");
    for (const auto& t : *tests) p.tests.push_back(test_from_json(t, who));

    if (auto meta = j.find("metadata"); meta != j.end()) {
        if (!meta->is_object()) throw ValidationError(who + "metadata must be an object");
        p.metadata = *meta;
    }
    p.check_structure();
    return p;
}

Manifest parse_manifest(std::istream& in, const LanguageRegistry& registry) {
    Manifest m;
    std::set<std::string> ids;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw ParseError(std::string("invalid JSON: ") + e.what(), lineno);
        }
        TranslationProblem p;
        try {
            p = problem_from_json(j, registry);
        } catch (const UnknownLanguageError&) {
            throw;
        } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(lineno) + ": " + e.what());
        }
        if (!ids.insert(p.id).second)
            throw ValidationError("line " + std::to_string(lineno) + ": duplicate problem id '" +
                                  p.id + "'");
        if (m.dataset_name.empty()) m.dataset_name = p.dataset;
        m.problems.push_back(std::move(p));
    }
    return m;
}

Manifest load_manifest(const std::filesystem::path& path, const LanguageRegistry& registry) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    auto m = parse_manifest(in, registry);
    if (m.dataset_name.empty()) m.dataset_name = path.stem().string();
    return m;
}

void write_manifest(std::ostream& out, const Manifest& manifest) {
    for (const auto& p : manifest.problems) {
        auto j = to_json(p);
        if (p.dataset.empty() && !manifest.dataset_name.empty()) j["dataset"] = manifest.dataset_name;
        out << j.dump() << '\n';
    }
}

ValidationResult validate_problem(const TranslationProblem& p, const ValidationPolicy& policy) {
    ValidationResult r;
    if (policy.max_source_bytes != 0 && p.source_code.size() > policy.max_source_bytes)
        r.reasons.push_back("source exceeds " + std::to_string(policy.max_source_bytes) + " bytes");
    if (policy.min_tests != 0 && p.tests.size() < policy.min_tests)
        r.reasons.push_back("fewer than " + std::to_string(policy.min_tests) + " tests");
    r.ok = r.reasons.empty();
    return r;
}

}  // namespace polytrans
