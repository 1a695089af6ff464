#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace polytrans;
using namespace testsupport;
using nlohmann::json;

namespace {

const LanguageRegistry& reg() {
    static const auto r = LanguageRegistry::builtin();
    return r;
}

Manifest parse(const std::string& text) {
    std::istringstream in(text);
    return parse_manifest(in, reg());
}

std::string random_text(std::mt19937_64& rng, std::size_t max_len) {
    static const std::string alphabet = "abcXYZ019 \n\t\"\\{}`\r\x01";
    std::uniform_int_distribution<std::size_t> len(0, max_len), pick(0, alphabet.size() - 1);
    std::string s(len(rng), ' ');
    for (auto& c : s) c = alphabet[pick(rng)];
    return s;
}

}  // namespace

TEST_CASE("io and harness records parse") {
    const auto m = parse(
        R"({"id":"a","dataset":"codenet","source_lang":"py","target_lang":"C++","source_code":"x","tests":[{"kind":"io","stdin":"1\n","expected_stdout":"2\n"}]})"
        "\n\n"
        R"J({"id":"b","dataset":"codenet","source_lang":"java","target_lang":"golang","source_code":"y","tests":[{"kind":"harness","harness_code":"check()"}],"metadata":{"difficulty":3}})J"
        "\n");
    REQUIRE(m.problems.size() == 2);
    CHECK(m.dataset_name == "codenet");
    CHECK(m.problems[0].source_lang == "python");
    CHECK(m.problems[0].target_lang == "cpp");
    CHECK(m.problems[0].test_kind() == TestKind::io);
    CHECK(m.problems[0].tests[0].expected_stdout == "2\n");
    CHECK(m.problems[1].target_lang == "go");
    CHECK(m.problems[1].test_kind() == TestKind::harness);
    CHECK(m.problems[1].metadata.at("difficulty") == 3);
    CHECK(m.find("b") == &m.problems[1]);
    CHECK(m.find("zz") == nullptr);
}

TEST_CASE("malformed records are rejected with a line number") {
    const std::string good =
        R"({"id":"a","dataset":"d","source_lang":"python","target_lang":"java","source_code":"x","tests":[{"kind":"io","stdin":"","expected_stdout":""}]})";
    try {
        parse(good + "\n{not json\n");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    CHECK_THROWS_AS(parse(good + "\n" + good + "\n"), ValidationError);
    CHECK_THROWS_WITH_AS(parse(good + "\n" + good + "\n"), doctest::Contains("duplicate"), ValidationError);

    auto mutate = [&](auto fn) {
        auto j = json::parse(good);
        fn(j);
        return j.dump();
    };
    CHECK_THROWS_AS(parse(mutate([](json& j) { j.erase("source_code"); })), ValidationError);
    CHECK_THROWS_AS(parse(mutate([](json& j) { j["tests"] = json::array(); })), ValidationError);
    CHECK_THROWS_AS(parse(mutate([](json& j) { j["target_lang"] = "python"; })), ValidationError);
    CHECK_THROWS_AS(parse(mutate([](json& j) { j["target_lang"] = "cobol"; })), UnknownLanguageError);
    CHECK_THROWS_AS(parse(mutate([](json& j) { j["tests"][0]["harness_code"] = "x"; })), ValidationError);
    CHECK_THROWS_AS(parse(mutate([](json& j) {
                        j["tests"].push_back({{"kind", "harness"}, {"harness_code", "h"}});
                    })),
                    ValidationError);
    CHECK_THROWS_AS(parse(mutate([](json& j) { j["tests"][0]["kind"] = "fuzz"; })), ValidationError);
    CHECK_THROWS_AS(parse(mutate([](json& j) { j["id"] = 5; })), ValidationError);
}

TEST_CASE("round trip preserves every field") {
    std::mt19937_64 rng(11);
    const auto langs = reg().all();
    for (int iter = 0; iter < 200; ++iter) {
        Manifest m;
        m.dataset_name = "rt";
        const int n = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int i = 0; i < n; ++i) {
            TranslationProblem p;
            p.id = "p" + std::to_string(i) + random_text(rng, 4);
            p.dataset = "rt";
            auto pick = std::uniform_int_distribution<std::size_t>(0, langs.size() - 1);
            p.source_lang = langs[pick(rng)].id;
            do p.target_lang = langs[pick(rng)].id;
            while (p.target_lang == p.source_lang);
            p.source_code = random_text(rng, 64);
            const bool harness = rng() % 2;
            const int t = std::uniform_int_distribution<int>(1, 4)(rng);
            for (int k = 0; k < t; ++k)
                p.tests.push_back(harness ? TestCase::harness("h" + random_text(rng, 20))
                                          : TestCase::io(random_text(rng, 20), random_text(rng, 20)));
            p.metadata = {{"n", i}, {"tag", random_text(rng, 5)}};
            m.problems.push_back(std::move(p));
        }
        std::ostringstream out;
        write_manifest(out, m);
        const auto back = parse(out.str());
        REQUIRE(back.problems.size() == m.problems.size());
        for (std::size_t i = 0; i < m.problems.size(); ++i) {
            CHECK(to_json(back.problems[i]) == to_json(m.problems[i]));
            CHECK(back.problems[i].source_code == m.problems[i].source_code);
        }
    }
}

TEST_CASE("validation policy") {
    auto p = make_problem("v", "python", "java", std::string(100, 'x'));
    CHECK(validate_problem(p, {}).ok);
    CHECK(validate_problem(p, {1, 100}).ok);
    auto r = validate_problem(p, {2, 99});
    CHECK_FALSE(r.ok);
    REQUIRE(r.reasons.size() == 2);
    CHECK(r.reasons[0] == "source exceeds 99 bytes");
    CHECK(r.reasons[1] == "fewer than 2 tests");
}

TEST_CASE("load_manifest falls back to the file stem") {
    TempDir dir;
    const auto path = dir.path / "mini.jsonl";
    std::ofstream(path)
        << R"({"id":"a","dataset":"","source_lang":"python","target_lang":"java","source_code":"x","tests":[{"kind":"io","stdin":"","expected_stdout":""}]})"
        << "\n";
    CHECK(load_manifest(path, reg()).dataset_name == "mini");
    CHECK_THROWS_AS(load_manifest(dir.path / "missing.jsonl", reg()), ConfigError);
}

TEST_CASE("shared fixture manifest") {
    const auto m = load_manifest(fixture("manifest.jsonl"), reg());
    CHECK(m.problems.size() == 6);
    std::set<std::pair<std::string, std::string>> pairs;
    for (const auto& p : m.problems) pairs.insert({p.source_lang, p.target_lang});
    CHECK(pairs.size() == 2);
}
