#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace polytrans;
using namespace testsupport;

namespace {

PlanConfig config(const std::string& src, const std::string& tgt, const std::vector<std::string>& inter, int depth) {
    const auto reg = LanguageRegistry::builtin();
    return PlanConfig{reg.get(src), reg.get(tgt), reg.resolve_list(inter), depth};
}

}  // namespace

TEST_CASE("closed forms") {
    CHECK(count_paths(5, 4) == 85);
    CHECK(count_paths(5, 3) == 21);
    CHECK(count_paths(1, 4) == 1);
    CHECK(count_paths(2, 4) == 4);
    CHECK(unique_edges(config("python", "java", {"python", "rust", "javascript", "cpp", "go"}, 4)) == 169);
    CHECK(unique_edges(config("python", "java", {"python", "rust", "javascript", "cpp", "go"}, 3)) == 41);
}

TEST_CASE("five-language configuration order") {
    const auto paths = generate_paths(config("python", "java", {"python", "rust", "javascript", "cpp", "go"}, 3));
    REQUIRE(paths.size() == 21);
    CHECK(paths[0].to_string() == "python -> java");
    CHECK(paths[1].to_string() == "python -> rust -> java");
    CHECK(paths[2].to_string() == "python -> javascript -> java");
    CHECK(paths[3].to_string() == "python -> cpp -> java");
    CHECK(paths[4].to_string() == "python -> go -> java");
    CHECK(paths[5].to_string() == "python -> rust -> python -> java");
    CHECK(paths[20].to_string() == "python -> go -> cpp -> java");
}

TEST_CASE("every built-in pair has 85 paths at depth 4") {
    const auto reg = LanguageRegistry::builtin();
    for (const auto& s : reg.all())
        for (const auto& t : reg.all()) {
            if (s == t) continue;
            const auto cfg = PlanConfig::for_pair(s, t, reg.all(), 4);
            CHECK(cfg.intermediates.size() == 5);
            CHECK(generate_paths(cfg).size() == 85);
        }
}

TEST_CASE("brute-force equivalence and prefix oracle") {
    const auto reg = LanguageRegistry::builtin();
    std::mt19937_64 rng(7);
    for (int iter = 0; iter < 100; ++iter) {
        auto langs = reg.all();
        std::shuffle(langs.begin(), langs.end(), rng);
        const auto target = langs.back();
        langs.pop_back();
        const std::size_t n = std::uniform_int_distribution<std::size_t>(1, langs.size())(rng);
        std::vector<Language> inter(langs.begin(), langs.begin() + n);
        const auto source = inter[std::uniform_int_distribution<std::size_t>(0, n - 1)(rng)];
        const int depth = std::uniform_int_distribution<int>(1, 4)(rng);
        PlanConfig cfg{source, target, inter, depth};

        const auto got = generate_paths(cfg);
        const auto want = brute_force_paths(cfg);
        REQUIRE(got.paths == want);
        CHECK(got.size() == count_paths(n, depth));
        CHECK(unique_edges(cfg) == prefix_count(want));
        for (const auto& p : got) {
            CHECK(p.source() == source.id);
            CHECK(p.target() == target.id);
            CHECK(p.edges() <= static_cast<std::size_t>(depth));
        }
        CHECK(std::set<TranslationPath>(got.begin(), got.end()).size() == got.size());
    }
}

TEST_CASE("sum of path lengths without caching") {
    const auto cfg = config("python", "java", {"python", "rust", "javascript", "cpp", "go"}, 4);
    CHECK(sum_of_lengths(generate_paths(cfg).paths) == 313);
}

TEST_CASE("config validation") {
    CHECK_THROWS_AS(config("python", "java", {"rust", "cpp"}, 3).validate(), ValidationError);
    CHECK_THROWS_AS(config("python", "java", {"python", "java"}, 3).validate(), ValidationError);
    CHECK_THROWS_AS(config("python", "java", {"python", "cpp", "cpp"}, 3).validate(), ValidationError);
    CHECK_THROWS_AS(config("python", "java", {"python"}, 0).validate(), ValidationError);
    CHECK_THROWS_AS(config("python", "python", {"python"}, 2).validate(), ValidationError);
    CHECK_NOTHROW(config("python", "java", {"python"}, 1).validate());
    CHECK_THROWS_AS(generate_paths(config("python", "java", {"rust"}, 2)), ValidationError);
}

TEST_CASE("for_pair builds the pool") {
    const auto reg = LanguageRegistry::builtin();
    const auto cfg = PlanConfig::for_pair(reg.get("java"), reg.get("python"), reg.resolve_list({"cpp", "python", "go"}), 2);
    std::vector<std::string> ids;
    for (const auto& l : cfg.intermediates) ids.push_back(l.id);
    CHECK(ids == std::vector<std::string>{"java", "cpp", "go"});
}

TEST_CASE("formats") {
    const auto paths = generate_paths(config("python", "java", {"python", "cpp"}, 2));
    CHECK(format_paths(paths, PlanFormat::text) == "python -> java\npython -> cpp -> java\n");
    const auto j = nlohmann::json::parse(format_paths(paths, parse_plan_format("json")));
    CHECK(j.at("count") == 2);
    CHECK(j.at("paths").at(1) == nlohmann::json{"python", "cpp", "java"});
    const auto dot = format_paths(paths, PlanFormat::dot);
    CHECK(dot.find("digraph") != std::string::npos);
    CHECK_THROWS_AS(parse_plan_format("yaml"), ConfigError);
}

TEST_CASE("custom languages participate") {
    auto reg = LanguageRegistry::builtin();
    reg.add(Language{"kotlin", "Kotlin", "kt", {"kt"}});
    CHECK(reg.resolve_tag("KT")->id == "kotlin");
    PlanConfig cfg{reg.get("python"), reg.get("kotlin"), reg.resolve_list({"python", "java"}), 3};
    CHECK(generate_paths(cfg).size() == 3);
    CHECK_THROWS_AS(reg.get("cobol"), UnknownLanguageError);
    CHECK_THROWS_AS(reg.add(Language{"Bad-Id", "x", "x", {}}), ValidationError);
}
