#include "polytrans/cli.hpp"

#include "support.hpp"

#include <doctest.h>
#include <json.hpp>

using namespace polytrans;
using namespace testsupport;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result run(std::vector<std::string> args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return {code, out.str(), err.str()};
}

std::size_t count_lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

bool python_available() { return ToolchainRegistry::builtin().find("python")->available(); }

}  // namespace

TEST_CASE("plan") {
    auto r = run({"plan", "--source", "python", "--target", "java"});
    CHECK(r.code == kExitSuccess);
    CHECK(count_lines(r.out) == 85);
    CHECK(r.out.starts_with("python -> java\n"));

    r = run({"plan", "--source", "py", "--target", "java", "--max-depth", "3", "--intermediates",
             "python,rust,javascript,cpp,go", "--format", "json"});
    CHECK(r.code == kExitSuccess);
    CHECK(nlohmann::json::parse(r.out).at("count") == 21);

    r = run({"plan", "--source", "python", "--target", "java", "--intermediates", "python,java"});
    CHECK(r.code == kExitUsage);
    CHECK(r.err.find("java") != std::string::npos);

    CHECK(run({"plan", "--source", "cobol", "--target", "java"}).code == kExitUsage);
    CHECK(run({"plan", "--source", "python"}).code == kExitUsage);
    CHECK(run({"plan", "--source", "python", "--target", "java", "--max-depth", "0"}).code == kExitUsage);
    CHECK(run({}).code == kExitUsage);
    CHECK(run({"frobnicate"}).code == kExitUsage);

    r = run({"--help"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out.find("bench") != std::string::npos);
}

TEST_CASE("translate, bench, report, ablate end to end") {
    if (!python_available()) return;
    TempDir dir;
    const std::vector<std::string> common{"--backend-config", fixture("backend_mock.json").string(),
                                          "--toolchains",     fixture("toolchains.json").string(),
                                          "--scratch",        (dir.path / "scratch").string(),
                                          "--log-level",      "quiet"};
    auto with = [&](std::vector<std::string> tail) {
        auto args = common;
        args.insert(args.end(), tail.begin(), tail.end());
        return run(args);
    };
    const auto manifest = fixture("manifest.jsonl").string();

    auto r = with({"translate", "--manifest", manifest, "--problem-id", "reverse", "--max-depth", "2"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out.find("cpp -> rust -> python") != std::string::npos);
    CHECK(r.out.find("[::-1]") != std::string::npos);

    r = with({"translate", "--manifest", manifest, "--problem-id", "square", "--max-depth", "2", "--out",
              (dir.path / "one.jsonl").string()});
    CHECK(r.code == kExitTranslationFailed);
    CHECK(read_run_log(dir.path / "one.jsonl").size() == 1);

    CHECK(with({"translate", "--manifest", manifest, "--problem-id", "nope"}).code == kExitUsage);
    CHECK(run({"translate", "--manifest", manifest, "--problem-id", "sum", "--backend-config",
               (dir.path / "missing.json").string()})
              .code == kExitUsage);

    const auto es_log = (dir.path / "es.jsonl").string();
    r = with({"--no-timing", "bench", "--manifest", manifest, "--max-depth", "2", "--out", es_log});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out.find("66.7") != std::string::npos);  // 4 of 6
    const auto es = read_run_log(es_log);
    CHECK(es.size() == 6);
    CHECK(read_file(es_log).find("elapsed_ms") == std::string::npos);

    r = with({"bench", "--manifest", manifest, "--max-depth", "2", "--out", es_log, "--resume"});
    CHECK(r.code == kExitSuccess);
    CHECK(read_run_log(es_log).size() == 6);

    r = with({"bench", "--manifest", manifest, "--max-depth", "2", "--out", (dir.path / "filtered.jsonl").string(),
              "--min-tests", "3"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out == "no problems\n");

    const auto ex_log = (dir.path / "ex.jsonl").string();
    CHECK(with({"bench", "--manifest", manifest, "--max-depth", "2", "--mode", "exhaustive", "--out", ex_log,
                "--parallelism", "2"})
              .code == kExitSuccess);
    const auto direct_log = (dir.path / "direct.jsonl").string();
    CHECK(with({"bench", "--manifest", manifest, "--mode", "direct_k", "--k", "3", "--out", direct_log}).code ==
          kExitSuccess);

    r = run({"report", "--runs", es_log, "--baseline-runs", direct_log, "--format", "csv", "--stats"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out.starts_with("report,source,target,total,successes,ca,baseline_ca,abs_diff,rel_diff\n"));
    CHECK(r.out.find("attempts: n=4") != std::string::npos);

    r = run({"report", "--runs", ex_log, "--depth", "1", "--format", "json"});
    CHECK(r.code == kExitSuccess);
    const auto depth1 = nlohmann::json::parse(r.out);
    CHECK(depth1.back().at("successes") == "2");  // sum and max pass directly

    CHECK(run({"report", "--runs", es_log, "--depth", "1"}).code == kExitUsage);
    CHECK(run({"report", "--runs", ex_log, "--depth", "3"}).code == kExitUsage);
    CHECK(run({"report", "--runs", (dir.path / "none.jsonl").string()}).code == kExitUsage);

    r = run({"report", "--runs", ex_log, "--contingency", "--out", (dir.path / "cont.csv").string(), "--format", "csv"});
    CHECK(r.code == kExitSuccess);
    CHECK(read_file(dir.path / "cont.csv") == "condition,successes,failures\ndepth=1,2,4\ndepth=2,4,2\n");

    r = run({"ablate", "--runs", ex_log, "--remove-langs", "rust,javascript", "--format", "csv"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out.find("-javascript+rust,*,*,6,2,33.3,66.7,-33.3,-50.0") != std::string::npos);

    r = run({"ablate", "--runs", ex_log, "--all", "--format", "json"});
    CHECK(r.code == kExitSuccess);
    // 31 specs per pair, each with one pair row and one aggregate row.
    CHECK(nlohmann::json::parse(r.out).size() == 2 * 31 * 2);

    r = run({"ablate", "--runs", ex_log, "--heatmap"});
    CHECK(r.code == kExitSuccess);
    CHECK(r.out.find("mean_decrease_over_problems") != std::string::npos);

    CHECK(run({"ablate", "--runs", ex_log, "--remove-langs", "python"}).code == kExitUsage);
    CHECK(run({"ablate", "--runs", ex_log}).code == kExitUsage);
    CHECK(run({"ablate", "--runs", es_log, "--remove-langs", "rust"}).code == kExitUsage);
}
