#include <fstream>
#include <sstream>

#include "doctest.h"
#include "oracle.hpp"
#include "reposim/cli.hpp"
#include "reposim/errors.hpp"
#include "support.hpp"

using namespace reposim;
using nlohmann::json;

namespace {

struct Run {
    int code = 0;
    std::string out, err;
};

Run cli(std::vector<std::string> args) {
    args.insert(args.begin(), "reposim");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    Run r;
    r.code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

std::string file(const std::filesystem::path& p) { return oracle::slurp(p); }

}  // namespace

TEST_CASE("help and usage errors") {
    CHECK(cli({"--help"}).code == 0);
    CHECK(cli({"--help"}).out.find("gen-repo") != std::string::npos);
    CHECK(cli({}).code == 2);
    CHECK(cli({"no-such-command"}).code == 2);
    CHECK(cli({"gen-repo"}).code == 2);  // --seed is required
    CHECK(cli({"gen-questions", "--seeds", "5..1", "--out", "x"}).code == 2);
}

TEST_CASE("seed ranges") {
    CHECK(parse_seed_range("1..100") == std::pair<std::uint64_t, std::uint64_t>{1, 100});
    CHECK(parse_seed_range("7") == std::pair<std::uint64_t, std::uint64_t>{7, 7});
    CHECK_THROWS_AS(parse_seed_range("3..1"), ConfigError);
    CHECK_THROWS_AS(parse_seed_range("a..b"), ConfigError);
    CHECK_THROWS_AS(parse_seed_range(""), ConfigError);
}

TEST_CASE("the shipped default configuration is the built-in one") {
    const auto shipped = json::parse(file(testing_support::source_dir() / "configs/default.json"));
    CHECK(shipped == run_config_to_json(RunConfig{}));
    CHECK(run_config_to_json(run_config_from_json(shipped)) == shipped);
}

TEST_CASE("configuration errors exit with code 2") {
    testing_support::TempDir dir;
    auto write = [&](const std::string& name, const json& j) {
        std::ofstream(dir / name) << j.dump();
        return (dir / name).string();
    };
    auto unknown = write("unknown.json", {{"no_such_key", 1}});
    auto r = cli({"--config", unknown, "--print-config"});
    CHECK(r.code == 2);
    CHECK(r.err.find("no_such_key") != std::string::npos);

    auto bad = write("bad.json", {{"generation", {{"p_readme", 2.0}}}});
    CHECK(cli({"--config", bad, "gen-repo", "--seed", "1"}).code == 2);

    std::ofstream(dir / "broken.json") << "{not json";
    CHECK(cli({"--config", (dir / "broken.json").string(), "--print-config"}).code == 2);
    CHECK(cli({"--config", (dir / "missing.json").string(), "--print-config"}).code == 2);

    auto partial = write("partial.json", {{"materializer", {{"mu_rows", 20.0}}}});
    r = cli({"--config", partial, "--print-config"});
    CHECK(r.code == 0);
    const auto printed = json::parse(r.out);
    CHECK(printed["materializer"]["mu_rows"] == 20.0);
    CHECK(printed["materializer"]["sigma_rows"] == 40.0);
}

TEST_CASE("gen-repo exports identical bytes twice") {
    testing_support::TempDir a, b;
    CHECK(cli({"gen-repo", "--seed", "12", "--out", a.path().string()}).code == 0);
    CHECK(cli({"gen-repo", "--seed", "12", "--out", b.path().string()}).code == 0);
    const auto files = oracle::list_files(a.path());
    REQUIRE_FALSE(files.empty());
    CHECK(files == oracle::list_files(b.path()));
    for (const auto& f : files) CHECK(file(a / f) == file(b / f));

    const auto summary = cli({"gen-repo", "--seed", "12"});
    CHECK(summary.code == 0);
    const auto j = json::parse(summary.out);
    CHECK(j["seed"] == 12);
    CHECK(j["files"].get<std::size_t>() + (j["readme"].get<bool>() ? 1 : 0) == files.size());
}

TEST_CASE("questions, certification, evaluation and grading end to end") {
    testing_support::TempDir dir;
    const auto batch = (dir / "batch.jsonl").string();
    const auto ledger = (dir / "ledger.jsonl").string();
    const auto report = (dir / "report.json").string();

    auto r = cli({"gen-questions", "--seeds", "1..4", "--per-repo", "2", "--out", batch});
    REQUIRE(r.code == 0);
    CHECK(r.out.find("wrote") != std::string::npos);
    const auto first = file(batch);
    REQUIRE(cli({"gen-questions", "--seeds", "1..4", "--per-repo", "2", "--out", batch}).code == 0);
    CHECK(file(batch) == first);

    r = cli({"certify", "--batch", batch});
    CHECK(r.code == 0);
    CHECK(r.out.find(" 0 failures") != std::string::npos);

    r = cli({"eval", "--batch", batch, "--ledger", ledger, "--agent", "oracle", "--report", report});
    REQUIRE(r.code == 0);
    const auto rep = json::parse(file(report));
    CHECK(rep["slices"]["all"]["accuracy"] == 1.0);

    r = cli({"grade", "--batch", batch, "--ledger", ledger, "--out", (dir / "regraded.jsonl").string()});
    CHECK(r.code == 0);
    CHECK(file(dir / "regraded.jsonl") == file(ledger));

    r = cli({"eval", "--batch", batch, "--ledger", ledger, "--agent", "abstain", "--templated-only"});
    CHECK(r.code == 0);

    r = cli({"paraphrase", "--batch", batch, "--out", (dir / "para.jsonl").string(), "--models", "a,b"});
    CHECK(r.code == 0);
    std::ifstream in(dir / "para.jsonl");
    const auto reread = read_batch(in);
    for (const auto& item : reread.items) CHECK(item.paraphrases.size() == 2);
}

TEST_CASE("missing inputs are configuration errors, bad contents are runtime failures") {
    testing_support::TempDir dir;
    CHECK(cli({"certify", "--batch", (dir / "absent.jsonl").string()}).code == 2);
    std::ofstream(dir / "tax.json") << json{{"taxonomy", (dir / "nowhere.json").string()}}.dump();
    const auto r = cli({"--config", (dir / "tax.json").string(), "gen-repo", "--seed", "1"});
    CHECK(r.code == 2);
    CHECK(r.err.find((dir / "nowhere.json").string()) != std::string::npos);
    std::ofstream(dir / "junk.jsonl") << "not a batch\n";
    CHECK(cli({"certify", "--batch", (dir / "junk.jsonl").string()}).code == 1);
}

TEST_CASE("an unreachable agent fails the run") {
    testing_support::TempDir dir;
    const auto batch = (dir / "b.jsonl").string();
    REQUIRE(cli({"gen-questions", "--seeds", "1..1", "--per-repo", "1", "--no-paraphrase", "--out", batch}).code == 0);
    const auto r = cli({"eval", "--batch", batch, "--ledger", (dir / "l.jsonl").string(), "--agent-url",
                        "http://127.0.0.1:1"});
    CHECK(r.code == 1);
}
