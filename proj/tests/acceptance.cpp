// Acceptance run: one PASS / FAIL / SKIP line per criterion, exit status 1 if
// any criterion failed. Criterion 10 needs a live chat backend and runs only
// when REPOSIM_LIVE_BACKEND_URL is set.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iomanip>
#include <iostream>
#include <map>
#include <set>
#include <sstream>

#include "checks.hpp"
#include "corpora.hpp"
#include "oracle.hpp"
#include "reposim/backends.hpp"
#include "reposim/errors.hpp"
#include "reposim/evalharness.hpp"
#include "reposim/grader.hpp"
#include "reposim/materializer.hpp"
#include "reposim/qaengine.hpp"
#include "reposim/stats.hpp"
#include "reposim/toolserver.hpp"
#include "support.hpp"

using namespace reposim;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
    enum class State { Pass, Fail, Skip } state = State::Pass;
    std::string detail;
};

// Collects failure messages; the first few are kept for the summary line.
class Failures {
public:
    void add(const std::string& what) {
        if (count_++ < 3) msgs_ << (count_ > 1 ? "; " : "") << what;
    }
    template <class F>
    void expect(bool ok, F&& describe) {
        if (!ok) add(describe());
    }
    int count() const { return count_; }
    Result result(const std::string& ok_detail) const {
        if (count_ == 0) return {Result::State::Pass, ok_detail};
        std::ostringstream s;
        s << count_ << " failure(s): " << msgs_.str();
        return {Result::State::Fail, s.str()};
    }

private:
    int count_ = 0;
    std::ostringstream msgs_;
};

std::shared_ptr<const Taxonomy> taxonomy() {
    return std::shared_ptr<const Taxonomy>(&default_taxonomy(), [](const Taxonomy*) {});
}

// Every spec in a run comes from a fresh generator so the two passes of the
// determinism check share nothing.
SpecProvider fresh_provider() {
    auto gen = testing_support::stub_generator();
    auto specs = std::make_shared<std::map<std::uint64_t, std::shared_ptr<const RepositorySpec>>>();
    return [gen, specs](std::uint64_t seed) {
        auto& slot = (*specs)[seed];
        if (!slot)
            slot = std::make_shared<const RepositorySpec>(
                build_repository_spec(seed, default_taxonomy(), BuildParams{}, *gen));
        return slot;
    };
}

std::string batch_bytes(const SpecProvider& specs) {
    BatchConfig cfg;
    cfg.seed_first = 1;
    cfg.seed_last = 100;
    cfg.type_counts = default_type_counts();
    cfg.paraphrase_models = {"paraphraser-1"};
    auto gen = testing_support::stub_generator();
    const auto batch = generate_batch(cfg, specs, [&](const QAItem& item, const RepositorySpec& spec,
                                                      const std::string& model, int variant) {
        GenerationParams p;
        p.model_id = model;
        return paraphrase_item(item, spec, *gen, p, variant);
    });
    std::ostringstream out;
    write_batch(batch, out);
    return out.str();
}

constexpr std::uint64_t kSeeds = 100;

// Shared between criteria 1, 3 and 4: the first export of every seed and the batch.
struct World {
    testing_support::TempDir root;
    std::string batch;
    std::vector<QAItem> items;
    std::map<std::uint64_t, std::shared_ptr<const RepositorySpec>> specs;
};

Result determinism(World& w) {
    Failures f;
    testing_support::TempDir other;
    const auto a = fresh_provider();
    const auto b = fresh_provider();
    std::size_t files = 0;
    for (std::uint64_t seed = 1; seed <= kSeeds; ++seed) {
        const auto dir_a = w.root / std::to_string(seed);
        const auto dir_b = other / std::to_string(seed);
        export_repository(*a(seed), dir_a);
        export_repository(*b(seed), dir_b);
        w.specs[seed] = a(seed);
        const auto la = oracle::list_files(dir_a);
        const auto lb = oracle::list_files(dir_b);
        if (la != lb) {
            f.add("seed " + std::to_string(seed) + ": file lists differ");
            continue;
        }
        for (const auto& rel : la) {
            ++files;
            f.expect(oracle::slurp(dir_a / rel) == oracle::slurp(dir_b / rel),
                     [&] { return "seed " + std::to_string(seed) + ": " + rel + " differs"; });
        }
    }
    w.batch = batch_bytes(a);
    f.expect(batch_bytes(b) == w.batch, [] { return std::string("question batches differ"); });
    std::istringstream in(w.batch);
    w.items = read_batch(in).items;
    std::ostringstream ok;
    ok << kSeeds << " seeds, " << files << " files, " << w.items.size() << " questions, 0 diffs";
    return f.result(ok.str());
}

Result path_counts() {
    RandomStream s(20240601);
    PathSamplerParams p;  // alpha 1.05, beta 25, l 15, h 10000
    const std::size_t n = 10000;
    std::vector<std::int64_t> counts(n);
    std::size_t below = 0;
    for (auto& c : counts) {
        // cross-product sizes spread log-uniformly over [1e4, 1e7]
        const auto h_max = static_cast<std::int64_t>(std::pow(10.0, 4.0 + 3.0 * s.uniform()));
        c = sample_path_count(h_max, p, s);
        if (c < 500) ++below;
    }
    std::nth_element(counts.begin(), counts.begin() + n / 2, counts.end());
    const auto median = counts[n / 2];
    const double p_value = checks::sign_test_p(below, n);
    std::ostringstream d;
    d << "median " << median << ", " << below << "/" << n << " below 500, sign-test p " << p_value;
    return {median < 500 && p_value < 0.01 ? Result::State::Pass : Result::State::Fail, d.str()};
}

Result oracle_equivalence(World& w) {
    Failures f;
    std::set<QuestionType> types;
    std::size_t checked = 0;
    std::map<std::uint64_t, std::unique_ptr<oracle::ExportedRepo>> repos;
    for (const auto& item : w.items) {
        auto& repo = repos[item.repo_seed];
        if (!repo)
            repo = std::make_unique<oracle::ExportedRepo>(w.root / std::to_string(item.repo_seed),
                                                          oracle::RepoMeta::from_spec(*w.specs.at(item.repo_seed)));
        std::string why;
        try {
            f.expect(oracle::agrees(item, oracle::recompute(*repo, item), &why), [&] { return item.id + ": " + why; });
        } catch (const std::exception& e) {
            f.add(item.id + ": " + e.what());
        }
        types.insert(item.type);
        ++checked;
    }
    f.expect(checked >= 300, [&] { return "only " + std::to_string(checked) + " questions"; });
    f.expect(types.size() == 11, [&] { return "only " + std::to_string(types.size()) + " types"; });
    return f.result(std::to_string(checked) + " questions over " + std::to_string(types.size()) +
                    " types agree with the recompute oracle");
}

Result certification(World& w) {
    Failures f;
    std::size_t unanswerable = 0, answerable = 0;
    std::map<std::uint64_t, std::unique_ptr<oracle::ExportedRepo>> repos;
    for (const auto& item : w.items) {
        const auto& spec = *w.specs.at(item.repo_seed);
        if (item.ground_truth.possible) {
            ++answerable;
            bool certified = true;
            try {
                certify_unanswerable(spec, item);
            } catch (const CertificationFailure&) {
                certified = false;
            }
            f.expect(!certified, [&] { return item.id + ": answerable item certified"; });
            continue;
        }
        ++unanswerable;
        auto& repo = repos[item.repo_seed];
        if (!repo)
            repo = std::make_unique<oracle::ExportedRepo>(w.root / std::to_string(item.repo_seed),
                                                          oracle::RepoMeta::from_spec(spec));
        std::string why;
        f.expect(!item.certificate.is_null(), [&] { return item.id + ": no certificate"; });
        f.expect(oracle::check_certificate(*repo, item, &why), [&] { return item.id + ": " + why; });
    }
    f.expect(unanswerable > 0, [] { return std::string("no unanswerable items in the batch"); });
    return f.result(std::to_string(unanswerable) + " certificates validated, 0 of " + std::to_string(answerable) +
                    " answerable items certify");
}

Result grading() {
    Failures f;
    const auto worked = corpora::make_item(AnswerKind::Continuous, 1.234, {}, 3);
    f.expect(grade(extract_answer("1.235"), worked).correct, [] { return std::string("1.235 vs 1.234 graded wrong"); });
    RandomStream s(2718);
    const auto items = corpora::grading_items();
    std::size_t cases = 0;
    for (int i = 0; i < 200; ++i) {
        const auto response = corpora::adversarial_response(s);
        for (const auto& item : items) {
            const auto got = grade(extract_answer(response), item);
            const auto want = oracle::reference_grade(response, item);
            ++cases;
            f.expect(got.correct == want.correct && got.predicted_not_possible == want.predicted_not_possible,
                     [&] { return "disagreement on " + json(response).dump(); });
        }
    }
    return f.result("worked example correct; 200 responses x " + std::to_string(items.size()) + " items (" +
                    std::to_string(cases) + " gradings) match the reference grader");
}

bool close(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

Result chi_square_numerics() {
    Failures f;
    for (auto [df, x] : {std::pair{1.0, 3.841}, std::pair{2.0, 5.991}}) {
        const double got = chi_square_pvalue(df, x);
        const double want = oracle::chi_square_sf_integrated(df, x);
        f.expect(round_sig(got, 3) == 0.05 && round_sig(want, 3) == 0.05,
                 [&] { return "p(" + std::to_string(df) + ", " + std::to_string(x) + ") = " + std::to_string(got); });
    }
    RandomStream s(61);
    double worst = 0;
    for (int i = 0; i < 1000; ++i) {
        const double df = static_cast<double>(1 + s.index(30));
        const double x = 0.01 + 60.0 * s.uniform();
        const double got = chi_square_pvalue(df, x);
        const double want = oracle::chi_square_sf_integrated(df, x);
        worst = std::max(worst, std::fabs(got - want) / std::max(std::fabs(want), 1e-300));
        f.expect(close(got, want, 1e-9), [&] {
            std::ostringstream m;
            m.precision(17);
            m << "df " << df << " x " << x << ": " << got << " vs " << want;
            return m.str();
        });
    }
    std::ostringstream ok;
    ok << "critical values give 0.0500; 1000 random pairs, worst relative error " << worst;
    return f.result(ok.str());
}

Result wire_fidelity() {
    Failures f;
    ToolService svc(taxonomy(), BuildParams{}, testing_support::stub_generator());
    const auto calls = corpora::golden_calls(*svc.spec(7));
    const auto golden = json::parse(oracle::slurp(testing_support::source_dir() / "tests/golden/toolserver.json"));
    f.expect(golden.size() == calls.size(), [] { return std::string("golden size mismatch"); });
    for (std::size_t i = 0; i < std::min(golden.size(), calls.size()); ++i) {
        const auto& c = calls[i];
        auto text = dump_envelope(svc.call(c["tool"], c["arguments"]));
        if (c.value("digest", false)) text = to_hex(sha256(text));
        f.expect(golden[i]["call"] == c && golden[i]["envelope"] == text,
                 [&] { return "golden call " + std::to_string(i) + " differs"; });
    }
    // documented shapes
    const auto listing = json::parse(dump_envelope(svc.call("list_directory", {{"id", 7}, {"prefix", ""}})));
    f.expect(listing["status"] == "success" && listing["paths"].is_array(), [] { return std::string("list shape"); });
    const auto text = json::parse(dump_envelope(svc.call("read_text_file", {{"id", 7}, {"path", "README.md"}})));
    f.expect(text.contains("status") && (text["status"] == "error" || text["file_content"].is_string()),
             [] { return std::string("read shape"); });

    std::set<std::string> extensions;
    for (std::uint64_t id = 1; id <= 200 && extensions.size() < 6; ++id) {
        const auto spec = svc.spec(id);
        const auto& p = spec->paths.front();
        const auto ext = fs::path(p).extension().string();
        if (!extensions.insert(ext).second) continue;
        const auto e = json::parse(dump_envelope(svc.call("read_binary_file", {{"id", id}, {"path", p}})));
        f.expect(e["status"] == "success" &&
                     base64_decode(e["content_base64"].get<std::string>()) == vfs_file_bytes(*spec, p),
                 [&] { return "base64 round trip failed for " + ext; });
    }
    f.expect(extensions.size() == 6, [&] { return "saw only " + std::to_string(extensions.size()) + " extensions"; });
    std::string exts;
    for (const auto& e : extensions) exts += (exts.empty() ? "" : " ") + e;
    return f.result(std::to_string(calls.size()) + " golden envelopes match; base64 round trip on " + exts);
}

Result harness_sanity() {
    Failures f;
    ToolService svc(taxonomy(), BuildParams{}, testing_support::stub_generator());
    BatchConfig cfg;
    cfg.seed_first = 1;
    cfg.seed_last = 10;
    cfg.per_repo = 2;
    for (auto t : all_question_types()) cfg.type_counts[t] = 4;
    const auto items = generate_batch(cfg, [&](std::uint64_t s) { return svc.spec(s); }).items;
    const ToolExecutor tools = [&](const std::string& t, const json& a) { return svc.call(t, a); };
    const auto descriptors = svc.tool_descriptors();

    const auto abstain = compute_metrics(run_evaluation(items, [] { return make_abstain_agent(); }, tools,
                                                        descriptors, EpisodeLimits{}))
                             .by_variant.at("all");
    std::size_t unanswerable = 0;
    for (const auto& item : items) unanswerable += item.ground_truth.possible ? 0 : 1;
    const double fraction = static_cast<double>(unanswerable) / static_cast<double>(items.size());
    f.expect(unanswerable > 0, [] { return std::string("batch has no unanswerable items"); });
    f.expect(abstain.recall && *abstain.recall == 1.0, [] { return std::string("abstain recall is not 1"); });
    f.expect(abstain.precision && *abstain.precision == fraction,
             [] { return std::string("abstain precision differs from the unanswerable fraction"); });

    const auto oracle_acc =
        compute_metrics(run_evaluation(items, [&] { return make_oracle_agent(items); }, tools, descriptors,
                                       EpisodeLimits{}))
            .by_variant.at("all")
            .accuracy;
    f.expect(oracle_acc == 1.0, [&] { return "oracle accuracy " + std::to_string(oracle_acc); });

    // two raters over four units: (1,1) (1,0) (0,0) (0,0); D_o = 1/4, D_e = 15/28
    const double alpha = krippendorff_alpha({{1, 1}, {1, 0}, {0, 0}, {0, 0}}).alpha;
    f.expect(std::fabs(alpha - 8.0 / 15.0) <= 1e-15, [&] { return "fixture alpha " + std::to_string(alpha); });

    RandomStream s(10101);
    std::vector<std::pair<std::optional<int>, std::optional<int>>> coin;
    for (int i = 0; i < 10000; ++i) coin.emplace_back(static_cast<int>(s.index(2)), static_cast<int>(s.index(2)));
    const double coin_alpha = krippendorff_alpha(coin).alpha;
    f.expect(std::fabs(coin_alpha) < 0.05, [&] { return "coin-flip alpha " + std::to_string(coin_alpha); });

    std::ostringstream ok;
    ok << items.size() << " items, unanswerable fraction " << fraction << "; abstain recall 1, precision "
       << *abstain.precision << "; oracle accuracy 1; fixture alpha 8/15; coin-flip alpha " << coin_alpha;
    return f.result(ok.str());
}

Result samplers() {
    Failures f;
    std::uint64_t seed = 900;
    const auto dists = checks::reference_distributions();
    for (const auto& d : dists) {
        const auto r = checks::moment_test(d, ++seed, 100000, 5.0);
        f.expect(r.pass, [&] { return r.detail; });
    }
    auto spec = *testing_support::shared_spec(1);
    // a synthetic repository of 10^4 files; a row count depends only on the path bytes
    spec.paths.clear();
    for (int i = 0; i < 10000; ++i) spec.paths.push_back("gof/file_" + std::to_string(i) + ".csv");
    std::sort(spec.paths.begin(), spec.paths.end());
    std::vector<long> counts;
    for (const auto& p : spec.paths) counts.push_back(static_cast<long>(row_count(spec, p)));
    const auto gof = checks::rounded_normal_gof(counts, 150.0, 40.0, 0.01);
    f.expect(gof.pass, [&] { return "row counts: " + gof.detail; });
    return f.result(std::to_string(dists.size()) + " distributions within 5 SE over 1e5 draws; row counts " +
                    gof.detail);
}

Result live_smoke() {
    const char* url = std::getenv("REPOSIM_LIVE_BACKEND_URL");
    if (!url || !*url) return {Result::State::Skip, "set REPOSIM_LIVE_BACKEND_URL to run against a live backend"};
    const auto start = std::chrono::steady_clock::now();
    Failures f;
    try {
        HttpBackendConfig cfg;
        cfg.base_url = url;
        if (const char* m = std::getenv("REPOSIM_LIVE_MODEL")) cfg.model = m;
        auto gen = std::make_shared<Generator>(std::make_shared<HttpBackend>(cfg), std::make_shared<ResponseCache>());
        ToolService svc(taxonomy(), BuildParams{}, gen);
        ToolHttpServer server(svc);
        const int port = server.bind("127.0.0.1", 0);
        server.start();
        const auto spec = svc.spec(1);
        const auto item = generate_question(*spec, QuestionType::CountRows, 1);
        auto agent = make_reference_agent();
        const auto tools = remote_tool_executor("http://127.0.0.1:" + std::to_string(port));
        const auto record = run_episode(*agent, item, 0, tools, svc.tool_descriptors(), EpisodeLimits{});
        server.stop();
        f.expect(record.grade.correct, [&] { return "count-rows answer graded incorrect: " + record.extracted.answer_text; });
    } catch (const std::exception& e) {
        f.add(e.what());
    }
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    f.expect(secs < 300, [&] { return "took " + std::to_string(secs) + " s"; });
    return f.result("seed 1 generated against " + std::string(url) + ", served, answered correctly in " +
                    std::to_string(static_cast<int>(secs)) + " s");
}

}  // namespace

int main() {
    World world;
    const std::vector<std::pair<std::string, std::function<Result()>>> criteria = {
        {"determinism", [&] { return determinism(world); }},
        {"path-count median", path_counts},
        {"ground-truth oracle equivalence", [&] { return oracle_equivalence(world); }},
        {"unanswerability certification", [&] { return certification(world); }},
        {"grading rubric", grading},
        {"chi-square numerics", chi_square_numerics},
        {"wire fidelity", wire_fidelity},
        {"harness sanity", harness_sanity},
        {"samplers", samplers},
        {"live end-to-end smoke", live_smoke},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const auto start = std::chrono::steady_clock::now();
        Result r;
        try {
            r = criteria[i].second();
        } catch (const std::exception& e) {
            r = {Result::State::Fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        const char* tag = r.state == Result::State::Pass ? "PASS" : r.state == Result::State::Fail ? "FAIL" : "SKIP";
        if (r.state == Result::State::Fail) ++failed;
        std::cout << "[" << tag << "] " << (i + 1) << ". " << criteria[i].first << " (" << std::fixed
                  << std::setprecision(1) << secs << " s): " << std::defaultfloat << r.detail << std::endl;
    }
    return failed == 0 ? 0 : 1;
}
