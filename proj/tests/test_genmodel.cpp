#include <atomic>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "doctest.h"
#include "oracle.hpp"
#include "reposim/backends.hpp"
#include "reposim/errors.hpp"
#include "reposim/expr.hpp"
#include "reposim/net.hpp"
#include "reposim/repospec.hpp"
#include "support.hpp"

using namespace reposim;
using nlohmann::json;

namespace {

// Wraps the stub and keeps every request it sees.
class RecordingBackend : public Backend {
public:
    json complete(const GenerationRequest& request, const GenerationParams& params,
                  const std::string& feedback) override {
        {
            std::lock_guard lock(mu);
            seen.push_back(request);
        }
        return stub.complete(request, params, feedback);
    }
    std::mutex mu;
    std::vector<GenerationRequest> seen;
    StubBackend stub;
};

// Returns malformed output `bad` times before deferring to the stub.
class FlakyBackend : public Backend {
public:
    explicit FlakyBackend(int bad) : bad_(bad) {}
    json complete(const GenerationRequest& request, const GenerationParams& params,
                  const std::string& feedback) override {
        feedbacks.push_back(feedback);
        if (calls++ < bad_) return json{{"unexpected", true}};
        return stub.complete(request, params, feedback);
    }
    int calls = 0;
    std::vector<std::string> feedbacks;

private:
    int bad_;
    StubBackend stub;
};

class ThrowingBackend : public Backend {
public:
    json complete(const GenerationRequest&, const GenerationParams&, const std::string&) override {
        throw BackendUnavailable("offline");
    }
};

std::vector<GenerationRequest> requests_for_seeds(std::uint64_t first, std::uint64_t last) {
    auto rec = std::make_shared<RecordingBackend>();
    Generator gen(rec, nullptr);
    for (auto s = first; s <= last; ++s) build_repository_spec(s, default_taxonomy(), BuildParams{}, gen);
    return rec->seen;
}

GenerationRequest titles_request(std::uint64_t seed) {
    GenerationRequest r;
    r.stage = Stage::Titles;
    r.payload = {{"context", {{"field", "f"}, {"domain", "d"}, {"subdomain", "s"}}}};
    r.seed_tag = {seed, "titles"};
    return r;
}

}  // namespace

TEST_CASE("stage names round trip") {
    for (auto s : {Stage::Titles, Stage::Description, Stage::Abstract, Stage::PathStep, Stage::PathValues,
                   Stage::FileVariables, Stage::DistParams, Stage::DependentExpr, Stage::Paraphrase})
        CHECK(stage_from_name(stage_name(s)) == s);
    CHECK_THROWS_AS(stage_from_name("NOPE"), SchemaError);
}

TEST_CASE("params are validated") {
    GenerationParams p;
    p.k = 1;
    CHECK_THROWS_AS(validate_params(p), ConfigError);
    p.k = 2;
    p.n_path = 0;
    CHECK_THROWS_AS(validate_params(p), ConfigError);
}

TEST_CASE("titles stage yields exactly k distinct titles") {
    StubBackend stub;
    for (int k : {2, 5, 9}) {
        GenerationParams p;
        p.k = k;
        const auto r = stub.complete(titles_request(3), p, "");
        REQUIRE(r["titles"].size() == static_cast<std::size_t>(k));
        std::set<std::string> distinct(r["titles"].begin(), r["titles"].end());
        CHECK(distinct.size() == static_cast<std::size_t>(k));
        CHECK_NOTHROW(validate_response(titles_request(3), p, r));
    }
}

TEST_CASE("stub responses validate for every stage and are pure in the seed tag") {
    const auto seen = requests_for_seeds(1, 12);
    std::set<Stage> stages;
    StubBackend stub;
    GenerationParams params;
    for (const auto& req : seen) {
        stages.insert(req.stage);
        const auto a = stub.complete(req, params, "");
        const auto b = stub.complete(req, params, "");
        CHECK(a == b);
        CHECK_NOTHROW(validate_response(req, params, a));
    }
    // every stage except paraphrasing runs while building a spec
    CHECK(stages.size() == 8);
}

TEST_CASE("stub path values stay within 2..6 per placeholder") {
    for (const auto& req : requests_for_seeds(1, 40)) {
        if (req.stage != Stage::PathValues) continue;
        StubBackend stub;
        const auto r = stub.complete(req, GenerationParams{}, "");
        for (const auto& ph : req.payload["placeholders"]) {
            const auto n = r["values"][ph["name"].get<std::string>()].size();
            CHECK(n >= 2);
            CHECK(n <= 6);
        }
    }
}

TEST_CASE("stub dependent expressions reference only declared inputs and error") {
    for (const auto& req : requests_for_seeds(1, 40)) {
        if (req.stage != Stage::DependentExpr) continue;
        StubBackend stub;
        const auto expr = stub.complete(req, GenerationParams{}, "")["expr"].get<std::string>();
        std::map<std::string, ValueType> declared;
        for (const auto& in : req.payload["inputs"])
            declared[in["name"]] = in["type"] == "number" ? ValueType::Number : ValueType::String;
        const auto problems = validate_expr(expr, declared);
        INFO(expr);
        CHECK(problems.empty());
    }
}

TEST_CASE("stub paraphrase keeps the {path} token") {
    GenerationRequest r;
    r.stage = Stage::Paraphrase;
    r.payload = {{"text", "How many rows of data (excluding headers) are in the file: \"{path}\"?"},
                 {"project", {{"title", "t"}}}};
    r.seed_tag = {4, "paraphrase/x/1"};
    StubBackend stub;
    const auto out = stub.complete(r, GenerationParams{}, "");
    CHECK(out["text"].get<std::string>().find("{path}") != std::string::npos);
}

TEST_CASE("paraphrase validation rejects a dropped token") {
    GenerationRequest r;
    r.stage = Stage::Paraphrase;
    r.payload = {{"text", "read {path}"}};
    CHECK_THROWS_AS(validate_response(r, GenerationParams{}, json{{"text", "read the file"}}), SchemaViolation);
    CHECK_NOTHROW(validate_response(r, GenerationParams{}, json{{"text", "open {path} please"}}));
}

TEST_CASE("cache keys: equal requests, equal keys; model and k are part of the key") {
    GenerationParams p;
    const auto a = cache_key(titles_request(1), p);
    CHECK(a == cache_key(titles_request(1), p));
    CHECK_FALSE(a == cache_key(titles_request(2), p));
    auto q = p;
    q.model_id = "other";
    CHECK_FALSE(a == cache_key(titles_request(1), q));
    q = p;
    q.k = 3;
    CHECK_FALSE(a == cache_key(titles_request(1), q));
    CHECK(a.digest.size() == 64);
}

TEST_CASE("cache hit returns the stored response without calling the backend") {
    auto flaky = std::make_shared<FlakyBackend>(0);
    Generator gen(flaky, nullptr);
    const auto r1 = gen.generate(titles_request(5), GenerationParams{});
    const auto r2 = gen.generate(titles_request(5), GenerationParams{});
    CHECK(r1.dump() == r2.dump());
    CHECK(gen.backend_calls() == 1);
    CHECK(gen.cache_hits() == 1);
}

TEST_CASE("bounded retry with validation feedback") {
    auto twice = std::make_shared<FlakyBackend>(2);
    Generator ok(twice, nullptr);
    CHECK_NOTHROW(ok.generate(titles_request(1), GenerationParams{}));
    CHECK(twice->calls == 3);
    CHECK(twice->feedbacks[0].empty());
    CHECK(twice->feedbacks[1].find("TITLES") != std::string::npos);

    auto always = std::make_shared<FlakyBackend>(100);
    Generator bad(always, nullptr);
    CHECK_THROWS_AS(bad.generate(titles_request(1), GenerationParams{}), SchemaViolation);
    CHECK(always->calls == 3);

    GenerationParams five;
    five.max_attempts = 5;
    auto more = std::make_shared<FlakyBackend>(100);
    Generator gen5(more, nullptr);
    CHECK_THROWS_AS(gen5.generate(titles_request(1), five), SchemaViolation);
    CHECK(more->calls == 5);
}

TEST_CASE("backend failures propagate") {
    Generator gen(std::make_shared<ThrowingBackend>(), nullptr);
    CHECK_THROWS_AS(gen.generate(titles_request(1), GenerationParams{}), BackendUnavailable);
}

TEST_CASE("persistent cache replays without the backend") {
    testing_support::TempDir dir;
    {
        Generator gen(std::make_shared<StubBackend>(), std::make_shared<ResponseCache>(dir.path()));
        build_repository_spec(7, default_taxonomy(), BuildParams{}, gen);
    }
    const auto warm = testing_support::build_spec(7);
    Generator offline(std::make_shared<ThrowingBackend>(), std::make_shared<ResponseCache>(dir.path()));
    const auto replayed = build_repository_spec(7, default_taxonomy(), BuildParams{}, offline);
    CHECK(json(replayed).dump() == json(warm).dump());
    CHECK(offline.backend_calls() == 0);

    // every cached entry still validates
    std::size_t files = 0;
    for (const auto& e : std::filesystem::recursive_directory_iterator(dir.path())) {
        if (!e.is_regular_file()) continue;
        ++files;
        const auto doc = json::parse(oracle::slurp(e.path()));
        CHECK(doc.contains("key"));
        CHECK(doc.contains("response"));
    }
    CHECK(files > 5);
}

TEST_CASE("concurrent generation through one cache") {
    Generator gen(std::make_shared<StubBackend>(), nullptr);
    std::vector<std::thread> threads;
    std::vector<std::string> out(8);
    for (int t = 0; t < 8; ++t)
        threads.emplace_back([&, t] { out[static_cast<std::size_t>(t)] = gen.generate(titles_request(9), GenerationParams{}).dump(); });
    for (auto& th : threads) th.join();
    for (const auto& o : out) CHECK(o == out[0]);
}

TEST_CASE("http backend speaks chat completions") {
    HttpServer server;
    std::string captured;
    std::mutex mu;
    server.post("/v1/chat/completions", [&](const std::string& body) {
        std::lock_guard lock(mu);
        captured = body;
        const json content = {{"abstract", "A fixed abstract."}};
        const json reply = {{"choices", {{{"message", {{"role", "assistant"}, {"content", content.dump()}}}}}}};
        return std::make_pair(200, reply.dump());
    });
    const int port = server.bind("127.0.0.1", 0);
    REQUIRE(port > 0);
    std::thread runner([&] { server.run(); });
    server.wait_until_ready();

    HttpBackendConfig cfg;
    cfg.base_url = "http://127.0.0.1:" + std::to_string(port);
    cfg.model = "test-model";
    cfg.timeout_seconds = 10;
    Generator gen(std::make_shared<HttpBackend>(cfg), nullptr);
    GenerationRequest req;
    req.stage = Stage::Abstract;
    req.payload = {{"title", "t"}};
    req.seed_tag = {1, "abstract"};
    const auto r = gen.generate(req, GenerationParams{});
    CHECK(r["abstract"] == "A fixed abstract.");
    {
        std::lock_guard lock(mu);
        const auto body = json::parse(captured);
        CHECK(body["model"] == "test-model");
        CHECK(body["temperature"] == 0);
        CHECK(body["messages"].size() == 2);
    }
    server.stop();
    runner.join();

    // nothing listening any more
    HttpBackend dead(cfg);
    CHECK_THROWS_AS(dead.complete(req, GenerationParams{}, ""), BackendUnavailable);
}
