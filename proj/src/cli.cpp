#include "reposim/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <set>
#include <sstream>
#include <tuple>

#include "reposim/errors.hpp"
#include "reposim/materializer.hpp"

namespace reposim {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Config

BatchConfig RunConfig::default_batch_config() {
    BatchConfig c;
    c.type_counts = default_type_counts();
    c.paraphrase_models = {"paraphraser-1", "paraphraser-2", "paraphraser-3"};
    return c;
}

namespace {

void check_keys(const json& j, const std::string& section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ConfigError("config: " + section + " must be an object");
    for (const auto& [k, v] : j.items()) {
        bool ok = false;
        for (const char* a : allowed) ok = ok || k == a;
        if (!ok) throw ConfigError("config: unknown key " + section + "." + k);
    }
}

template <class T>
void read(const json& j, const char* key, T& into, const std::string& section) {
    if (!j.contains(key)) return;
    try {
        into = j.at(key).get<T>();
    } catch (const json::exception&) {
        throw ConfigError("config: " + section + "." + key + " has the wrong type");
    }
}

HttpBackendConfig http_backend_from(const json& j, const std::string& section) {
    HttpBackendConfig c;
    check_keys(j, section, {"base_url", "endpoint", "model", "api_key_env", "timeout_seconds"});
    read(j, "base_url", c.base_url, section);
    read(j, "endpoint", c.endpoint, section);
    read(j, "model", c.model, section);
    read(j, "api_key_env", c.api_key_env, section);
    read(j, "timeout_seconds", c.timeout_seconds, section);
    return c;
}

json http_backend_json(const HttpBackendConfig& c) {
    return {{"base_url", c.base_url},
            {"endpoint", c.endpoint},
            {"model", c.model},
            {"api_key_env", c.api_key_env},
            {"timeout_seconds", c.timeout_seconds}};
}

}  // namespace

RunConfig run_config_from_json(const json& j) {
    RunConfig c;
    check_keys(j, "config", {"taxonomy", "generation", "materializer", "path_sampler", "backend", "cache_dir",
                             "serve", "questions", "eval"});
    if (j.contains("taxonomy") && !j.at("taxonomy").is_null())
        c.taxonomy = j.at("taxonomy").get<std::string>();
    if (j.contains("cache_dir") && !j.at("cache_dir").is_null())
        c.cache_dir = j.at("cache_dir").get<std::string>();

    if (j.contains("generation")) {
        const auto& g = j.at("generation");
        check_keys(g, "generation", {"k", "n_path", "n_path_min", "n_path_max", "p_readme", "model_id",
                                     "max_attempts"});
        read(g, "k", c.build.generation.k, "generation");
        read(g, "n_path", c.build.generation.n_path, "generation");
        read(g, "model_id", c.build.generation.model_id, "generation");
        read(g, "max_attempts", c.build.generation.max_attempts, "generation");
        read(g, "n_path_min", c.build.n_path_min, "generation");
        read(g, "n_path_max", c.build.n_path_max, "generation");
        read(g, "p_readme", c.build.p_readme, "generation");
    }
    if (j.contains("materializer")) {
        const auto& m = j.at("materializer");
        check_keys(m, "materializer", {"mu_rows", "sigma_rows", "sigma_noise"});
        read(m, "mu_rows", c.build.materializer.mu_rows, "materializer");
        read(m, "sigma_rows", c.build.materializer.sigma_rows, "materializer");
        read(m, "sigma_noise", c.build.materializer.sigma_noise, "materializer");
    }
    if (j.contains("path_sampler")) {
        const auto& p = j.at("path_sampler");
        check_keys(p, "path_sampler", {"alpha", "beta", "low", "high"});
        read(p, "alpha", c.build.path_sampler.alpha, "path_sampler");
        read(p, "beta", c.build.path_sampler.beta, "path_sampler");
        read(p, "low", c.build.path_sampler.low, "path_sampler");
        read(p, "high", c.build.path_sampler.high, "path_sampler");
    }
    if (j.contains("backend")) {
        const auto& b = j.at("backend");
        check_keys(b, "backend", {"kind", "http", "paraphrase_endpoints"});
        read(b, "kind", c.backend.kind, "backend");
        if (b.contains("http")) c.backend.http = http_backend_from(b.at("http"), "backend.http");
        if (b.contains("paraphrase_endpoints") && !b.at("paraphrase_endpoints").is_object())
            throw ConfigError("config: backend.paraphrase_endpoints must be an object");
    }
    if (j.contains("serve")) {
        const auto& s = j.at("serve");
        check_keys(s, "serve", {"host", "port", "python_url", "python_timeout_seconds", "python_memory_mb"});
        read(s, "host", c.serve.host, "serve");
        read(s, "port", c.serve.port, "serve");
        read(s, "python_url", c.serve.python_url, "serve");
        read(s, "python_timeout_seconds", c.serve.python_limits.timeout_seconds, "serve");
        read(s, "python_memory_mb", c.serve.python_limits.memory_mb, "serve");
    }
    if (j.contains("questions")) {
        const auto& q = j.at("questions");
        check_keys(q, "questions", {"seed_first", "seed_last", "per_repo", "type_counts", "target_answerable",
                                    "batch_seed", "paraphrase_models"});
        try {
            json merged = c.questions;
            merged.update(q);
            c.questions = merged.get<BatchConfig>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config: questions: ") + e.what());
        } catch (const SchemaError& e) {
            throw ConfigError(std::string("config: questions: ") + e.what());
        }
    }
    if (j.contains("eval")) {
        const auto& e = j.at("eval");
        check_keys(e, "eval", {"agent", "http", "random_seed", "tools_url", "max_steps", "max_tool_calls",
                               "timeout_seconds", "parallelism", "paraphrased_variants"});
        read(e, "agent", c.eval.agent, "eval");
        read(e, "random_seed", c.eval.random_seed, "eval");
        read(e, "tools_url", c.eval.tools_url, "eval");
        read(e, "max_steps", c.eval.limits.max_steps, "eval");
        read(e, "max_tool_calls", c.eval.limits.max_tool_calls, "eval");
        read(e, "timeout_seconds", c.eval.limits.timeout_seconds, "eval");
        read(e, "parallelism", c.eval.parallelism, "eval");
        read(e, "paraphrased_variants", c.eval.paraphrased_variants, "eval");
        if (e.contains("http")) {
            const auto& h = e.at("http");
            check_keys(h, "eval.http",
                       {"base_url", "endpoint", "model", "api_key_env", "timeout_seconds", "temperature"});
            read(h, "base_url", c.eval.http.base_url, "eval.http");
            read(h, "endpoint", c.eval.http.endpoint, "eval.http");
            read(h, "model", c.eval.http.model, "eval.http");
            read(h, "api_key_env", c.eval.http.api_key_env, "eval.http");
            read(h, "timeout_seconds", c.eval.http.timeout_seconds, "eval.http");
            read(h, "temperature", c.eval.http.temperature, "eval.http");
        }
    }
    // paraphrase endpoints are free-form keys, read after the key check above
    if (j.contains("backend") && j.at("backend").contains("paraphrase_endpoints"))
        for (const auto& [model, cfg] : j.at("backend").at("paraphrase_endpoints").items())
            c.backend.paraphrase_endpoints[model] =
                http_backend_from(cfg, "backend.paraphrase_endpoints." + model);
    return c;
}

json run_config_to_json(const RunConfig& c) {
    json endpoints = json::object();
    for (const auto& [m, cfg] : c.backend.paraphrase_endpoints) endpoints[m] = http_backend_json(cfg);
    return {
        {"taxonomy", c.taxonomy ? json(c.taxonomy->string()) : json(nullptr)},
        {"generation",
         {{"k", c.build.generation.k},
          {"n_path", c.build.generation.n_path},
          {"n_path_min", c.build.n_path_min},
          {"n_path_max", c.build.n_path_max},
          {"p_readme", c.build.p_readme},
          {"model_id", c.build.generation.model_id},
          {"max_attempts", c.build.generation.max_attempts}}},
        {"materializer", c.build.materializer},
        {"path_sampler",
         {{"alpha", c.build.path_sampler.alpha},
          {"beta", c.build.path_sampler.beta},
          {"low", c.build.path_sampler.low},
          {"high", c.build.path_sampler.high}}},
        {"backend", {{"kind", c.backend.kind}, {"http", http_backend_json(c.backend.http)},
                     {"paraphrase_endpoints", endpoints}}},
        {"cache_dir", c.cache_dir ? json(c.cache_dir->string()) : json(nullptr)},
        {"serve",
         {{"host", c.serve.host},
          {"port", c.serve.port},
          {"python_url", c.serve.python_url},
          {"python_timeout_seconds", c.serve.python_limits.timeout_seconds},
          {"python_memory_mb", c.serve.python_limits.memory_mb}}},
        {"questions", c.questions},
        {"eval",
         {{"agent", c.eval.agent},
          {"http",
           {{"base_url", c.eval.http.base_url},
            {"endpoint", c.eval.http.endpoint},
            {"model", c.eval.http.model},
            {"api_key_env", c.eval.http.api_key_env},
            {"timeout_seconds", c.eval.http.timeout_seconds},
            {"temperature", c.eval.http.temperature}}},
          {"random_seed", c.eval.random_seed},
          {"tools_url", c.eval.tools_url},
          {"max_steps", c.eval.limits.max_steps},
          {"max_tool_calls", c.eval.limits.max_tool_calls},
          {"timeout_seconds", c.eval.limits.timeout_seconds},
          {"parallelism", c.eval.parallelism},
          {"paraphrased_variants", c.eval.paraphrased_variants}}}};
}

RunConfig load_run_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file: " + path.string());
    const auto j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw ConfigError("config file is not valid JSON: " + path.string());
    auto c = run_config_from_json(j);
    // relative paths inside the file resolve against its directory
    const auto base = path.parent_path();
    if (c.taxonomy && c.taxonomy->is_relative()) c.taxonomy = base / *c.taxonomy;
    if (c.cache_dir && c.cache_dir->is_relative()) c.cache_dir = base / *c.cache_dir;
    return c;
}

void validate_run_config(const RunConfig& c) {
    if (c.taxonomy && !std::filesystem::is_regular_file(*c.taxonomy))
        throw ConfigError("taxonomy file not found: " + c.taxonomy->string());
    if (c.cache_dir && std::filesystem::exists(*c.cache_dir) && !std::filesystem::is_directory(*c.cache_dir))
        throw ConfigError("cache_dir is not a directory: " + c.cache_dir->string());
    validate_build_params(c.build);
    if (c.backend.kind != "stub" && c.backend.kind != "http")
        throw ConfigError("backend.kind must be \"stub\" or \"http\", got \"" + c.backend.kind + "\"");
    if (c.serve.port < 0 || c.serve.port > 65535) throw ConfigError("serve.port out of range");
    const auto& q = c.questions;
    if (q.seed_last < q.seed_first) throw ConfigError("questions: seed range is empty");
    if (q.per_repo < 1) throw ConfigError("questions.per_repo must be >= 1");
    if (!(q.target_answerable >= 0.0 && q.target_answerable <= 1.0))
        throw ConfigError("questions.target_answerable must lie in [0, 1]");
    for (const auto& [t, n] : q.type_counts)
        if (n < 0) throw ConfigError("questions.type_counts entries must be >= 0");
    static const std::set<std::string> agents = {"http", "abstain", "oracle", "random", "reference"};
    if (!agents.count(c.eval.agent)) throw ConfigError("eval.agent is not a known agent: " + c.eval.agent);
    if (c.eval.limits.max_steps < 1 || c.eval.limits.max_tool_calls < 0 || !(c.eval.limits.timeout_seconds > 0))
        throw ConfigError("eval limits must be positive");
    if (c.eval.parallelism < 1) throw ConfigError("eval.parallelism must be >= 1");
}

std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text) {
    auto number = [&](const std::string& s) {
        if (s.empty() || s.find_first_not_of("0123456789") != std::string::npos)
            throw ConfigError("bad seed range: " + text);
        try {
            return static_cast<std::uint64_t>(std::stoull(s));
        } catch (const std::exception&) {
            throw ConfigError("bad seed range: " + text);
        }
    };
    const auto dots = text.find("..");
    if (dots == std::string::npos) {
        const auto s = number(text);
        return {s, s};
    }
    const auto a = number(text.substr(0, dots));
    const auto b = number(text.substr(dots + 2));
    if (b < a) throw ConfigError("bad seed range: " + text + " (end before start)");
    return {a, b};
}

// ---------------------------------------------------------------------------
// Workspace

Workspace::Workspace(RunConfig c) : config(std::move(c)) {
    validate_run_config(config);
    taxonomy = config.taxonomy
                   ? std::make_shared<const Taxonomy>(load_taxonomy_file(config.taxonomy->string()))
                   : std::make_shared<const Taxonomy>(default_taxonomy());
    std::shared_ptr<Backend> backend;
    if (config.backend.kind == "http")
        backend = std::make_shared<HttpBackend>(config.backend.http);
    else
        backend = std::make_shared<StubBackend>();
    auto cache = std::make_shared<ResponseCache>(config.cache_dir);
    generator = std::make_shared<Generator>(backend, cache);
    tools = std::make_shared<ToolService>(taxonomy, config.build, generator);
    if (!config.serve.python_url.empty())
        tools->register_tool(
            "run_python_code",
            {{"type", "object"},
             {"properties", {{"code", {{"type", "string"}, {"description", "Python source to run"}}}}},
             {"required", {"code"}}},
            "Runs Python code in a sandbox and returns stdout and stderr.",
            python_passthrough(config.serve.python_url, "/run", config.serve.python_limits));
}

ParaphraseProvider Workspace::paraphraser() {
    auto cache = std::make_shared<ResponseCache>(config.cache_dir);
    std::map<std::string, std::shared_ptr<Generator>> per_model;
    for (const auto& [model, endpoint] : config.backend.paraphrase_endpoints)
        per_model[model] = std::make_shared<Generator>(std::make_shared<HttpBackend>(endpoint), cache);
    auto gen = generator;
    auto params = config.build.generation;
    return [gen, params, per_model](const QAItem& item, const RepositorySpec& spec, const std::string& model,
                                    int variant) {
        auto p = params;
        p.model_id = model;
        auto it = per_model.find(model);
        return paraphrase_item(item, spec, it == per_model.end() ? *gen : *it->second, p, variant);
    };
}

std::string batch_counts_table(const QuestionBatch& batch) {
    std::map<std::pair<std::string, std::string>, std::pair<std::size_t, std::size_t>> rows;
    std::size_t answerable = 0;
    for (const auto& it : batch.items) {
        auto& r = rows[{std::string(question_category(it.type)), std::string(question_type_id(it.type))}];
        ++r.first;
        if (it.ground_truth.possible) {
            ++r.second;
            ++answerable;
        }
    }
    std::ostringstream out;
    out << std::left << std::setw(24) << "Category" << std::setw(18) << "Type" << std::right << std::setw(7)
        << "Count" << std::setw(12) << "Answerable" << "\n";
    for (const auto& [k, v] : rows)
        out << std::left << std::setw(24) << k.first << std::setw(18) << k.second << std::right << std::setw(7)
            << v.first << std::setw(12) << v.second << "\n";
    const double frac = batch.items.empty() ? 0.0
                                            : static_cast<double>(answerable) / static_cast<double>(batch.items.size());
    out << std::left << std::setw(42) << "Total" << std::right << std::setw(7) << batch.items.size()
        << std::setw(12) << answerable << "\n";
    out << "answerable fraction " << std::fixed << std::setprecision(3) << frac << "\n";
    return out.str();
}

// ---------------------------------------------------------------------------
// Commands

namespace {

QuestionBatch load_batch(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open batch file: " + path);
    return read_batch(in);
}

void save_batch(const QuestionBatch& batch, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write batch file: " + path);
    write_batch(batch, out);
    if (!out) throw Error("write failed: " + path);
}

void save_ledger(const std::vector<EpisodeRecord>& records, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write ledger: " + path);
    write_ledger(records, out);
    if (!out) throw Error("write failed: " + path);
}

void save_report(const MetricsReport& report, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw ConfigError("cannot write report: " + path);
    out << report_json(report).dump(2) << "\n";
}

json spec_summary(const RepositorySpec& spec) {
    json vars = json::array();
    for (const auto* v : spec.column_order())
        vars.push_back({{"name", v->name}, {"role", role_name(v->role)}, {"kind", kind_name(v->kind)}});
    return {{"seed", spec.master_seed},
            {"model_id", spec.model_id},
            {"field", spec.context.field},
            {"domain", spec.context.domain},
            {"subdomain", spec.context.subdomain},
            {"title", spec.project.title},
            {"path_template", spec.path_template.pattern()},
            {"cross_product_size", spec.cross_product_size},
            {"files", spec.paths.size()},
            {"readme", spec.readme_present},
            {"variables", vars}};
}

struct Options {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::string seeds;
    std::string out;
    std::optional<int> port;
    std::string agent_url;
    std::string agent;
    std::string batch;
    std::string ledger;
    std::string report;
    std::string tools_url;
    std::optional<int> per_repo;
    std::optional<int> parallelism;
    std::vector<std::string> models;
    bool stdio = false;
    bool no_paraphrase = false;
    bool templated_only = false;
    bool print_config = false;
};

RunConfig resolve_config(const Options& o) {
    RunConfig c = o.config_path.empty() ? RunConfig{} : load_run_config(o.config_path);
    if (o.port) c.serve.port = *o.port;
    if (!o.agent_url.empty()) {
        c.eval.agent = "http";
        c.eval.http.base_url = o.agent_url;
    }
    if (!o.agent.empty()) c.eval.agent = o.agent;
    if (!o.tools_url.empty()) c.eval.tools_url = o.tools_url;
    if (!o.seeds.empty()) std::tie(c.questions.seed_first, c.questions.seed_last) = parse_seed_range(o.seeds);
    if (o.per_repo) c.questions.per_repo = *o.per_repo;
    if (o.parallelism) c.eval.parallelism = *o.parallelism;
    if (!o.models.empty()) c.questions.paraphrase_models = o.models;
    if (o.no_paraphrase) c.questions.paraphrase_models.clear();
    if (o.templated_only) c.eval.paraphrased_variants = false;
    validate_run_config(c);
    return c;
}

int cmd_gen_repo(const Options& o, std::ostream& out) {
    if (!o.seed) throw ConfigError("gen-repo needs --seed");
    Workspace ws(resolve_config(o));
    const auto spec = ws.tools->spec(*o.seed);
    if (o.out.empty()) {
        out << spec_summary(*spec).dump(2) << "\n";
        return 0;
    }
    export_repository(*spec, o.out);
    out << "exported repository " << *o.seed << " (" << spec->paths.size() << " files"
        << (spec->readme_present ? " + README.md" : "") << ") to " << o.out << "\n";
    return 0;
}

int cmd_gen_questions(const Options& o, std::ostream& out) {
    if (o.out.empty()) throw ConfigError("gen-questions needs --out");
    Workspace ws(resolve_config(o));
    auto tools = ws.tools;
    const auto batch =
        generate_batch(ws.config.questions, [tools](std::uint64_t s) { return tools->spec(s); },
                       ws.config.questions.paraphrase_models.empty() ? ParaphraseProvider{} : ws.paraphraser());
    save_batch(batch, o.out);
    out << batch_counts_table(batch);
    out << "wrote " << batch.items.size() << " questions to " << o.out << "\n";
    return 0;
}

int cmd_paraphrase(const Options& o, std::ostream& out) {
    if (o.batch.empty() || o.out.empty()) throw ConfigError("paraphrase needs --batch and --out");
    Workspace ws(resolve_config(o));
    auto batch = load_batch(o.batch);
    auto para = ws.paraphraser();
    const auto& models = ws.config.questions.paraphrase_models;
    for (auto& item : batch.items) {
        const auto spec = ws.tools->spec(item.repo_seed);
        item.paraphrases.clear();
        for (std::size_t m = 0; m < models.size(); ++m)
            item.paraphrases.push_back({models[m], para(item, *spec, models[m], static_cast<int>(m) + 1)});
    }
    batch.config.paraphrase_models = models;
    save_batch(batch, o.out);
    out << "paraphrased " << batch.items.size() << " questions with " << models.size() << " model(s) into "
        << o.out << "\n";
    return 0;
}

int cmd_serve(const Options& o, std::ostream& out) {
    Workspace ws(resolve_config(o));
    if (o.stdio) {
        serve_stdio(*ws.tools, std::cin, std::cout);
        return 0;
    }
    ToolHttpServer server(*ws.tools);
    const int port = server.bind(ws.config.serve.host, ws.config.serve.port);
    out << "tool server listening on http://" << ws.config.serve.host << ":" << port << std::endl;
    server.run();
    return 0;
}

AgentFactory agent_factory(const RunConfig& c, const std::vector<QAItem>& items) {
    const auto& e = c.eval;
    if (e.agent == "abstain") return [] { return make_abstain_agent(); };
    if (e.agent == "oracle") return [&items] { return make_oracle_agent(items); };
    if (e.agent == "random") return [&items, seed = e.random_seed] { return make_random_agent(seed, items); };
    if (e.agent == "reference") return [] { return make_reference_agent(); };
    return [http = e.http] { return make_http_agent(http); };
}

int cmd_eval(const Options& o, std::ostream& out) {
    if (o.batch.empty() || o.ledger.empty()) throw ConfigError("eval needs --batch and --ledger");
    Workspace ws(resolve_config(o));
    auto batch = load_batch(o.batch);
    if (!ws.config.eval.paraphrased_variants)
        for (auto& item : batch.items) item.paraphrases.clear();

    const bool local = ws.config.eval.tools_url.empty();
    auto service = ws.tools;
    ToolExecutor tools = local ? ToolExecutor([service](const std::string& t, const json& a) {
                                     return service->call(t, a);
                                 })
                               : remote_tool_executor(ws.config.eval.tools_url);
    const auto before = service->tool_calls();
    auto records = run_evaluation(batch.items, agent_factory(ws.config, batch.items), tools,
                                  service->tool_descriptors(), ws.config.eval.limits, ws.config.eval.parallelism);
    if (local) {
        std::uint64_t counted = 0;
        for (const auto& r : records) counted += static_cast<std::uint64_t>(r.tool_call_count);
        if (counted != service->tool_calls() - before)
            throw InternalInconsistency("tool-call accounting mismatch between harness and tool server");
    }
    save_ledger(records, o.ledger);
    const auto report = compute_metrics(records);
    if (!o.report.empty()) save_report(report, o.report);
    out << report_table(report);
    out << "wrote " << records.size() << " episodes to " << o.ledger << "\n";
    return 0;
}

int cmd_grade(const Options& o, std::ostream& out) {
    if (o.batch.empty() || o.ledger.empty()) throw ConfigError("grade needs --batch and --ledger");
    const auto batch = load_batch(o.batch);
    std::ifstream in(o.ledger);
    if (!in) throw ConfigError("cannot open ledger: " + o.ledger);
    auto records = read_ledger(in);
    regrade(records, batch.items);
    if (!o.out.empty()) save_ledger(records, o.out);
    const auto report = compute_metrics(records);
    if (!o.report.empty()) save_report(report, o.report);
    out << report_table(report);
    return 0;
}

int cmd_certify(const Options& o, std::ostream& out, std::ostream& err) {
    if (o.batch.empty()) throw ConfigError("certify needs --batch");
    Workspace ws(resolve_config(o));
    const auto batch = load_batch(o.batch);
    std::size_t certified = 0, answerable = 0, failures = 0;
    for (const auto& item : batch.items) {
        const auto spec = ws.tools->spec(item.repo_seed);
        try {
            const auto truth = compute_ground_truth(*spec, item);
            if (!(truth == item.ground_truth)) throw CertificationFailure(item.id + ": stored answer is stale");
            if (item.ground_truth.possible) {
                ++answerable;
                continue;
            }
            const auto cert = certify_unanswerable(*spec, item);
            if (item.certificate != cert)
                throw CertificationFailure(item.id + ": stored certificate does not match");
            ++certified;
        } catch (const Error& e) {
            ++failures;
            err << "FAIL " << e.what() << "\n";
        }
    }
    out << "checked " << batch.items.size() << " items: " << answerable << " answerable, " << certified
        << " certified unanswerable, " << failures << " failures\n";
    return failures ? 1 : 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"reposim: seed-indexed synthetic scientific data repositories, questions and evaluation"};
    app.require_subcommand(0, 1);
    Options o;
    app.add_option("--config", o.config_path, "JSON run configuration (see configs/default.json)");
    app.add_flag("--print-config", o.print_config, "print the resolved configuration and exit");

    auto* gen_repo = app.add_subcommand("gen-repo", "build one repository; summary or full export");
    gen_repo->add_option("--seed", o.seed, "repository seed")->required();
    gen_repo->add_option("--out", o.out, "export directory");

    auto* gen_q = app.add_subcommand("gen-questions", "sample a question batch over a seed range");
    gen_q->add_option("--seeds", o.seeds, "seed range A..B");
    gen_q->add_option("--per-repo", o.per_repo, "questions per repository and stochastic type");
    gen_q->add_option("--out", o.out, "batch file (JSON lines)")->required();
    gen_q->add_flag("--no-paraphrase", o.no_paraphrase, "templated questions only");

    auto* para = app.add_subcommand("paraphrase", "re-paraphrase a batch");
    para->add_option("--batch", o.batch, "input batch")->required();
    para->add_option("--out", o.out, "output batch")->required();
    para->add_option("--models", o.models, "paraphrase model ids")->delimiter(',');

    auto* serve = app.add_subcommand("serve", "run the tool server");
    serve->add_option("--port", o.port, "HTTP port (0 picks a free one)");
    serve->add_flag("--stdio", o.stdio, "JSON-RPC over stdin/stdout instead of HTTP");

    auto* eval = app.add_subcommand("eval", "run an agent over a batch and write the episode ledger");
    eval->add_option("--batch", o.batch, "question batch")->required();
    eval->add_option("--ledger", o.ledger, "episode ledger to write")->required();
    eval->add_option("--agent-url", o.agent_url, "chat-completions base URL of the agent");
    eval->add_option("--agent", o.agent, "http, abstain, oracle, random or reference");
    eval->add_option("--tools-url", o.tools_url, "use a running tool server instead of in-process tools");
    eval->add_option("--parallelism", o.parallelism, "concurrent episodes");
    eval->add_option("--report", o.report, "also write the metrics report as JSON");
    eval->add_flag("--templated-only", o.templated_only, "skip paraphrased variants");

    auto* grade_cmd = app.add_subcommand("grade", "re-grade a ledger and print metrics");
    grade_cmd->add_option("--batch", o.batch, "question batch")->required();
    grade_cmd->add_option("--ledger", o.ledger, "episode ledger")->required();
    grade_cmd->add_option("--out", o.out, "write the re-graded ledger here");
    grade_cmd->add_option("--report", o.report, "write the metrics report as JSON");

    auto* certify = app.add_subcommand("certify", "re-check answers and unanswerability certificates");
    certify->add_option("--batch", o.batch, "question batch")->required();

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e, out, err);
    } catch (const CLI::ParseError& e) {
        app.exit(e, out, err);
        return 2;
    }

    try {
        if (o.print_config) {
            out << run_config_to_json(resolve_config(o)).dump(2) << "\n";
            return 0;
        }
        if (app.got_subcommand(gen_repo)) return cmd_gen_repo(o, out);
        if (app.got_subcommand(gen_q)) return cmd_gen_questions(o, out);
        if (app.got_subcommand(para)) return cmd_paraphrase(o, out);
        if (app.got_subcommand(serve)) return cmd_serve(o, out);
        if (app.got_subcommand(eval)) return cmd_eval(o, out);
        if (app.got_subcommand(grade_cmd)) return cmd_grade(o, out);
        if (app.got_subcommand(certify)) return cmd_certify(o, out, err);
        err << app.help();
        return 2;
    } catch (const ConfigError& e) {
        err << "reposim: configuration error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        err << "reposim: " << e.what() << "\n";
        return 1;
    }
    return 1;
}

}  // namespace reposim
