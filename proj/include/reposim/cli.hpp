#pragma once

// Operator surface: run configuration and the reposim subcommands. The
// commands live in the library so tests can drive them in-process.

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"
#include "reposim/backends.hpp"
#include "reposim/evalharness.hpp"
#include "reposim/qaengine.hpp"
#include "reposim/repospec.hpp"
#include "reposim/toolserver.hpp"

namespace reposim {

struct BackendConfig {
    std::string kind = "stub";  // stub | http
    HttpBackendConfig http;
    /// Paraphrase model id -> endpoint; models not listed go through the main backend.
    std::map<std::string, HttpBackendConfig> paraphrase_endpoints;
};

struct ServeConfig {
    std::string host = "127.0.0.1";
    int port = 8765;
    std::string python_url;  // empty: run_python_code is not mounted
    ExternalToolLimits python_limits;
};

struct EvalConfig {
    std::string agent = "http";  // http | abstain | oracle | random | reference
    HttpAgentConfig http;
    std::uint64_t random_seed = 0;
    std::string tools_url;  // empty: tools are served in-process
    EpisodeLimits limits;
    int parallelism = 1;
    bool paraphrased_variants = true;
};

struct RunConfig {
    std::optional<std::filesystem::path> taxonomy;  // unset: the bundled taxonomy
    BuildParams build;
    BackendConfig backend;
    std::optional<std::filesystem::path> cache_dir;
    ServeConfig serve;
    BatchConfig questions = default_batch_config();
    EvalConfig eval;

    static BatchConfig default_batch_config();
};

/// Missing keys keep their defaults; unknown keys are rejected. Throws ConfigError.
RunConfig run_config_from_json(const nlohmann::json& j);
nlohmann::json run_config_to_json(const RunConfig& c);
RunConfig load_run_config(const std::filesystem::path& path);
/// Throws ConfigError naming the offending field or path.
void validate_run_config(const RunConfig& c);

/// "A..B" or a single "A". Throws ConfigError.
std::pair<std::uint64_t, std::uint64_t> parse_seed_range(const std::string& text);

/// Taxonomy, backend, cache and tool service assembled from a config.
struct Workspace {
    std::shared_ptr<const Taxonomy> taxonomy;
    std::shared_ptr<Generator> generator;
    std::shared_ptr<ToolService> tools;
    RunConfig config;

    explicit Workspace(RunConfig config);
    ParaphraseProvider paraphraser();
};

/// Table of per-category/type totals and answerable counts for a batch.
std::string batch_counts_table(const QuestionBatch& batch);

/// Entry point behind the reposim binary. Exit codes: 0 success, 1 runtime
/// failure, 2 configuration error.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace reposim
