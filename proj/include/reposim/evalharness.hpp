#pragma once

// Runs tool-using agents over question batches and scores the results:
// episode loop, reference agents, ledger, metrics and Krippendorff's alpha.

#include <functional>
#include <iosfwd>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "reposim/grader.hpp"
#include "reposim/qaengine.hpp"
#include "reposim/toolserver.hpp"

namespace reposim {

struct ToolCall {
    std::string id;
    std::string name;
    nlohmann::json arguments = nlohmann::json::object();
};

struct TokenUsage {
    long long prompt = 0;
    long long completion = 0;
    long long total = 0;
};

struct TranscriptEntry {
    std::string role;  // user, assistant, tool
    std::string content;
    std::vector<ToolCall> tool_calls;  // assistant turns
    std::string tool_call_id;          // tool observations
};

struct AgentTurn {
    std::string content;
    std::vector<ToolCall> tool_calls;
    TokenUsage usage;
};

class Agent {
public:
    virtual ~Agent() = default;
    virtual std::string name() const = 0;
    /// Next assistant turn. Throws AgentUnavailable when the backend cannot answer.
    virtual AgentTurn step(const std::vector<TranscriptEntry>& transcript,
                           const nlohmann::json& tool_descriptors) = 0;
};

/// Chat completions with function tools over HTTP.
struct HttpAgentConfig {
    std::string base_url = "http://127.0.0.1:8000";
    std::string endpoint = "/v1/chat/completions";
    std::string model = "local-model";
    std::string api_key_env = "REPOSIM_AGENT_KEY";
    int timeout_seconds = 120;
    double temperature = 0.0;
};

std::unique_ptr<Agent> make_http_agent(HttpAgentConfig config);
/// Answers "not possible" to everything.
std::unique_ptr<Agent> make_abstain_agent();
/// Replays the ground truth stored in the batch.
std::unique_ptr<Agent> make_oracle_agent(const std::vector<QAItem>& items);
/// A guess per answer kind, seeded per question.
std::unique_ptr<Agent> make_random_agent(std::uint64_t seed, const std::vector<QAItem>& items);
/// Navigates with the tools like a careful human: lists, peeks at the first 40
/// lines, then fetches the file and computes locally. Handles the README,
/// extension and row-count questions; abstains elsewhere.
std::unique_ptr<Agent> make_reference_agent();

struct EpisodeLimits {
    int max_steps = 25;
    int max_tool_calls = 20;
    double timeout_seconds = 300.0;
};

using ToolExecutor = std::function<Envelope(const std::string& tool, const nlohmann::json& arguments)>;

/// Executor that posts to a running tool server's /call route.
ToolExecutor remote_tool_executor(const std::string& base_url, int timeout_seconds = 120);

struct EpisodeRecord {
    std::string question_id;
    std::uint64_t repo_seed = 0;
    std::string category;
    std::string type;
    bool answerable = true;
    int variant = 0;
    std::string variant_label;  // "templated" or "paraphrase:<model>"
    std::string agent;
    std::vector<TranscriptEntry> transcript;
    int tool_call_count = 0;
    TokenUsage tokens;
    ExtractedAnswer extracted;
    GradeResult grade;
    std::string termination;  // answered, step-limit, tool-limit, timeout
    double wall_time_seconds = 0.0;
};

/// The full user message for one variant: tool instructions, repository id,
/// sig-figs preamble, the question and the answer-format contract.
std::string episode_prompt(const QAItem& item, std::size_t variant);

EpisodeRecord run_episode(Agent& agent, const QAItem& item, std::size_t variant,
                          const ToolExecutor& tools, const nlohmann::json& tool_descriptors,
                          const EpisodeLimits& limits);

using AgentFactory = std::function<std::unique_ptr<Agent>()>;

/// Every variant of every item, `parallelism` episodes at a time; records in
/// (item, variant) order.
std::vector<EpisodeRecord> run_evaluation(const std::vector<QAItem>& items, const AgentFactory& agents,
                                          const ToolExecutor& tools, const nlohmann::json& tool_descriptors,
                                          const EpisodeLimits& limits, int parallelism = 1);

/// Recomputes extraction and grades from the final responses; idempotent.
void regrade(std::vector<EpisodeRecord>& records, const std::vector<QAItem>& items);

void to_json(nlohmann::json& j, const EpisodeRecord& r);
void from_json(const nlohmann::json& j, EpisodeRecord& r);
void write_ledger(const std::vector<EpisodeRecord>& records, std::ostream& out);
std::vector<EpisodeRecord> read_ledger(std::istream& in);

struct AgreementResult {
    double alpha = 0.0;
    double observed = 0.0;  // D_o
    double expected = 0.0;  // D_e
    std::size_t n_pairs = 0;
    bool undefined = false;  // D_e = 0
};

/// Nominal alpha for two raters; a pair with a missing side is skipped.
AgreementResult krippendorff_alpha(const std::vector<std::pair<std::optional<int>, std::optional<int>>>& pairs);

struct SliceMetrics {
    std::size_t n = 0;
    std::size_t correct = 0;
    double accuracy = 0.0;
    std::size_t tp = 0, fp = 0, fn = 0;
    std::optional<double> precision;
    std::optional<double> recall;
    double mean_tool_calls = 0.0;
    double mean_tokens = 0.0;
    std::map<std::string, std::pair<std::size_t, std::size_t>> by_category;  // correct, n
    std::map<std::string, std::pair<std::size_t, std::size_t>> by_type;
};

struct MetricsReport {
    std::map<std::string, SliceMetrics> by_variant;  // "all", "templated", "paraphrase:<m>"
    std::map<std::string, AgreementResult> agreement;  // per paraphrase label vs templated
};

MetricsReport compute_metrics(const std::vector<EpisodeRecord>& records);
nlohmann::json report_json(const MetricsReport& report);
std::string report_table(const MetricsReport& report);

}  // namespace reposim
