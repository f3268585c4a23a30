#pragma once

// Concrete generation backends: the deterministic stub used by tests and the
// default pipeline, and an HTTP chat-completion client for live models.

#include <string>

#include "reposim/genmodel.hpp"

namespace reposim {

/// Answers every stage from the request's seed tag alone, via pattern banks.
class StubBackend : public Backend {
public:
    nlohmann::json complete(const GenerationRequest& request, const GenerationParams& params,
                            const std::string& feedback) override;
    std::uint64_t calls() const { return calls_.load(); }

private:
    std::atomic<std::uint64_t> calls_{0};
};

struct HttpBackendConfig {
    std::string base_url = "http://127.0.0.1:8000";  // scheme://host[:port]
    std::string endpoint = "/v1/chat/completions";
    std::string model = "local-model";
    std::string api_key_env = "REPOSIM_API_KEY";
    int timeout_seconds = 120;
};

/// OpenAI-style chat completions with temperature 0 and a JSON-only reply.
class HttpBackend : public Backend {
public:
    explicit HttpBackend(HttpBackendConfig config);
    nlohmann::json complete(const GenerationRequest& request, const GenerationParams& params,
                            const std::string& feedback) override;

    /// The system and user messages sent for a request (exposed for docs and tests).
    static std::string system_prompt(Stage stage);
    static std::string user_prompt(const GenerationRequest& request, const GenerationParams& params,
                                   const std::string& feedback);

private:
    HttpBackendConfig config_;
};

}  // namespace reposim
