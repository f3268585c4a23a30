#pragma once

// The agent-facing tool service: list_directory, read_text_file and
// read_binary_file over lazily built repositories, plus the HTTP and
// MCP-style transports.

#include <atomic>
#include <functional>
#include <iosfwd>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <unordered_map>

#include "json.hpp"
#include "reposim/genmodel.hpp"
#include "reposim/repospec.hpp"
#include "reposim/taxonomy.hpp"

namespace reposim {

using Envelope = nlohmann::ordered_json;

/// Envelope text: ", " and ": " separators and ASCII-only string escapes.
std::string dump_envelope(const Envelope& e);
Envelope error_envelope(const std::string& message);

std::string base64_encode(std::string_view bytes);
/// Throws InvalidArgument on malformed input.
std::string base64_decode(std::string_view text);

/// Decodes UTF-8, substituting U+FFFD for each invalid sequence.
std::string utf8_replace_invalid(std::string_view bytes);

struct ExternalToolLimits {
    int timeout_seconds = 60;
    int memory_mb = 512;
};

class ToolService {
public:
    using ExternalHandler = std::function<Envelope(const nlohmann::json& arguments)>;

    ToolService(std::shared_ptr<const Taxonomy> taxonomy, BuildParams params,
                std::shared_ptr<Generator> generator);

    /// Builds the spec for `id` at most once; later calls share the result
    /// (or the recorded failure). Throws Error on a failed build.
    std::shared_ptr<const RepositorySpec> spec(std::uint64_t id);

    Envelope list_directory(std::uint64_t id, const std::string& prefix, int depth);
    Envelope read_text_file(std::uint64_t id, const std::string& path, std::optional<long long> head,
                            std::optional<long long> tail);
    Envelope read_binary_file(std::uint64_t id, const std::string& path);

    /// Dispatch by tool name with argument checking; never throws.
    Envelope call(const std::string& tool, const nlohmann::json& arguments);

    /// Mounts an extra tool such as a code interpreter.
    void register_tool(const std::string& name, nlohmann::json input_schema, std::string description,
                       ExternalHandler handler);

    /// MCP-style descriptors: name, description, inputSchema.
    nlohmann::json tool_descriptors() const;

    std::uint64_t spec_constructions() const { return spec_constructions_.load(); }
    std::uint64_t tool_calls() const { return tool_calls_.load(); }

private:
    struct Slot {
        std::once_flag once;
        std::shared_ptr<const RepositorySpec> spec;
        std::string error;
    };
    struct External {
        nlohmann::json schema;
        std::string description;
        ExternalHandler handler;
    };

    std::shared_ptr<const Taxonomy> taxonomy_;
    BuildParams params_;
    std::shared_ptr<Generator> generator_;
    std::mutex slots_mutex_;
    std::unordered_map<std::uint64_t, std::shared_ptr<Slot>> slots_;
    mutable std::mutex external_mutex_;
    std::map<std::string, External> external_;
    std::atomic<std::uint64_t> spec_constructions_{0};
    std::atomic<std::uint64_t> tool_calls_{0};
};

/// Forwards run_python_code calls to an external interpreter service.
ToolService::ExternalHandler python_passthrough(const std::string& base_url, const std::string& endpoint,
                                                ExternalToolLimits limits);

/// One JSON-RPC 2.0 message (initialize, tools/list, tools/call, ping).
/// Returns null for notifications.
nlohmann::json handle_mcp_message(ToolService& service, const nlohmann::json& message);

/// Newline-delimited JSON-RPC over streams until EOF.
void serve_stdio(ToolService& service, std::istream& in, std::ostream& out);

/// HTTP transport: POST /call {"tool","arguments"}, POST /mcp, GET /tools, GET /health.
class ToolHttpServer {
public:
    explicit ToolHttpServer(ToolService& service);
    ~ToolHttpServer();
    /// Returns the bound port (port 0 picks a free one). Throws ConfigError.
    int bind(const std::string& host, int port);
    /// Blocking.
    void run();
    /// Runs on a background thread and waits until requests are accepted.
    void start();
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace reposim
