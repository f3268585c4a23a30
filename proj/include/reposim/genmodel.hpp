#pragma once

// Typed request/response contracts for every model-backed generation stage,
// the content-addressed response cache, and the retrying generator.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <unordered_map>

#include "json.hpp"

namespace reposim {

enum class Stage {
    Titles,
    Description,
    Abstract,
    PathStep,
    PathValues,
    FileVariables,
    DistParams,
    DependentExpr,
    Paraphrase,
};

std::string_view stage_name(Stage s);
Stage stage_from_name(std::string_view name);

struct SeedTag {
    std::uint64_t master_seed = 0;
    std::string stage_label;
    bool operator==(const SeedTag&) const = default;
};

struct GenerationRequest {
    Stage stage = Stage::Titles;
    nlohmann::json payload = nlohmann::json::object();
    SeedTag seed_tag;

    /// The expected response shape for this stage (a JSON-Schema fragment).
    nlohmann::json schema() const;
    /// Canonical document used for cache keying; keys are sorted.
    nlohmann::json canonical() const;
    bool operator==(const GenerationRequest& o) const {
        return stage == o.stage && payload == o.payload && seed_tag == o.seed_tag;
    }
};

struct GenerationParams {
    int k = 5;
    int n_path = 4;
    std::string model_id = "stub";
    int max_attempts = 3;
};

/// Throws ConfigError when k < 2 or n_path < 1.
void validate_params(const GenerationParams& params);

struct CacheKey {
    std::string model_id;
    Stage stage = Stage::Titles;
    std::string digest;  // hex SHA-256 of the canonical request
    bool operator==(const CacheKey&) const = default;
    std::string str() const;
};

CacheKey cache_key(const GenerationRequest& request, const GenerationParams& params);

/// Stage-specific response validation. Throws SchemaViolation with the first
/// problem found.
void validate_response(const GenerationRequest& request, const GenerationParams& params,
                       const nlohmann::json& response);

class Backend {
public:
    virtual ~Backend() = default;
    /// `feedback` carries the previous attempt's validation error, if any.
    virtual nlohmann::json complete(const GenerationRequest& request,
                                    const GenerationParams& params,
                                    const std::string& feedback) = 0;
};

/// Responses keyed by CacheKey, optionally persisted as one file per key.
/// Concurrent readers are allowed; each key is written atomically.
class ResponseCache {
public:
    explicit ResponseCache(std::optional<std::filesystem::path> directory = std::nullopt);

    std::optional<nlohmann::json> get(const CacheKey& key);
    void put(const CacheKey& key, const GenerationRequest& request, const nlohmann::json& response);

    std::filesystem::path file_for(const CacheKey& key) const;
    const std::optional<std::filesystem::path>& directory() const { return directory_; }

private:
    std::optional<std::filesystem::path> directory_;
    std::shared_mutex mutex_;
    std::unordered_map<std::string, nlohmann::json> memory_;
};

class Generator {
public:
    Generator(std::shared_ptr<Backend> backend, std::shared_ptr<ResponseCache> cache);

    /// Cache hit: returned verbatim. Miss: backend call, validation with up to
    /// params.max_attempts tries, then stored.
    nlohmann::json generate(const GenerationRequest& request, const GenerationParams& params);

    std::uint64_t backend_calls() const { return backend_calls_.load(); }
    std::uint64_t cache_hits() const { return cache_hits_.load(); }
    Backend& backend() { return *backend_; }

private:
    std::shared_ptr<Backend> backend_;
    std::shared_ptr<ResponseCache> cache_;
    std::atomic<std::uint64_t> backend_calls_{0};
    std::atomic<std::uint64_t> cache_hits_{0};
};

// Shared lexical rules used by the stage validators and by repospec.
bool is_identifier(std::string_view s);
bool is_path_safe_value(std::string_view s);
bool is_iso_date(std::string_view s);
bool is_decimal_integer(std::string_view s);

}  // namespace reposim
