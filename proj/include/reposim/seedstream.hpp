#pragma once

// Portable randomness: every stochastic choice in a repository flows through
// the splitmix64 stream defined here, so a seed reproduces identical bytes on
// every platform.

#include <array>
#include <cstdint>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace reposim {

using Digest = std::array<std::uint8_t, 32>;

Digest sha256(std::string_view bytes);
std::string to_hex(const Digest& digest);

/// First eight digest bytes read as a big-endian integer.
std::uint64_t digest_prefix_u64(const Digest& digest);

/// Seed for one generation stage: SHA-256(label || 0x00 || decimal(master)).
std::uint64_t derive_stage_seed(std::uint64_t master_seed, std::string_view stage_label);

/// Seed for one file, hashed from its repository-relative path.
std::uint64_t path_seed(std::string_view path);

class RandomStream {
public:
    explicit RandomStream(std::uint64_t state) : state_(state) {}

    static RandomStream for_stage(std::uint64_t master_seed, std::string_view stage_label) {
        return RandomStream(derive_stage_seed(master_seed, stage_label));
    }

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ull);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
        return z ^ (z >> 31);
    }

    /// Uniform double in [0, 1) from the top 53 bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform index in [0, n); n must be positive.
    std::size_t index(std::size_t n);

    std::uint64_t state() const { return state_; }

private:
    std::uint64_t state_;
};

struct Categorical {
    std::vector<std::string> values;
    std::vector<double> probs;
    bool operator==(const Categorical&) const = default;
};
struct Bernoulli {
    double p;
    bool operator==(const Bernoulli&) const = default;
};
struct Binomial {
    std::int64_t n;
    double p;
    bool operator==(const Binomial&) const = default;
};
struct Geometric {
    double p;
    bool operator==(const Geometric&) const = default;
};
struct NegativeBinomial {
    std::int64_t r;
    double p;
    bool operator==(const NegativeBinomial&) const = default;
};
struct Poisson {
    double lambda;
    bool operator==(const Poisson&) const = default;
};
struct Beta {
    double alpha;
    double beta;
    bool operator==(const Beta&) const = default;
};
struct Exponential {
    double lambda;
    bool operator==(const Exponential&) const = default;
};
struct Normal {
    double mu;
    double sigma;
    bool operator==(const Normal&) const = default;
};
struct Uniform {
    double a;
    double b;
    bool operator==(const Uniform&) const = default;
};

using DistributionSpec = std::variant<Categorical, Bernoulli, Binomial, Geometric, NegativeBinomial,
                                      Poisson, Beta, Exponential, Normal, Uniform>;

using SampleValue = std::variant<std::string, std::int64_t, double>;

/// Throws MalformedDistribution naming the violated invariant.
void validate_distribution(const DistributionSpec& dist);

std::string distribution_name(const DistributionSpec& dist);
bool is_discrete_integer(const DistributionSpec& dist);
bool is_continuous(const DistributionSpec& dist);

SampleValue sample(const DistributionSpec& dist, RandomStream& stream);

// The pinned per-draw primitives, exposed so the samplers can be checked
// against hand-picked uniforms.
double uniform_at(double a, double b, double u);
double exponential_at(double lambda, double u);
std::int64_t geometric_at(double p, double u);
std::size_t categorical_at(const std::vector<double>& probs, double u);

double sample_normal(RandomStream& stream, double mu, double sigma);
double sample_gamma(RandomStream& stream, double shape);
double sample_beta(RandomStream& stream, double alpha, double beta);
std::int64_t sample_poisson(RandomStream& stream, double lambda);

struct PathSamplerParams {
    double alpha = 1.05;
    double beta = 25.0;
    std::int64_t low = 15;
    std::int64_t high = 10000;
};

std::int64_t sample_path_count(std::int64_t h_max, const PathSamplerParams& params,
                               RandomStream& stream);

/// Round to nearest integer, ties to even.
double round_half_even(double x);

void to_json(nlohmann::json& j, const DistributionSpec& dist);
void from_json(const nlohmann::json& j, DistributionSpec& dist);
void to_json(nlohmann::json& j, const PathSamplerParams& p);
void from_json(const nlohmann::json& j, PathSamplerParams& p);

}  // namespace reposim
