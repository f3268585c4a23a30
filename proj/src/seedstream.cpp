#include "reposim/seedstream.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <numbers>

#include "reposim/errors.hpp"

namespace reposim {

Digest sha256(std::string_view bytes) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(bytes.data(), bytes.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size()) {
        throw Error("SHA-256 computation failed");
    }
    return out;
}

std::string to_hex(const Digest& digest) {
    static constexpr char kHex[] = "0123456789abcdef";
    std::string s;
    s.reserve(64);
    for (auto b : digest) {
        s.push_back(kHex[b >> 4]);
        s.push_back(kHex[b & 0xf]);
    }
    return s;
}

std::uint64_t digest_prefix_u64(const Digest& digest) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | digest[i];
    return v;
}

std::uint64_t derive_stage_seed(std::uint64_t master_seed, std::string_view stage_label) {
    std::string buf(stage_label);
    buf.push_back('\0');
    buf += std::to_string(master_seed);
    return digest_prefix_u64(sha256(buf));
}

std::uint64_t path_seed(std::string_view path) { return digest_prefix_u64(sha256(path)); }

std::size_t RandomStream::index(std::size_t n) {
    auto i = static_cast<std::size_t>(uniform() * static_cast<double>(n));
    return i < n ? i : n - 1;
}

double round_half_even(double x) { return std::nearbyint(x); }

namespace {

bool is_prob(double p) { return p >= 0.0 && p <= 1.0; }

struct Validator {
    void operator()(const Categorical& d) const {
        if (d.values.empty()) throw MalformedDistribution("categorical: no values");
        if (d.values.size() != d.probs.size())
            throw MalformedDistribution("categorical: values/probs length mismatch");
        double total = 0.0;
        for (double p : d.probs) {
            if (!is_prob(p)) throw MalformedDistribution("categorical: probability outside [0,1]");
            total += p;
        }
        if (std::abs(total - 1.0) > 1e-9)
            throw MalformedDistribution("categorical: probabilities do not sum to 1");
    }
    void operator()(const Bernoulli& d) const {
        if (!is_prob(d.p)) throw MalformedDistribution("bernoulli: p outside [0,1]");
    }
    void operator()(const Binomial& d) const {
        if (d.n < 1) throw MalformedDistribution("binomial: n must be a positive integer");
        if (!is_prob(d.p)) throw MalformedDistribution("binomial: p outside [0,1]");
    }
    void operator()(const Geometric& d) const {
        if (!(d.p > 0.0 && d.p <= 1.0)) throw MalformedDistribution("geometric: p outside (0,1]");
    }
    void operator()(const NegativeBinomial& d) const {
        if (d.r < 1) throw MalformedDistribution("negative_binomial: r must be a positive integer");
        if (!(d.p > 0.0 && d.p <= 1.0))
            throw MalformedDistribution("negative_binomial: p outside (0,1]");
    }
    void operator()(const Poisson& d) const {
        if (!(d.lambda > 0.0) || !std::isfinite(d.lambda))
            throw MalformedDistribution("poisson: lambda must be positive");
    }
    void operator()(const Beta& d) const {
        if (!(d.alpha > 0.0) || !(d.beta > 0.0))
            throw MalformedDistribution("beta: alpha and beta must be positive");
    }
    void operator()(const Exponential& d) const {
        if (!(d.lambda > 0.0)) throw MalformedDistribution("exponential: lambda must be positive");
    }
    void operator()(const Normal& d) const {
        if (!(d.sigma > 0.0) || !std::isfinite(d.mu))
            throw MalformedDistribution("normal: sigma must be positive");
    }
    void operator()(const Uniform& d) const {
        if (!(d.a < d.b) || !std::isfinite(d.a) || !std::isfinite(d.b))
            throw MalformedDistribution("uniform: requires a < b");
    }
};

}  // namespace

void validate_distribution(const DistributionSpec& dist) { std::visit(Validator{}, dist); }

std::string distribution_name(const DistributionSpec& dist) {
    static const char* kNames[] = {"categorical", "bernoulli", "binomial",    "geometric",
                                   "negative_binomial", "poisson", "beta", "exponential",
                                   "normal",      "uniform"};
    return kNames[dist.index()];
}

bool is_discrete_integer(const DistributionSpec& dist) {
    return std::holds_alternative<Bernoulli>(dist) || std::holds_alternative<Binomial>(dist) ||
           std::holds_alternative<Geometric>(dist) ||
           std::holds_alternative<NegativeBinomial>(dist) || std::holds_alternative<Poisson>(dist);
}

bool is_continuous(const DistributionSpec& dist) {
    return std::holds_alternative<Beta>(dist) || std::holds_alternative<Exponential>(dist) ||
           std::holds_alternative<Normal>(dist) || std::holds_alternative<Uniform>(dist);
}

double uniform_at(double a, double b, double u) { return a + u * (b - a); }

double exponential_at(double lambda, double u) { return -std::log(1.0 - u) / lambda; }

std::int64_t geometric_at(double p, double u) {
    if (p >= 1.0) return 0;
    return static_cast<std::int64_t>(std::floor(std::log(1.0 - u) / std::log(1.0 - p)));
}

std::size_t categorical_at(const std::vector<double>& probs, double u) {
    double cumulative = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        cumulative += probs[i];
        if (u < cumulative) return i;
    }
    // Rounding slack in the cumulative sum: fall back to the last category
    // with nonzero mass.
    for (std::size_t i = probs.size(); i-- > 0;)
        if (probs[i] > 0.0) return i;
    return probs.size() - 1;
}

double sample_normal(RandomStream& stream, double mu, double sigma) {
    const double u1 = stream.uniform();
    const double u2 = stream.uniform();
    const double radius = std::sqrt(-2.0 * std::log(1.0 - u1));
    return mu + sigma * radius * std::cos(2.0 * std::numbers::pi * u2);
}

double sample_gamma(RandomStream& stream, double shape) {
    if (shape < 1.0) {
        const double g = sample_gamma(stream, shape + 1.0);
        const double u = stream.uniform();
        return g * std::pow(u, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
        const double x = sample_normal(stream, 0.0, 1.0);
        double v = 1.0 + c * x;
        if (v <= 0.0) continue;
        v = v * v * v;
        const double u = stream.uniform();
        if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
        if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
}

double sample_beta(RandomStream& stream, double alpha, double beta) {
    for (;;) {
        const double x = sample_gamma(stream, alpha);
        const double y = sample_gamma(stream, beta);
        if (x + y > 0.0) return x / (x + y);
    }
}

std::int64_t sample_poisson(RandomStream& stream, double lambda) {
    // Knuth's product method underflows exp(-lambda) past ~700; large rates are
    // split into independent chunks whose counts add.
    constexpr double kChunk = 500.0;
    std::int64_t total = 0;
    while (lambda > 0.0) {
        const double part = std::min(lambda, kChunk);
        lambda -= part;
        const double limit = std::exp(-part);
        std::int64_t k = 0;
        double product = 1.0;
        do {
            ++k;
            product *= stream.uniform();
        } while (product > limit);
        total += k - 1;
    }
    return total;
}

namespace {

struct Sampler {
    RandomStream& stream;

    SampleValue operator()(const Categorical& d) const {
        return d.values[categorical_at(d.probs, stream.uniform())];
    }
    SampleValue operator()(const Bernoulli& d) const {
        return std::int64_t{stream.uniform() < d.p ? 1 : 0};
    }
    SampleValue operator()(const Binomial& d) const {
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < d.n; ++i) k += stream.uniform() < d.p ? 1 : 0;
        return k;
    }
    SampleValue operator()(const Geometric& d) const {
        return geometric_at(d.p, stream.uniform());
    }
    SampleValue operator()(const NegativeBinomial& d) const {
        std::int64_t k = 0;
        for (std::int64_t i = 0; i < d.r; ++i) k += geometric_at(d.p, stream.uniform());
        return k;
    }
    SampleValue operator()(const Poisson& d) const { return sample_poisson(stream, d.lambda); }
    SampleValue operator()(const Beta& d) const { return sample_beta(stream, d.alpha, d.beta); }
    SampleValue operator()(const Exponential& d) const {
        return exponential_at(d.lambda, stream.uniform());
    }
    SampleValue operator()(const Normal& d) const {
        return sample_normal(stream, d.mu, d.sigma);
    }
    SampleValue operator()(const Uniform& d) const {
        return uniform_at(d.a, d.b, stream.uniform());
    }
};

}  // namespace

SampleValue sample(const DistributionSpec& dist, RandomStream& stream) {
    validate_distribution(dist);
    return std::visit(Sampler{stream}, dist);
}

std::int64_t sample_path_count(std::int64_t h_max, const PathSamplerParams& params,
                               RandomStream& stream) {
    if (h_max <= params.low) return h_max;
    const std::int64_t hi = std::min(params.high, h_max);
    const double b = sample_beta(stream, params.alpha, params.beta);
    const double n = round_half_even(static_cast<double>(params.low) +
                                     b * static_cast<double>(hi - params.low));
    return std::clamp(static_cast<std::int64_t>(n), params.low, hi);
}

void to_json(nlohmann::json& j, const DistributionSpec& dist) {
    using nlohmann::json;
    j = std::visit(
        [](const auto& d) -> json {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, Categorical>)
                return {{"values", d.values}, {"probs", d.probs}};
            else if constexpr (std::is_same_v<T, Bernoulli>)
                return {{"p", d.p}};
            else if constexpr (std::is_same_v<T, Binomial>)
                return {{"n", d.n}, {"p", d.p}};
            else if constexpr (std::is_same_v<T, Geometric>)
                return {{"p", d.p}};
            else if constexpr (std::is_same_v<T, NegativeBinomial>)
                return {{"r", d.r}, {"p", d.p}};
            else if constexpr (std::is_same_v<T, Poisson>)
                return {{"lambda", d.lambda}};
            else if constexpr (std::is_same_v<T, Beta>)
                return {{"alpha", d.alpha}, {"beta", d.beta}};
            else if constexpr (std::is_same_v<T, Exponential>)
                return {{"lambda", d.lambda}};
            else if constexpr (std::is_same_v<T, Normal>)
                return {{"mu", d.mu}, {"sigma", d.sigma}};
            else
                return {{"a", d.a}, {"b", d.b}};
        },
        dist);
    j["type"] = distribution_name(dist);
}

void from_json(const nlohmann::json& j, DistributionSpec& dist) {
    if (!j.is_object() || !j.contains("type") || !j["type"].is_string())
        throw MalformedDistribution("distribution: missing \"type\"");
    const auto type = j["type"].get<std::string>();
    auto num = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number())
            throw MalformedDistribution(type + ": missing numeric \"" + key + "\"");
        return j[key].get<double>();
    };
    auto integer = [&](const char* key) {
        if (!j.contains(key) || !j[key].is_number_integer())
            throw MalformedDistribution(type + ": \"" + std::string(key) + "\" must be an integer");
        return j[key].get<std::int64_t>();
    };
    if (type == "categorical") {
        if (!j.contains("values") || !j.contains("probs") || !j["values"].is_array() ||
            !j["probs"].is_array())
            throw MalformedDistribution("categorical: requires values and probs arrays");
        Categorical c;
        for (const auto& v : j["values"]) {
            if (!v.is_string()) throw MalformedDistribution("categorical: values must be strings");
            c.values.push_back(v.get<std::string>());
        }
        for (const auto& p : j["probs"]) {
            if (!p.is_number()) throw MalformedDistribution("categorical: probs must be numbers");
            c.probs.push_back(p.get<double>());
        }
        dist = std::move(c);
    } else if (type == "bernoulli") {
        dist = Bernoulli{num("p")};
    } else if (type == "binomial") {
        dist = Binomial{integer("n"), num("p")};
    } else if (type == "geometric") {
        dist = Geometric{num("p")};
    } else if (type == "negative_binomial") {
        dist = NegativeBinomial{integer("r"), num("p")};
    } else if (type == "poisson") {
        dist = Poisson{num("lambda")};
    } else if (type == "beta") {
        dist = Beta{num("alpha"), num("beta")};
    } else if (type == "exponential") {
        dist = Exponential{num("lambda")};
    } else if (type == "normal") {
        dist = Normal{num("mu"), num("sigma")};
    } else if (type == "uniform") {
        dist = Uniform{num("a"), num("b")};
    } else {
        throw MalformedDistribution("unknown distribution type \"" + type + "\"");
    }
    validate_distribution(dist);
}

void to_json(nlohmann::json& j, const PathSamplerParams& p) {
    j = {{"alpha", p.alpha}, {"beta", p.beta}, {"low", p.low}, {"high", p.high}};
}

void from_json(const nlohmann::json& j, PathSamplerParams& p) {
    p.alpha = j.value("alpha", p.alpha);
    p.beta = j.value("beta", p.beta);
    p.low = j.value("low", p.low);
    p.high = j.value("high", p.high);
}

}  // namespace reposim
