#include <openssl/sha.h>

#include <algorithm>
#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/multiprecision/cpp_int.hpp>
#include <cmath>
#include <cstdlib>
#include <numbers>
#include <stdexcept>

#include "oracle.hpp"

namespace oracle {

std::uint64_t sha256_prefix(const std::string& bytes) {
    unsigned char md[SHA256_DIGEST_LENGTH];
    SHA256(reinterpret_cast<const unsigned char*>(bytes.data()), bytes.size(), md);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v = (v << 8) | md[i];
    return v;
}

std::uint64_t splitmix_next(std::uint64_t& state) {
    state += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

double splitmix_uniform(std::uint64_t& state) {
    return std::ldexp(static_cast<double>(splitmix_next(state) >> 11), -53);
}

std::size_t replay_row_count(const std::string& path, double mu, double sigma) {
    std::uint64_t state = sha256_prefix(path);
    const double u1 = splitmix_uniform(state);
    const double u2 = splitmix_uniform(state);
    const double z = std::sqrt(-2.0 * std::log(1.0 - u1)) * std::cos(2.0 * std::numbers::pi * u2);
    const double x = mu + sigma * z;
    // ties to even by hand
    double r = std::floor(x);
    const double frac = x - r;
    if (frac > 0.5 || (frac == 0.5 && std::fmod(r, 2.0) != 0.0)) r += 1.0;
    if (r < 1.0) return 1;
    return static_cast<std::size_t>(r);
}

long double mean(const std::vector<long double>& xs) {
    long double s = 0;
    for (auto x : xs) s += x;
    return s / static_cast<long double>(xs.size());
}

long double median(std::vector<long double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : (xs[n / 2 - 1] + xs[n / 2]) / 2;
}

long double sample_variance(const std::vector<long double>& xs) {
    const long double m = mean(xs);
    long double s = 0;
    for (auto x : xs) s += (x - m) * (x - m);
    return s / static_cast<long double>(xs.size() - 1);
}

std::optional<long double> pearson(const std::vector<long double>& xs, const std::vector<long double>& ys) {
    if (xs.size() < 2) return std::nullopt;
    if (std::all_of(xs.begin(), xs.end(), [&](auto x) { return x == xs[0]; })) return std::nullopt;
    if (std::all_of(ys.begin(), ys.end(), [&](auto y) { return y == ys[0]; })) return std::nullopt;
    const long double mx = mean(xs), my = mean(ys);
    long double sxy = 0, sxx = 0, syy = 0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxy += (xs[i] - mx) * (ys[i] - my);
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
    }
    return sxy / std::sqrt(sxx * syy);
}

double chi_square_sf(double df, double x) { return boost::math::gamma_q(df / 2.0, x / 2.0); }

double chi_square_sf_integrated(double df, double x) {
    const double k = df / 2.0;
    const double log_norm = k * std::log(2.0) + std::lgamma(k);
    auto pdf = [&](double t) {
        if (t <= 0.0) return 0.0;
        return std::exp((k - 1.0) * std::log(t) - t / 2.0 - log_norm);
    };
    boost::math::quadrature::exp_sinh<double> integrator;
    return integrator.integrate([&](double t) { return pdf(x + t); });
}

double round_sig_exact(double x, int digits) {
    using boost::multiprecision::cpp_int;
    if (x == 0.0 || !std::isfinite(x)) return x;
    const bool neg = x < 0;
    int e2 = 0;
    const double frac = std::frexp(std::fabs(x), &e2);
    // |x| = m * 2^(e2 - 53) exactly
    const cpp_int m(static_cast<long long>(std::ldexp(frac, 53)));
    const int shift = e2 - 53;
    auto pow10 = [](int n) {
        cpp_int p = 1;
        for (int i = 0; i < n; ++i) p *= 10;
        return p;
    };
    int k = static_cast<int>(std::floor(std::log10(std::fabs(x)))) - digits + 1;
    const cpp_int lo = pow10(digits - 1), hi = pow10(digits);
    for (;;) {
        // |x| / 10^k as num / den
        cpp_int num = m, den = 1;
        if (shift >= 0) num <<= shift;
        else den <<= -shift;
        if (k >= 0) den *= pow10(k);
        else num *= pow10(-k);
        cpp_int q = num / den;
        const cpp_int r = num % den;
        if (q >= hi) {
            ++k;
            continue;
        }
        if (q < lo) {
            --k;
            continue;
        }
        const cpp_int twice = 2 * r;
        if (twice > den || (twice == den && (q % 2) != 0)) ++q;
        const std::string text = (neg ? "-" : "") + q.str() + "e" + std::to_string(k);
        return std::strtod(text.c_str(), nullptr);
    }
}

}  // namespace oracle
