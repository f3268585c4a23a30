#include "reposim/stats.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "reposim/errors.hpp"

namespace reposim {

double mean(const std::vector<double>& xs) {
    if (xs.empty()) throw InternalInconsistency("mean of an empty sample");
    double sum = 0.0;
    for (double x : xs) sum += x;
    return sum / static_cast<double>(xs.size());
}

double median(std::vector<double> xs) {
    if (xs.empty()) throw InternalInconsistency("median of an empty sample");
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    if (n % 2 == 1) return xs[n / 2];
    return (xs[n / 2 - 1] + xs[n / 2]) / 2.0;
}

double sample_variance(const std::vector<double>& xs) {
    if (xs.size() < 2) throw InternalInconsistency("variance needs at least two values");
    const double m = mean(xs);
    double ss = 0.0;
    for (double x : xs) ss += (x - m) * (x - m);
    return ss / static_cast<double>(xs.size() - 1);
}

std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys) {
    if (xs.size() != ys.size() || xs.size() < 2) return std::nullopt;
    // A constant column can leave a rounding residue in sxx; test it exactly.
    auto constant = [](const std::vector<double>& v) {
        return std::all_of(v.begin(), v.end(), [&](double x) { return x == v[0]; });
    };
    if (constant(xs) || constant(ys)) return std::nullopt;
    const double mx = mean(xs);
    const double my = mean(ys);
    double sxx = 0.0, syy = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        sxx += (xs[i] - mx) * (xs[i] - mx);
        syy += (ys[i] - my) * (ys[i] - my);
        sxy += (xs[i] - mx) * (ys[i] - my);
    }
    if (sxx == 0.0 || syy == 0.0) return std::nullopt;
    return sxy / std::sqrt(sxx * syy);
}

namespace {

template <typename T>
T mode_of(const std::vector<T>& xs) {
    if (xs.empty()) throw InternalInconsistency("mode of an empty sample");
    std::map<T, std::size_t> counts;
    for (const auto& x : xs) ++counts[x];
    auto best = counts.begin();
    for (auto it = counts.begin(); it != counts.end(); ++it)
        if (it->second > best->second) best = it;
    return best->first;
}

}  // namespace

std::string mode(const std::vector<std::string>& xs) { return mode_of(xs); }
std::int64_t mode(const std::vector<std::int64_t>& xs) { return mode_of(xs); }

double regularized_gamma_q(double a, double x, bool use_series) {
    constexpr double tol = 1e-12;
    constexpr int max_iter = 100000;
    if (!(a > 0.0) || x < 0.0) throw InternalInconsistency("incomplete gamma outside its domain");
    if (x == 0.0) return 1.0;
    const double log_prefix = a * std::log(x) - x - std::lgamma(a);
    if (use_series) {
        // P(a, x) = x^a e^-x / Gamma(a + 1) * sum x^n / ((a+1)...(a+n))
        double term = 1.0 / a;
        double sum = term;
        for (int n = 1; n < max_iter; ++n) {
            term *= x / (a + n);
            sum += term;
            if (std::abs(term) < std::abs(sum) * tol) break;
        }
        return std::max(0.0, 1.0 - sum * std::exp(log_prefix));
    }
    // Modified Lentz evaluation of the continued fraction for Q.
    constexpr double tiny = 1e-300;
    double b = x + 1.0 - a;
    double c = 1.0 / tiny;
    double d = 1.0 / b;
    double h = d;
    for (int i = 1; i < max_iter; ++i) {
        const double an = -i * (i - a);
        b += 2.0;
        d = an * d + b;
        if (std::abs(d) < tiny) d = tiny;
        c = b + an / c;
        if (std::abs(c) < tiny) c = tiny;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::abs(delta - 1.0) < tol) break;
    }
    return std::exp(log_prefix) * h;
}

double chi_square_pvalue(double df, double x) {
    if (!(df > 0.0)) throw InternalInconsistency("chi-square needs positive degrees of freedom");
    if (x <= 0.0) return 1.0;
    return regularized_gamma_q(df / 2.0, x / 2.0, x < df + 1.0);
}

ContingencyTable contingency(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    if (a.size() != b.size()) throw InternalInconsistency("contingency columns differ in length");
    ContingencyTable t;
    std::set<std::string> ra(a.begin(), a.end()), cb(b.begin(), b.end());
    t.row_labels.assign(ra.begin(), ra.end());
    t.col_labels.assign(cb.begin(), cb.end());
    t.counts.assign(t.row_labels.size(), std::vector<double>(t.col_labels.size(), 0.0));
    for (std::size_t i = 0; i < a.size(); ++i) {
        const auto r = std::lower_bound(t.row_labels.begin(), t.row_labels.end(), a[i]) -
                       t.row_labels.begin();
        const auto c = std::lower_bound(t.col_labels.begin(), t.col_labels.end(), b[i]) -
                       t.col_labels.begin();
        t.counts[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)] += 1.0;
    }
    return t;
}

std::optional<ChiSquareResult> chi_square_test(const ContingencyTable& table) {
    const std::size_t rows = table.counts.size();
    const std::size_t cols = rows ? table.counts[0].size() : 0;
    if (rows < 2 || cols < 2) return std::nullopt;
    std::vector<double> row_sum(rows, 0.0), col_sum(cols, 0.0);
    double total = 0.0;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            row_sum[r] += table.counts[r][c];
            col_sum[c] += table.counts[r][c];
            total += table.counts[r][c];
        }
    for (double s : row_sum)
        if (s == 0.0) return std::nullopt;
    for (double s : col_sum)
        if (s == 0.0) return std::nullopt;
    ChiSquareResult out;
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < cols; ++c) {
            const double expected = row_sum[r] * col_sum[c] / total;
            const double diff = table.counts[r][c] - expected;
            out.statistic += diff * diff / expected;
        }
    out.df = static_cast<int>((rows - 1) * (cols - 1));
    out.p_value = chi_square_pvalue(out.df, out.statistic);
    return out;
}

}  // namespace reposim
