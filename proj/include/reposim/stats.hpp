#pragma once

// Statistics used for ground truth: location/spread, mode, Pearson's r and
// the chi-square independence test.

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace reposim {

double mean(const std::vector<double>& xs);
/// Midpoint average for an even count.
double median(std::vector<double> xs);
/// Divisor n - 1; requires at least two values.
double sample_variance(const std::vector<double>& xs);
/// nullopt when fewer than two pairs or either column has zero variance.
std::optional<double> pearson(const std::vector<double>& xs, const std::vector<double>& ys);

/// Most common value; ties go to the smallest value (lexicographic / numeric).
std::string mode(const std::vector<std::string>& xs);
std::int64_t mode(const std::vector<std::int64_t>& xs);

/// Regularized upper incomplete gamma Q(a, x). `use_series` selects the
/// power-series route (through P = 1 - Q); otherwise a continued fraction.
double regularized_gamma_q(double a, double x, bool use_series);

/// Upper-tail probability of a chi-square variate: Q(df/2, x/2), computed by
/// series when x < df + 1 and by continued fraction otherwise.
double chi_square_pvalue(double df, double x);

struct ContingencyTable {
    std::vector<std::string> row_labels;
    std::vector<std::string> col_labels;
    std::vector<std::vector<double>> counts;  // [row][col]
};

/// Counts over observed category pairs, labels sorted.
ContingencyTable contingency(const std::vector<std::string>& a, const std::vector<std::string>& b);

struct ChiSquareResult {
    double statistic = 0.0;
    int df = 0;
    double p_value = 1.0;
};

/// nullopt when df = 0 or a marginal is zero.
std::optional<ChiSquareResult> chi_square_test(const ContingencyTable& table);

}  // namespace reposim
