#include <cmath>
#include <limits>

#include "doctest.h"
#include "oracle.hpp"
#include "reposim/seedstream.hpp"
#include "reposim/stats.hpp"

using namespace reposim;

namespace {

std::vector<long double> widen(const std::vector<double>& xs) { return {xs.begin(), xs.end()}; }

bool close(double a, double b, double rel) {
    return std::fabs(a - b) <= rel * std::max({std::fabs(a), std::fabs(b), 1e-300});
}

}  // namespace

TEST_CASE("chi-square tail at the textbook critical values") {
    // df = 1 at 3.841 and df = 2 at 5.991 are the 5% critical values
    CHECK(chi_square_pvalue(1, 3.841) == doctest::Approx(0.0500).epsilon(1e-3));
    CHECK(chi_square_pvalue(2, 5.991) == doctest::Approx(0.0500).epsilon(1e-3));
    CHECK(close(chi_square_pvalue(1, 3.841), oracle::chi_square_sf_integrated(1, 3.841), 1e-9));
    CHECK(close(chi_square_pvalue(2, 5.991), oracle::chi_square_sf_integrated(2, 5.991), 1e-9));
    // df = 2 has the closed form exp(-x/2)
    CHECK(close(chi_square_pvalue(2, 5.991), std::exp(-5.991 / 2), 1e-12));
}

TEST_CASE("chi-square tail agrees with two oracles over random arguments") {
    RandomStream s(17);
    for (int i = 0; i < 1000; ++i) {
        const double df = static_cast<double>(1 + s.index(30));
        const double x = 0.01 + 80.0 * s.uniform();
        const double got = chi_square_pvalue(df, x);
        const double want = oracle::chi_square_sf(df, x);
        INFO("df " << df << " x " << x);
        if (want > 1e-250) CHECK(close(got, want, 1e-9));
        if (i % 50 == 0 && want > 1e-100) CHECK(close(got, oracle::chi_square_sf_integrated(df, x), 1e-8));
    }
}

TEST_CASE("both incomplete-gamma routes agree where either converges") {
    RandomStream s(4);
    for (int i = 0; i < 500; ++i) {
        const double a = 0.5 + 10 * s.uniform();
        const double x = 0.1 + 10 * s.uniform();
        const double series = regularized_gamma_q(a, x, true);
        const double fraction = regularized_gamma_q(a, x, false);
        const double want = oracle::chi_square_sf(2 * a, 2 * x);
        INFO("a " << a << " x " << x);
        if (x < a + 1) CHECK(close(series, want, 1e-9));
        else CHECK(close(fraction, want, 1e-9));
    }
    CHECK(regularized_gamma_q(2.0, 0.0, true) == 1.0);
}

TEST_CASE("location and spread against long-double oracles") {
    RandomStream s(8);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t n = 2 + s.index(300);
        std::vector<double> xs(n), ys(n);
        for (std::size_t i = 0; i < n; ++i) {
            xs[i] = sample_normal(s, 10.0, 3.0);
            ys[i] = 0.5 * xs[i] + sample_normal(s, 0.0, 1.0);
        }
        CHECK(close(mean(xs), static_cast<double>(oracle::mean(widen(xs))), 1e-12));
        CHECK(close(median(xs), static_cast<double>(oracle::median(widen(xs))), 1e-15));
        CHECK(close(sample_variance(xs), static_cast<double>(oracle::sample_variance(widen(xs))), 1e-10));
        const auto r = pearson(xs, ys);
        const auto want = oracle::pearson(widen(xs), widen(ys));
        REQUIRE(r);
        REQUIRE(want);
        CHECK(close(*r, static_cast<double>(*want), 1e-10));
        CHECK(*r <= 1.0);
        CHECK(*r >= -1.0);
    }
}

TEST_CASE("median of even and odd counts") {
    CHECK(median({3.0, 1.0, 2.0}) == 2.0);
    CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
    CHECK(median({7.0}) == 7.0);
}

TEST_CASE("variance of a known sample") {
    CHECK(sample_variance({2, 4, 4, 4, 5, 5, 7, 9}) == doctest::Approx(32.0 / 7));
}

TEST_CASE("pearson degeneracy") {
    CHECK_FALSE(pearson({1.0}, {2.0}));
    CHECK_FALSE(pearson({1.0, 1.0, 1.0}, {1.0, 2.0, 3.0}));
    CHECK_FALSE(pearson({1.0, 2.0, 3.0}, {5.0, 5.0, 5.0}));
    CHECK(*pearson({1.0, 2.0, 3.0}, {2.0, 4.0, 6.0}) == doctest::Approx(1.0));
    CHECK(*pearson({1.0, 2.0, 3.0}, {3.0, 2.0, 1.0}) == doctest::Approx(-1.0));
}

TEST_CASE("mode ties go to the smallest value") {
    CHECK(mode(std::vector<std::string>{"b", "a", "b", "a", "c"}) == "a");
    CHECK(mode(std::vector<std::string>{"z", "y", "z"}) == "z");
    CHECK(mode(std::vector<std::int64_t>{5, 3, 5, 3, 9}) == 3);
    CHECK(mode(std::vector<std::int64_t>{-2, 10, 10}) == 10);
    CHECK(mode(std::vector<std::int64_t>{-2, 10}) == -2);
}

TEST_CASE("contingency counts with sorted labels") {
    const auto t = contingency({"b", "a", "a", "b", "a"}, {"x", "y", "x", "x", "x"});
    CHECK(t.row_labels == std::vector<std::string>{"a", "b"});
    CHECK(t.col_labels == std::vector<std::string>{"x", "y"});
    CHECK(t.counts == std::vector<std::vector<double>>{{2, 1}, {2, 0}});
}

TEST_CASE("chi-square test on a known table") {
    // rows (10, 20), (30, 40): expected (12, 18), (28, 42)
    ContingencyTable t{{"a", "b"}, {"x", "y"}, {{10, 20}, {30, 40}}};
    const auto r = chi_square_test(t);
    REQUIRE(r);
    const double want = 4.0 / 12 + 4.0 / 18 + 4.0 / 28 + 4.0 / 42;
    CHECK(r->statistic == doctest::Approx(want).epsilon(1e-12));
    CHECK(r->df == 1);
    CHECK(close(r->p_value, oracle::chi_square_sf(1, want), 1e-9));
}

TEST_CASE("degenerate contingency tables have no test") {
    CHECK_FALSE(chi_square_test(ContingencyTable{{"a"}, {"x", "y"}, {{3, 4}}}));
    CHECK_FALSE(chi_square_test(ContingencyTable{{"a", "b"}, {"x"}, {{3}, {4}}}));
    CHECK_FALSE(chi_square_test(ContingencyTable{{"a", "b"}, {"x", "y"}, {{0, 0}, {1, 2}}}));
    CHECK_FALSE(chi_square_test(contingency({"a", "a"}, {"x", "y"})));
}

TEST_CASE("independent categories rarely reject") {
    RandomStream s(99);
    int rejections = 0;
    const int trials = 400;
    for (int t = 0; t < trials; ++t) {
        std::vector<std::string> a, b;
        for (int i = 0; i < 200; ++i) {
            a.push_back(std::string(1, static_cast<char>('a' + s.index(3))));
            b.push_back(std::string(1, static_cast<char>('x' + s.index(2))));
        }
        const auto r = chi_square_test(contingency(a, b));
        REQUIRE(r);
        if (r->p_value <= 0.05) ++rejections;
    }
    // nominal 5%: 20 expected, sd about 4.4
    CHECK(rejections < 45);
}
