#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wdstop/benchmark.hpp"
#include "wdstop/errors.hpp"

using namespace wdstop;

namespace {

double alpha_oracle(double r, double b, double sigma) {
    const long double s2 = static_cast<long double>(sigma) * sigma;
    const long double B = b - 0.5L * s2;
    return static_cast<double>((-B + std::sqrt(B * B + 2.0L * s2 * r)) / s2);
}

}  // namespace

TEST(Benchmark, LinearThresholdClosedForm) {
    std::mt19937_64 gen(5);
    std::uniform_real_distribution<double> ur(0.01, 0.5), ub(-0.05, 0.05), us(0.1, 0.6), uk(0.5, 5.0);
    for (int i = 0; i < 100; ++i) {
        const double b = ub(gen), r = std::max(b, 0.0) + ur(gen), s = us(gen), K = uk(gen);
        const double a = alpha_oracle(r, b, s);
        const BenchmarkSolution sol = solve_benchmark({b, s}, CostSpec::linear(K), r);
        const double expected = a * K * (r - b) / (a - 1.0);
        EXPECT_NEAR(sol.x_B, expected, 1e-11 * expected) << "r=" << r << " b=" << b << " s=" << s;
    }
}

TEST(Benchmark, AffineAndPowerClosedForms) {
    const MarketModel m{0.01, 0.25};
    const double r = 0.08, K = 2.0;
    const double a = alpha_oracle(r, m.b, m.sigma);
    const BenchmarkSolution aff = solve_benchmark(m, CostSpec::affine(1.5, 0.04, K), r);
    const double xa = a * (K - 0.04 / r) * (r - m.b) / ((a - 1.0) * 1.5);
    EXPECT_NEAR(aff.x_B, xa, 1e-11 * xa);

    const double p = 0.5, kappa = p * m.b + 0.5 * m.sigma * m.sigma * p * (p - 1.0);
    const BenchmarkSolution pw = solve_benchmark(m, CostSpec::power(p, K), r);
    const double xp = std::pow(a * K * (r - kappa) / (a - p), 1.0 / p);
    EXPECT_NEAR(pw.x_B, xp, 1e-11 * xp);
}

TEST(Benchmark, ReferenceThreshold) {
    const BenchmarkSolution sol = solve_benchmark({0.0, 0.2}, CostSpec::linear(1.0), 0.05);
    EXPECT_NEAR(sol.alpha, 2.158312395, 1e-9);
    EXPECT_NEAR(sol.x_B, 0.0931662479036, 1e-12);
}

TEST(Benchmark, ValueFunctionProperties) {
    const MarketModel m{0.01, 0.3};
    const double r = 0.06;
    const BenchmarkSolution sol = solve_benchmark(m, CostSpec::linear(1.0), r);
    const double xb = sol.x_B;
    EXPECT_NEAR(sol.value(xb), 1.0, 1e-13);
    EXPECT_EQ(sol.value(2.0 * xb), 1.0);
    EXPECT_NEAR(sol.value_x(xb), 0.0, 1e-10);
    EXPECT_NEAR(sol.Q(xb), 0.0, 1e-12);
    for (int i = 1; i < 100; ++i) {
        const double x = xb * i / 100.0;
        EXPECT_LT(sol.value(x), 1.0);
        EXPECT_GT(sol.value_x(x), 0.0);
        // (1/2)s^2 x^2 V'' + b x V' + x - r V = 0, V'' by central difference.
        const double h = 1e-4 * x;
        const double vxx = (sol.value(x + h) - 2 * sol.value(x) + sol.value(x - h)) / (h * h);
        const double pde = 0.5 * m.sigma * m.sigma * x * x * vxx + m.b * x * sol.value_x(x) + x - r * sol.value(x);
        EXPECT_NEAR(pde, 0.0, 1e-5) << x;
    }
    EXPECT_DOUBLE_EQ(benchmark_value(sol, 0.5 * xb), sol.value(0.5 * xb));
}

TEST(Benchmark, Preconditions) {
    EXPECT_THROW(solve_benchmark({0.05, 0.2}, CostSpec::linear(1.0), 0.05), InvalidArgument);
    EXPECT_THROW(solve_benchmark({0.0, 0.0}, CostSpec::linear(1.0), 0.05), InvalidArgument);
    // f(0) >= rK: stopping at once is optimal, so there is no interior threshold.
    EXPECT_THROW(solve_benchmark({0.0, 0.2}, CostSpec::affine(1.0, 0.1, 1.0), 0.05), NoRootError);
}
