#include <cmath>
#include <vector>

#include <gtest/gtest.h>

#include "wdstop/benchmark.hpp"
#include "wdstop/errors.hpp"
#include "wdstop/rng.hpp"
#include "wdstop/verify.hpp"

using namespace wdstop;

namespace {

const MarketModel kModel{0.0, 0.2};
const CostSpec kLinear = CostSpec::linear(1.0);

SimulationConfig small(std::size_t paths, std::uint64_t seed = 1) {
    SimulationConfig c;
    c.paths = paths;
    c.seed = seed;
    c.threads = 1;
    return c;
}

}  // namespace

TEST(Philox, ReproducibleAndDistinct) {
    const PhiloxStream a(7, 3), b(7, 3), c(7, 4), d(8, 3);
    EXPECT_EQ(a.uniform_pair(10), b.uniform_pair(10));
    EXPECT_NE(a.uniform_pair(10), c.uniform_pair(10));
    EXPECT_NE(a.uniform_pair(10), d.uniform_pair(10));
    EXPECT_NE(a.uniform_pair(10), a.uniform_pair(11));
}

TEST(Philox, UniformMoments) {
    const PhiloxStream s(42, 0);
    double m1 = 0, m2 = 0;
    const int n = 200000;
    for (int i = 0; i < n / 2; ++i) {
        for (double u : s.uniform_pair(static_cast<std::uint64_t>(i))) {
            ASSERT_GT(u, 0.0);
            ASSERT_LT(u, 1.0);
            m1 += u;
            m2 += u * u;
        }
    }
    EXPECT_NEAR(m1 / n, 0.5, 5 * std::sqrt(1.0 / 12 / n));
    EXPECT_NEAR(m2 / n, 1.0 / 3, 5 * std::sqrt(4.0 / 45 / n));
}

TEST(MonteCarlo, StoppedAtStartReturnsK) {
    const McEstimate e = mc_cost_estimate(2.0, StoppingRule::threshold(1.0), DiscountFunction::exponential(0.05), kModel,
                                          kLinear, small(10));
    EXPECT_EQ(e.estimate, 1.0);
    EXPECT_EQ(e.std_error, 0.0);
}

TEST(MonteCarlo, ConfigValidation) {
    const auto h = DiscountFunction::exponential(0.05);
    const auto rule = StoppingRule::threshold(0.1);
    SimulationConfig c = small(0);
    EXPECT_THROW(mc_cost_estimate(0.05, rule, h, kModel, kLinear, c), InvalidArgument);
    c = small(10);
    c.dt = 0.0;
    EXPECT_THROW(mc_cost_estimate(0.05, rule, h, kModel, kLinear, c), InvalidArgument);
    EXPECT_THROW(mc_cost_estimate(0.0, rule, h, kModel, kLinear, small(10)), InvalidArgument);
    const std::vector<double> eps{0.0105};
    EXPECT_THROW(mc_spike_probe(0.05, rule, h, kModel, kLinear, small(10), eps), InvalidArgument);
}

TEST(MonteCarlo, DeterministicAcrossThreadCounts) {
    const auto h = DiscountFunction::generalized_hyperbolic(0.02, 0.01);
    const auto rule = StoppingRule::threshold(0.048);
    SimulationConfig c = small(3001, 99);
    const McEstimate one = mc_cost_estimate(0.02, rule, h, kModel, kLinear, c);
    c.threads = 4;
    const McEstimate four = mc_cost_estimate(0.02, rule, h, kModel, kLinear, c);
    EXPECT_EQ(one.estimate, four.estimate);
    EXPECT_EQ(one.std_error, four.std_error);
    const McEstimate again = mc_cost_estimate(0.02, rule, h, kModel, kLinear, c);
    EXPECT_EQ(again.estimate, four.estimate);
    c.seed = 100;
    EXPECT_NE(mc_cost_estimate(0.02, rule, h, kModel, kLinear, c).estimate, one.estimate);
}

TEST(MonteCarlo, ConsistentOverSeeds) {
    // 100 independent estimates of a known value: z-scores behave like N(0,1).
    const BenchmarkSolution b = solve_benchmark(kModel, kLinear, 0.05);
    const auto h = DiscountFunction::exponential(0.05);
    const auto rule = StoppingRule::threshold(b.x_B);
    const double x = 0.6 * b.x_B, exact = b.value(x);
    int outside = 0;
    double zsum = 0.0;
    for (std::uint64_t seed = 1; seed <= 100; ++seed) {
        const McEstimate e = mc_cost_estimate(x, rule, h, kModel, kLinear, small(800, seed));
        const double z = (e.estimate - exact) / e.std_error;
        zsum += z;
        if (std::abs(z) > 3.0) ++outside;
        EXPECT_LT(e.bias_bound, 1e-6);
    }
    EXPECT_LE(outside, 2);
    EXPECT_LT(std::abs(zsum / 10.0), 3.5);  // mean z times sqrt(100)
}

TEST(MonteCarlo, StepHalvingStable) {
    const auto h = DiscountFunction::generalized_hyperbolic(0.02, 0.01);
    const auto rule = StoppingRule::threshold(0.048);
    SimulationConfig c = small(20000, 5);
    c.dt = 2e-3;
    const McEstimate coarse = mc_cost_estimate(0.03, rule, h, kModel, kLinear, c);
    c.dt = 1e-3;
    const McEstimate fine = mc_cost_estimate(0.03, rule, h, kModel, kLinear, c);
    const double se = std::hypot(coarse.std_error, fine.std_error);
    EXPECT_LT(std::abs(coarse.estimate - fine.estimate), 3.0 * se);
}

TEST(MonteCarlo, AdaptiveMatchesFineOnly) {
    const BenchmarkSolution b = solve_benchmark(kModel, kLinear, 0.5);
    const auto h = DiscountFunction::exponential(0.5);
    const auto rule = StoppingRule::threshold(b.x_B);
    SimulationConfig c = small(4000, 3);
    const McEstimate adaptive = mc_cost_estimate(0.5 * b.x_B, rule, h, kModel, kLinear, c);
    c.adaptive = false;
    const McEstimate fine = mc_cost_estimate(0.5 * b.x_B, rule, h, kModel, kLinear, c);
    EXPECT_LT(std::abs(adaptive.estimate - b.value(0.5 * b.x_B)), 3.0 * adaptive.std_error);
    EXPECT_LT(std::abs(fine.estimate - b.value(0.5 * b.x_B)), 3.0 * fine.std_error + fine.bias_bound);
    EXPECT_LT(adaptive.mean_steps, fine.mean_steps);
}

TEST(MonteCarlo, ScalarBackendAgrees) {
    if (!simd::backend_available(simd::Backend::Avx2)) GTEST_SKIP() << "AVX2 unavailable";
    const auto h = DiscountFunction::pseudo_exponential(0.5, 0.05, 0.01);
    const auto rule = StoppingRule::threshold(0.2);
    SimulationConfig c = small(4000, 11);
    c.backend = simd::Backend::Scalar;
    const McEstimate s = mc_cost_estimate(0.1, rule, h, kModel, kLinear, c);
    c.backend = simd::Backend::Avx2;
    const McEstimate v = mc_cost_estimate(0.1, rule, h, kModel, kLinear, c);
    EXPECT_LT(std::abs(s.estimate - v.estimate), 0.1 * s.std_error);
}

TEST(MonteCarlo, FixedHorizonReportsBias) {
    const auto h = DiscountFunction::exponential(0.05);
    SimulationConfig c = small(200);
    c.t_max = 5.0;
    c.adaptive = false;
    const McEstimate e = mc_cost_estimate(0.05, StoppingRule::threshold(0.1), h, kModel, kLinear, c);
    EXPECT_GT(e.bias_bound, 0.0);
}

TEST(SpikeProbe, ContinuationSigns) {
    const CandidateSolution c =
        solve_candidate(kModel, kLinear, WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 0.06}}));
    const auto h = DiscountFunction::pseudo_exponential(0.5, 0.05, 0.01);
    const std::vector<double> eps{0.01};
    const SpikeProbeReport r =
        mc_spike_probe(0.5 * c.x_star(), StoppingRule::threshold(c.x_star()), h, kModel, kLinear, small(4000), eps, &c);
    EXPECT_EQ(r.stop_now.sign, SignVerdict::Negative);
    EXPECT_EQ(r.keep_going.sign, SignVerdict::IndistinguishableFromZero);
    EXPECT_FALSE(r.stop_now.disagrees) << r.stop_now.detail;
    EXPECT_FALSE(r.keep_going.disagrees) << r.keep_going.detail;
    EXPECT_EQ(r.stop_now.entries.size(), 1u);
}

TEST(SpikeProbe, FlaggedStoppingRegion) {
    const auto F = WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 10.05}});
    const CandidateSolution c = solve_candidate(kModel, kLinear, F);
    const auto h = DiscountFunction::pseudo_exponential(0.5, 0.05, 10.0);
    const std::vector<double> eps{0.02, 0.01};
    const SpikeProbeReport r =
        mc_spike_probe(2.0, StoppingRule::threshold(c.x_star()), h, kModel, kLinear, small(2000), eps, &c);
    EXPECT_EQ(r.keep_going.sign, SignVerdict::Negative);
    EXPECT_FALSE(r.keep_going.disagrees) << r.keep_going.detail;
    ASSERT_TRUE(r.keep_going.analytic.has_value());
    EXPECT_NEAR(*r.keep_going.analytic, -3.05, 1e-12);
    // Smaller epsilon moves the finite-difference quotient toward the rate.
    EXPECT_LT(r.keep_going.entries[1].mean, r.keep_going.entries[0].mean);
}
