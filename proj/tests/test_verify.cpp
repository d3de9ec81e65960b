#include <cmath>

#include <gtest/gtest.h>

#include "wdstop/errors.hpp"
#include "wdstop/realoption.hpp"
#include "wdstop/verify.hpp"

using namespace wdstop;

namespace {

const MarketModel kModel{0.0, 0.2};

CandidateSolution pseudo_exp(double lambda) {
    return solve_candidate(kModel, CostSpec::linear(1.0),
                           WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 0.05 + lambda}}));
}

}  // namespace

TEST(StoppingRule, Threshold) {
    const StoppingRule r = StoppingRule::threshold(2.0);
    EXPECT_TRUE(r.stop(2.0));
    EXPECT_TRUE(r.stop(5.0));
    EXPECT_FALSE(r.stop(1.999));
    EXPECT_EQ(r.continuation_interval(1.0), std::make_pair(0.0, 2.0));
    EXPECT_EQ(*r.threshold_value(), 2.0);
    EXPECT_THROW(StoppingRule::threshold(0.0), InvalidArgument);
}

TEST(StoppingRule, SetUnion) {
    const StoppingRule r = StoppingRule::set_union({{1.0, 2.0}, {4.0, INFINITY}});
    EXPECT_FALSE(r.threshold_value().has_value());
    EXPECT_TRUE(r.stop(1.5));
    EXPECT_FALSE(r.stop(3.0));
    EXPECT_EQ(r.continuation_interval(3.0), std::make_pair(2.0, 4.0));
    EXPECT_EQ(r.continuation_interval(0.5), std::make_pair(0.0, 1.0));
    EXPECT_THROW(StoppingRule::set_union({{1.0, 2.0}, {2.0, 3.0}}), InvalidArgument);
    EXPECT_THROW(StoppingRule::set_union({{2.0, 1.0}}), InvalidArgument);
    EXPECT_TRUE(StoppingRule::set_union({{3.0, INFINITY}}).threshold_value().has_value());
}

TEST(ResidualGrid, ExcludesThreshold) {
    const auto g = default_residual_grid(0.5);
    EXPECT_EQ(g.size(), 200u);
    EXPECT_NEAR(g.front(), 0.005, 1e-15);
    EXPECT_NEAR(g.back(), 50.0, 1e-12);
    for (double x : g) EXPECT_GT(std::abs(x - 0.5), 1e-10);
}

TEST(BellmanResiduals, PassForEquilibrium) {
    for (const CandidateSolution& c :
         {pseudo_exp(0.01), solve_candidate(kModel, CostSpec::linear(1.0), WeightingDistribution::gamma(2.0, 0.01)),
          solve_candidate({0.01, 0.3}, CostSpec::power(0.5, 1.0), WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 0.2}}))}) {
        const auto grid = default_residual_grid(c.x_star());
        const ResidualReport rep = bellman_residuals(c, grid);
        EXPECT_TRUE(rep.pass) << rep.detail;
        EXPECT_LT(rep.worst_abs_min, 1e-6);
    }
}

TEST(BellmanResiduals, ObstacleViolationWithoutEquilibrium) {
    const CandidateSolution c = pseudo_exp(10.0);
    const ResidualReport rep = bellman_residuals(c, default_residual_grid(c.x_star()));
    EXPECT_FALSE(rep.pass);
    EXPECT_EQ(rep.detail.rfind("obstacle violation", 0), 0u) << rep.detail;
}

TEST(BellmanResiduals, ShiftedThresholdFlagged) {
    const CandidateSolution good = pseudo_exp(0.01);
    const CandidateSolution off = candidate_from_threshold(kModel, CostSpec::linear(1.0), good.weights(),
                                                           1.1 * good.x_star());
    const ResidualReport rep = bellman_residuals(off, default_residual_grid(off.x_star()));
    EXPECT_FALSE(rep.pass);
}

TEST(Scans, ValueBound) {
    const CandidateSolution bad = pseudo_exp(10.0);
    const auto grid = default_residual_grid(bad.x_star());
    const ScanReport s = value_bound_scan([&](double x) { return bad.value(x); }, 1.0, grid);
    EXPECT_FALSE(s.clean);
    EXPECT_GT(s.worst, 0.0);
    for (double x : s.flagged) EXPECT_LT(x, bad.x_star());
    const CandidateSolution good = pseudo_exp(0.01);
    EXPECT_TRUE(value_bound_scan([&](double x) { return good.value(x); }, 1.0, default_residual_grid(good.x_star())).clean);
}

TEST(Scans, ContinuationFloor) {
    const CandidateSolution bad = pseudo_exp(10.0);
    const auto grid = default_residual_grid(bad.x_star());
    const ScanReport s = continuation_floor_scan(StoppingRule::threshold(bad.x_star()), bad.cost(), bad.weights(), grid);
    EXPECT_FALSE(s.clean);
    // Flagged exactly on [x*, K int r dF).
    for (double x : s.flagged) {
        EXPECT_GE(x, bad.x_star());
        EXPECT_LT(x, 5.05);
    }
    const CandidateSolution good = pseudo_exp(0.01);
    EXPECT_TRUE(continuation_floor_scan(StoppingRule::threshold(good.x_star()), good.cost(), good.weights(),
                                        default_residual_grid(good.x_star()))
                    .clean);
}

TEST(SpikeAnalytic, Rates) {
    const CandidateSolution good = pseudo_exp(0.01);
    const double xs = good.x_star();
    const SpikeAnalytic stop_cont = spike_probe_analytic(good, 0.5 * xs, 1);
    EXPECT_LT(stop_cont.value, 0.0);
    EXPECT_FALSE(stop_cont.violation);
    EXPECT_NEAR(spike_probe_analytic(good, 0.5 * xs, 0).value, 0.0, 1e-9);
    EXPECT_GE(spike_probe_analytic(good, 2.0 * xs, 0).value, 0.0);
    EXPECT_TRUE(spike_probe_analytic(good, xs, 0).at_boundary);

    const CandidateSolution bad = pseudo_exp(10.0);
    const SpikeAnalytic keep = spike_probe_analytic(bad, 2.0, 0);
    EXPECT_NEAR(keep.value, 2.0 - 5.05, 1e-12);
    EXPECT_TRUE(keep.violation);
    EXPECT_THROW(spike_probe_analytic(bad, 2.0, 2), InvalidArgument);
}
