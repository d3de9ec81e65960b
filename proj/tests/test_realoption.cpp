#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wdstop/equilibrium.hpp"
#include "wdstop/errors.hpp"
#include "wdstop/realoption.hpp"

using namespace wdstop;

namespace {

double alpha0(double r, double sigma) { return 0.5 + std::sqrt(0.25 + 2.0 * r / (sigma * sigma)); }

// Two-atom margin by hand: int alpha dF - int r dF * int (alpha-1)/r dF.
double two_atom_margin(double delta, double r, double lambda, double sigma) {
    const double r2 = r + lambda;
    const double a1 = alpha0(r, sigma), a2 = alpha0(r2, sigma);
    const double lhs = delta * a1 + (1 - delta) * a2;
    const double rhs = (delta * r + (1 - delta) * r2) * (delta * (a1 - 1) / r + (1 - delta) * (a2 - 1) / r2);
    return lhs - rhs;
}

}  // namespace

TEST(RealOption, PseudoExponentialMarginsAgainstHandQuadrature) {
    for (double lambda : {0.001, 0.01, 0.3, 1.0, 10.0, 100.0}) {
        const double m = pseudo_exponential_margin(0.5, 0.05, lambda, 0.2);
        EXPECT_NEAR(m, two_atom_margin(0.5, 0.05, lambda, 0.2), 1e-12 * (1 + std::abs(m))) << lambda;
    }
    EXPECT_NEAR(pseudo_exponential_margin(0.5, 0.05, 0.01, 0.2), 0.996367, 5e-6);
    EXPECT_NEAR(pseudo_exponential_margin(0.5, 0.05, 10.0, 0.2), -51.4624, 5e-4);
}

TEST(RealOption, ConvexityFactorIdentity) {
    // alpha(alpha-1)(K - x*/r) = (2/sigma^2)(K r - x*) for the driftless real option.
    std::mt19937_64 gen(77);
    std::uniform_real_distribution<double> ur(1e-4, 20.0);
    const double sigma = 0.3, K = 1.7, xs = 0.4;
    for (int i = 0; i < 100; ++i) {
        const double r = ur(gen);
        const double a = alpha_root(r, {0.0, sigma}), am1 = alpha_minus_one(r, {0.0, sigma});
        const double rhs = 2.0 / (sigma * sigma) * (K * r - xs);
        EXPECT_NEAR(a * am1 * (K - xs / r), rhs, 1e-10 * std::abs(rhs) + 1e-12) << r;
    }
}

TEST(RealOption, AnalysisFields) {
    const auto F = WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 0.06}});
    const RealOptionAnalysis a = analyze_real_option(0.2, 1.0, F);
    EXPECT_NEAR(a.lhs, 0.5 * alpha0(0.05, 0.2) + 0.5 * alpha0(0.06, 0.2), 1e-13);
    EXPECT_NEAR(a.mean_rate, 0.055, 1e-15);
    EXPECT_NEAR(a.inverse_rate, 0.5 / 0.05 + 0.5 / 0.06, 1e-12);
    EXPECT_NEAR(a.margin, a.lhs - a.rhs, 1e-15);
    EXPECT_EQ(a.verdict, VerdictKind::EquilibriumViaSP);
    EXPECT_NEAR(a.x_star, a.K * a.mean_alpha / a.mean_alpha_m1_rate, 1e-15);
    EXPECT_THROW(analyze_real_option(0.2, 1.0, WeightingDistribution::gamma(1.0, 0.02)), DivergentMoment);
    EXPECT_THROW(analyze_real_option(0.2, 0.0, F), InvalidArgument);
}

TEST(RealOption, ThresholdMatchesSolver) {
    for (const auto& F : {WeightingDistribution::degenerate(0.05), WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 10.05}}),
                          WeightingDistribution::gamma(2.0, 0.01)}) {
        const RealOptionAnalysis a = analyze_real_option(0.2, 1.0, F);
        const CandidateSolution c = solve_candidate({0.0, 0.2}, CostSpec::linear(1.0), F);
        EXPECT_NEAR(a.x_star, c.x_star(), 1e-9 * a.x_star) << F.describe();
        for (double frac : {0.1, 0.6, 1.0, 2.0}) {
            const double x = frac * a.x_star;
            EXPECT_NEAR(real_option_value(a, x), c.value(x), 1e-9);
            for (double r : F.rule().nodes) EXPECT_NEAR(real_option_w(a, r, x), c.w(x, r), 1e-8 * (1 + std::abs(c.w(x, r))));
        }
    }
}

TEST(RealOption, MarginSignMatchesConditionPair) {
    // The single moment inequality agrees with running-cost floor plus convexity.
    std::mt19937_64 gen(2024);
    std::uniform_real_distribution<double> ud(0.05, 0.95), ur(0.005, 0.2), ul(-4.0, 2.0), us(0.1, 0.5);
    int negative = 0, positive = 0;
    for (int i = 0; i < 40; ++i) {
        const double delta = ud(gen), r = ur(gen), lambda = std::pow(10.0, ul(gen)), sigma = us(gen);
        const auto F = WeightingDistribution::mixture({{delta, r}, {1 - delta, r + lambda}});
        const RealOptionAnalysis a = analyze_real_option(sigma, 1.0, F);
        const Verdict v = check_equilibrium_conditions(solve_candidate({0.0, sigma}, CostSpec::linear(1.0), F));
        const bool conditions = v.evidence.running_cost_lhs >= v.evidence.running_cost_rhs &&
                                v.evidence.convexity_value <= 0.0;
        EXPECT_EQ(conditions, a.margin >= 0.0) << "delta=" << delta << " r=" << r << " lambda=" << lambda;
        (a.margin >= 0.0 ? positive : negative)++;
    }
    EXPECT_GT(positive, 0);
    EXPECT_GT(negative, 0);
}

TEST(RealOption, NoEquilibriumMechanism) {
    const auto F = WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 10.05}});
    const RealOptionAnalysis a = analyze_real_option(0.2, 1.0, F);
    ASSERT_EQ(a.verdict, VerdictKind::NoEquilibrium);
    EXPECT_LT(a.x_star, a.K * a.mean_rate);
    double worst = -INFINITY;
    for (int i = 1; i < 10000; ++i) worst = std::max(worst, real_option_value(a, 1e-4 * i * a.x_star) - a.K);
    EXPECT_GT(worst, 0.0);
}

TEST(GhdCertificate, HoldsOnAdmissibleGrid) {
    const double sigma = 0.2, s2h = 0.5 * sigma * sigma;
    for (int i = 1; i <= 10; ++i) {
        const double beta = s2h * i / 10.0;
        for (int j = 1; j <= 10; ++j) {
            const double gamma = beta * j / 11.0;
            const GhdCertificate c = ghd_certificate(beta, gamma, sigma);
            ASSERT_TRUE(c.applicable);
            EXPECT_TRUE(c.certified) << beta << " " << gamma;
            EXPECT_EQ(c.status, "certified holds");
            EXPECT_EQ(c.direct.verdict, VerdictKind::EquilibriumViaSP);
            EXPECT_GE(c.direct.margin, 0.0);
        }
    }
}

TEST(GhdCertificate, InapplicableOutsideRange) {
    const GhdCertificate c = ghd_certificate(0.05, 0.01, 0.2);
    EXPECT_FALSE(c.applicable);
    EXPECT_EQ(c.status, "chain inapplicable");
    // gamma >= beta puts shape <= 1 on the weights: int 1/r dF diverges.
    EXPECT_THROW(ghd_certificate(0.01, 0.02, 0.2), DivergentMoment);
    EXPECT_THROW(ghd_certificate(0.0, 0.01, 0.2), InvalidArgument);
}

TEST(GhdCertificate, ReferenceCase) {
    const GhdCertificate c = ghd_certificate(0.02, 0.01, 0.2);
    EXPECT_TRUE(c.certified);
    EXPECT_NEAR(c.direct.margin, 0.92216, 1e-5);
    EXPECT_NEAR(c.direct.x_star, 0.0481284, 1e-7);
}

TEST(FlipSearch, FindsCrossing) {
    const FlipSearch s = lambda_flip_search(0.5, 0.05, 0.2);
    ASSERT_TRUE(s.found);
    EXPECT_GT(s.lambda_star, 0.01);
    EXPECT_LT(s.lambda_star, 10.0);
    EXPECT_EQ(s.sign_changes, 1);
    EXPECT_NEAR(s.lambda_star, 0.3139883743, 1e-8);
    EXPECT_GE(pseudo_exponential_margin(0.5, 0.05, s.lambda_star - 1e-3, 0.2), 0.0);
    EXPECT_LT(pseudo_exponential_margin(0.5, 0.05, s.lambda_star + 1e-3, 0.2), 0.0);
    EXPECT_EQ(s.scan.size(), 50u);
}

TEST(FlipSearch, Validation) {
    EXPECT_THROW(lambda_flip_search(0.0, 0.05, 0.2), InvalidArgument);
    EXPECT_THROW(lambda_flip_search(0.5, -0.05, 0.2), InvalidArgument);
}
