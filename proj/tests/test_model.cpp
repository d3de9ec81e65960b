#include <cmath>
#include <random>

#include <gtest/gtest.h>

#include "wdstop/errors.hpp"
#include "wdstop/model.hpp"

using namespace wdstop;

namespace {

// Larger root of (1/2)s^2 a^2 + (b - s^2/2) a - r = 0 by the textbook formula in long double.
double alpha_oracle(double r, double b, double sigma) {
    const long double s2 = static_cast<long double>(sigma) * sigma;
    const long double B = b - 0.5L * s2;
    return static_cast<double>((-B + std::sqrt(B * B + 2.0L * s2 * r)) / s2);
}

const AdmissibilityCheck& find(const AdmissibilityReport& rep, const std::string& name) {
    for (const auto& c : rep.checks)
        if (c.name == name) return c;
    throw std::runtime_error("no check named " + name);
}

PerpetualOptions numeric_only() {
    PerpetualOptions o;
    o.allow_closed_form = false;
    return o;
}

}  // namespace

TEST(MarketModel, Validate) {
    EXPECT_NO_THROW((MarketModel{0.01, 0.2}.validate()));
    EXPECT_THROW((MarketModel{0.0, 0.0}.validate()), InvalidArgument);
    EXPECT_THROW((MarketModel{0.0, -0.1}.validate()), InvalidArgument);
    EXPECT_THROW((MarketModel{NAN, 0.2}.validate()), InvalidArgument);
}

TEST(Alpha, MatchesQuadraticFormula) {
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> ur(0.001, 5.0), ub(-0.1, 0.1), us(0.05, 1.0);
    for (int i = 0; i < 500; ++i) {
        const double r = ur(gen), b = ub(gen), s = us(gen);
        const double a = alpha_root(r, {b, s});
        EXPECT_NEAR(a, alpha_oracle(r, b, s), 1e-12 * a);
        EXPECT_NEAR(0.5 * s * s * a * a + (b - 0.5 * s * s) * a - r, 0.0, 1e-12 * (1 + r));
    }
}

TEST(Alpha, GreaterThanOneIffRateExceedsDrift) {
    const MarketModel m{0.03, 0.25};
    EXPECT_GT(alpha_root(0.031, m), 1.0);
    EXPECT_LT(alpha_root(0.029, m), 1.0);
    EXPECT_NEAR(alpha_root(0.03, m), 1.0, 1e-14);
    EXPECT_THROW(alpha_root(0.0, m), InvalidArgument);
}

TEST(Alpha, MinusOneStableNearDrift) {
    const MarketModel m{0.03, 0.25};
    for (double d : {1e-3, 1e-6, 1e-10, 1e-14}) {
        const double r = 0.03 + d;
        // alpha - 1 = d / (b + s^2/2) to first order.
        const double first_order = d / (0.03 + 0.5 * 0.0625);
        EXPECT_NEAR(alpha_minus_one(r, m), first_order, 1e-2 * first_order + 1e-300) << d;
    }
    for (double r : {0.05, 0.5, 5.0})
        EXPECT_NEAR(alpha_minus_one(r, m), alpha_oracle(r, 0.03, 0.25) - 1.0, 1e-13);
}

TEST(PowerGrowthRate, Values) {
    const MarketModel m{0.02, 0.3};
    EXPECT_DOUBLE_EQ(power_growth_rate(1.0, m), 0.02);
    EXPECT_DOUBLE_EQ(power_growth_rate(0.0, m), 0.0);
    EXPECT_NEAR(power_growth_rate(0.5, m), 0.5 * 0.02 + 0.5 * 0.09 * 0.5 * -0.5, 1e-16);
}

TEST(CostSpec, Factories) {
    const CostSpec lin = CostSpec::linear(2.0, 3.0);
    EXPECT_DOUBLE_EQ(lin.f(2.0), 6.0);
    EXPECT_DOUBLE_EQ(lin.fx(5.0), 3.0);
    EXPECT_DOUBLE_EQ(lin.fxx(5.0), 0.0);
    EXPECT_DOUBLE_EQ(lin.K(), 2.0);
    EXPECT_TRUE(lin.is_linear());
    const CostSpec aff = CostSpec::affine(1.5, 0.2, 1.0);
    EXPECT_DOUBLE_EQ(aff.f(0.0), 0.2);
    const CostSpec pw = CostSpec::power(0.5, 1.0, 2.0);
    EXPECT_DOUBLE_EQ(pw.f(4.0), 4.0);
    EXPECT_NEAR(pw.fx(4.0), 0.5, 1e-15);
    EXPECT_NEAR(pw.fxx(4.0), -0.0625, 1e-15);
    EXPECT_THROW(CostSpec::power(1.5, 1.0), InvalidArgument);
    EXPECT_THROW(CostSpec::linear(0.0), InvalidArgument);
    const CostSpec tab = CostSpec::table({0.0, 1.0, 2.0}, {0.0, 2.0, 3.0}, 1.0);
    EXPECT_DOUBLE_EQ(tab.f(0.5), 1.0);
    EXPECT_DOUBLE_EQ(tab.f(3.0), 4.0);
    EXPECT_TRUE(tab.has_kinks());
    EXPECT_DOUBLE_EQ(lin.with_K(7.0).K(), 7.0);
}

TEST(CostSpec, CustomCentralDifferences) {
    CostAttributes attr;
    const CostSpec c = CostSpec::custom([](double x) { return std::log1p(x); }, std::nullopt, std::nullopt, attr, 1.0);
    for (double x : {0.1, 1.0, 10.0}) {
        EXPECT_NEAR(c.fx(x), 1.0 / (1.0 + x), 1e-8);
        EXPECT_NEAR(c.fxx(x), -1.0 / ((1.0 + x) * (1.0 + x)), 1e-4);
    }
}

TEST(PerpetualCost, ClosedForms) {
    const MarketModel m{0.02, 0.3};
    const double r = 0.07;
    const PerpetualCost L = perpetual_cost(2.0, r, m, CostSpec::linear(1.0));
    EXPECT_NEAR(L.L, 2.0 / (r - 0.02), 1e-13);
    EXPECT_NEAR(L.Lx, 1.0 / (r - 0.02), 1e-13);
    EXPECT_EQ(L.Lxx, 0.0);
    const PerpetualCost A = perpetual_cost(2.0, r, m, CostSpec::affine(1.0, 0.5, 1.0));
    EXPECT_NEAR(A.L, 2.0 / (r - 0.02) + 0.5 / r, 1e-12);
    const double p = 0.5, kappa = p * 0.02 + 0.5 * 0.09 * p * (p - 1);
    const PerpetualCost P = perpetual_cost(4.0, r, m, CostSpec::power(p, 1.0));
    EXPECT_NEAR(P.L, 2.0 / (r - kappa), 1e-12);
    EXPECT_NEAR(P.Lx, 0.5 * 0.5 / (r - kappa), 1e-12);
    EXPECT_NEAR(P.Lxx, -0.25 * 0.125 / (r - kappa), 1e-12);
}

TEST(PerpetualCost, NumericMatchesClosedForm) {
    const MarketModel m{0.02, 0.3};
    for (const CostSpec& f : {CostSpec::linear(1.0), CostSpec::affine(0.7, 0.3, 1.0), CostSpec::power(0.6, 1.0)}) {
        for (double r : {0.05, 0.5, 3.0}) {
            for (double x : {0.01, 0.5, 2.0, 40.0}) {
                const PerpetualCost a = perpetual_cost(x, r, m, f);
                const PerpetualCost n = perpetual_cost(x, r, m, f, numeric_only());
                EXPECT_NEAR(n.L, a.L, 1e-8 * std::abs(a.L)) << f.name() << " r=" << r << " x=" << x;
                EXPECT_NEAR(n.Lx, a.Lx, 1e-7 * std::abs(a.Lx) + 1e-12) << f.name() << " r=" << r << " x=" << x;
                EXPECT_NEAR(n.Lxx, a.Lxx, 1e-5 * std::abs(a.Lxx) + 1e-7) << f.name() << " r=" << r << " x=" << x;
            }
        }
    }
}

TEST(PerpetualCost, TableEqualToLinear) {
    const MarketModel m{0.0, 0.2};
    const CostSpec tab = CostSpec::table({0.0, 1.0}, {0.0, 1.0}, 1.0);
    for (double x : {0.1, 1.0, 5.0}) {
        const PerpetualCost L = perpetual_cost(x, 0.05, m, tab);
        EXPECT_NEAR(L.L, x / 0.05, 1e-8 * x / 0.05);
        EXPECT_NEAR(L.Lx, 1.0 / 0.05, 1e-6 / 0.05);
    }
}

TEST(PerpetualCost, ZeroStateAndDivergence) {
    const MarketModel m{0.05, 0.2};
    EXPECT_DOUBLE_EQ(perpetual_cost(0.0, 0.1, m, CostSpec::affine(1.0, 0.3, 1.0)).L, 0.3 / 0.1);
    EXPECT_THROW(perpetual_cost(1.0, 0.05, m, CostSpec::linear(1.0)), DivergentMoment);
    EXPECT_THROW(perpetual_cost(1.0, 0.04, m, CostSpec::linear(1.0), numeric_only()), DivergentMoment);
}

TEST(Admissibility, StandardCasePasses) {
    const auto rep = admissibility({0.0, 0.2}, WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 10.05}}),
                                   CostSpec::linear(1.0));
    EXPECT_TRUE(rep.passed()) << (rep.failures().empty() ? "" : rep.failures().front().name);
    EXPECT_NO_THROW(rep.require());
}

TEST(Admissibility, DriftAboveFloorFails) {
    const auto rep = admissibility({0.06, 0.2}, WeightingDistribution::mixture({{0.5, 0.05}, {0.5, 1.0}}),
                                   CostSpec::linear(1.0));
    EXPECT_FALSE(find(rep, "b < supp(F)").passed);
    EXPECT_FALSE(find(rep, "InverseRateShifted(b) finite").passed);
    EXPECT_THROW(rep.require(), AdmissibilityError);
}

TEST(Admissibility, GammaWarnsButPasses) {
    const auto rep = admissibility({0.0, 0.2}, WeightingDistribution::gamma(2.0, 0.01), CostSpec::linear(1.0));
    EXPECT_FALSE(find(rep, "rate floor > 0").passed);
    EXPECT_FALSE(find(rep, "rate floor > 0").mandatory);
    EXPECT_TRUE(rep.passed());
}

TEST(Admissibility, DivergentInverseRate) {
    const auto rep = admissibility({0.0, 0.2}, WeightingDistribution::gamma(1.0, 0.01), CostSpec::linear(1.0));
    EXPECT_FALSE(find(rep, "InverseRate finite").passed);
    EXPECT_FALSE(rep.passed());
}

TEST(Admissibility, InterceptTooLarge) {
    const auto F = WeightingDistribution::degenerate(0.05);
    EXPECT_FALSE(find(admissibility({0.0, 0.2}, F, CostSpec::affine(1.0, 0.06, 1.0)), "f(0) < rK").passed);
    EXPECT_TRUE(find(admissibility({0.0, 0.2}, F, CostSpec::affine(1.0, 0.04, 1.0)), "f(0) < rK").passed);
}

TEST(Admissibility, BoundedCostFailsGrowth) {
    CostAttributes attr;
    attr.linear_growth = true;
    const CostSpec sat = CostSpec::custom([](double x) { return -std::expm1(-x); }, [](double x) { return std::exp(-x); },
                                          std::nullopt, attr, 1.0, "saturating");
    const auto rep = admissibility({0.0, 0.2}, WeightingDistribution::degenerate(0.05), sat);
    EXPECT_FALSE(find(rep, "x f_x(x) -> infinity").passed);
    EXPECT_TRUE(find(admissibility({0.0, 0.2}, WeightingDistribution::degenerate(0.05), CostSpec::power(0.3, 1.0)),
                     "x f_x(x) -> infinity")
                    .passed);
}

TEST(TerminalCost, ConstantTerminalCostIsIdentity) {
    const MarketModel m{0.01, 0.2};
    const CostSpec f = CostSpec::linear(1.0);
    const CostSpec red = reduce_terminal_cost(f, {[](double) { return 1.0; }, std::nullopt, std::nullopt}, 1.0, 0.05, m);
    for (double x : {0.0, 0.3, 7.0}) EXPECT_NEAR(red.f(x), f.f(x), 1e-6 * (1 + x));
}

TEST(TerminalCost, LinearTerminalCost) {
    const MarketModel m{0.01, 0.2};
    const double r = 0.05, K = 1.0;
    const CostSpec red = reduce_terminal_cost(CostSpec::linear(K), {[](double x) { return 1.0 + 2.0 * x; },
                                                                    [](double) { return 2.0; },
                                                                    [](double) { return 0.0; }},
                                              K, r, m);
    for (double x : {0.0, 0.3, 7.0}) EXPECT_NEAR(red.f(x), x + 0.01 * x * 2.0 - r * 2.0 * x, 1e-12 * (1 + x));
}

TEST(TerminalCost, KinkRejected) {
    const MarketModel m{0.0, 0.2};
    EXPECT_THROW(reduce_terminal_cost(CostSpec::linear(1.0),
                                      {[](double x) { return 1.0 + std::abs(x - 1.0); }, std::nullopt, std::nullopt},
                                      1.0, 0.05, m),
                 InvalidArgument);
}
