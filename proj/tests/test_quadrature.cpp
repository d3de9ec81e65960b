#include <cmath>

#include <boost/math/special_functions/gamma.hpp>
#include <gtest/gtest.h>

#include "wdstop/quadrature.hpp"

using namespace wdstop;

namespace {

double sum(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s;
}

}  // namespace

TEST(GaussHermite, NormalMoments) {
    const QuadratureRule q = gauss_hermite(32);
    EXPECT_NEAR(sum(q.weights), 1.0, 1e-14);
    // E[Z^{2k}] = (2k-1)!!
    double dfact = 1.0;
    for (int k = 1; k <= 10; ++k) {
        dfact *= 2 * k - 1;
        double m = 0.0, odd = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) {
            m += q.weights[i] * std::pow(q.nodes[i], 2 * k);
            odd += q.weights[i] * std::pow(q.nodes[i], 2 * k - 1);
        }
        EXPECT_NEAR(m / dfact, 1.0, 1e-12) << "k=" << k;
        EXPECT_NEAR(odd, 0.0, 1e-10 * dfact);
    }
}

TEST(GaussHermite, LognormalMean) {
    const QuadratureRule& q = default_gauss_hermite();
    double m = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) m += q.weights[i] * std::exp(0.7 * q.nodes[i]);
    EXPECT_NEAR(m, std::exp(0.5 * 0.49), 1e-13);
}

TEST(GaussLaguerre, GammaMoments) {
    for (double a : {-0.5, 0.0, 0.7, 3.0}) {
        const QuadratureRule q = gauss_laguerre(24, a);
        EXPECT_NEAR(sum(q.weights), 1.0, 1e-13);
        // E[U^k] = Gamma(a+1+k)/Gamma(a+1) for U ~ Gamma(a+1, 1)
        for (int k = 1; k <= 12; ++k) {
            double m = 0.0;
            for (std::size_t i = 0; i < q.size(); ++i) m += q.weights[i] * std::pow(q.nodes[i], k);
            const double exact = std::exp(std::lgamma(a + 1 + k) - std::lgamma(a + 1));
            EXPECT_NEAR(m / exact, 1.0, 1e-11) << "a=" << a << " k=" << k;
        }
    }
}

TEST(GaussLaguerre, LaplaceTransform) {
    // E[e^{-sU}] = (1+s)^{-(a+1)}
    const double a = 1.5;
    const QuadratureRule q = gauss_laguerre(48, a);
    for (double s : {0.01, 0.3, 1.0}) {
        double m = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) m += q.weights[i] * std::exp(-s * q.nodes[i]);
        EXPECT_NEAR(m, std::pow(1 + s, -(a + 1)), 1e-12);
    }
}

TEST(GaussLegendre, Polynomials) {
    const QuadratureRule q = gauss_legendre(8);
    EXPECT_NEAR(sum(q.weights), 2.0, 1e-14);
    for (int k = 0; k <= 15; ++k) {
        double m = 0.0;
        for (std::size_t i = 0; i < q.size(); ++i) m += q.weights[i] * std::pow(q.nodes[i], k);
        EXPECT_NEAR(m, k % 2 ? 0.0 : 2.0 / (k + 1), 1e-14) << k;
    }
}

TEST(Quadrature, NodesSorted) {
    for (const QuadratureRule& q : {gauss_hermite(16), gauss_laguerre(16, 0.2), gauss_legendre(16)})
        for (std::size_t i = 1; i < q.size(); ++i) EXPECT_LT(q.nodes[i - 1], q.nodes[i]);
}
