#include <cmath>
#include <random>
#include <vector>

#include <boost/math/special_functions/erf.hpp>
#include <gtest/gtest.h>

#include "wdstop/simd/kernels.hpp"

using namespace wdstop;

namespace {

const simd::KernelTable& scalar() { return simd::scalar_kernels(); }

bool have_avx2() { return simd::avx2_kernels() != nullptr; }

std::vector<double> uniform(std::size_t n, double lo, double hi, unsigned seed) {
    std::mt19937_64 gen(seed);
    std::uniform_real_distribution<double> d(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = d(gen);
    return v;
}

double ulp_distance(double a, double b) {
    if (a == b) return 0.0;
    return std::abs(a - b) / std::abs(std::nextafter(a, INFINITY) - a);
}

}  // namespace

TEST(ScalarKernels, ExpMatchesLibm) {
    const auto in = uniform(1001, -700.0, 700.0, 1);
    std::vector<double> out(in.size());
    scalar().exp(in.data(), out.data(), in.size());
    for (std::size_t i = 0; i < in.size(); ++i) EXPECT_EQ(out[i], std::exp(in[i]));
}

TEST(ScalarKernels, InverseNormalAccuracy) {
    auto u = uniform(2000, 1e-12, 1.0 - 1e-12, 2);
    u.push_back(0x1.0p-54);
    u.push_back(0.5);
    std::vector<double> z(u.size());
    scalar().inverse_normal(u.data(), z.data(), u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
        const double exact = -std::sqrt(2.0) * boost::math::erfc_inv(2.0 * u[i]);
        EXPECT_NEAR(z[i], exact, 1.2e-9 * std::abs(exact) + 1e-15) << u[i];
    }
}

TEST(ScalarKernels, InverseNormalAntisymmetric) {
    const auto u = uniform(500, 1e-9, 0.5, 3);
    std::vector<double> v(u.size()), a(u.size()), b(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = 1.0 - u[i];
    scalar().inverse_normal(u.data(), a.data(), u.size());
    scalar().inverse_normal(v.data(), b.data(), u.size());
    for (std::size_t i = 0; i < u.size(); ++i) EXPECT_NEAR(a[i], -b[i], 1e-12 * (1 + std::abs(a[i])));
}

TEST(ScalarKernels, DiscountSumAndTrapezoid) {
    const std::vector<double> r{0.01, 0.5, 3.0}, w{0.2, 0.3, 0.5};
    EXPECT_DOUBLE_EQ(scalar().discount_sum(r.data(), w.data(), 3, 2.0),
                     0.2 * std::exp(-0.02) + 0.3 * std::exp(-1.0) + 0.5 * std::exp(-6.0));
    const std::vector<double> h{1, 2, 3, 4}, f{1, 1, 1, 2};
    EXPECT_DOUBLE_EQ(scalar().trapezoid(h.data(), f.data(), 3), 0.5 * 1 + 2 + 3 + 0.5 * 8);
}

TEST(ScalarKernels, FirstCrossing) {
    const std::vector<double> up{1.0, 0.5, -0.1, 0.3};
    const std::vector<double> uni{1.0, 1.0, 1.0};
    EXPECT_EQ(scalar().first_crossing(up.data(), nullptr, uni.data(), 3, 1.0), 1u);
    const std::vector<double> lo{0.5, 0.5, 0.5, -0.2};
    const std::vector<double> up2{1.0, 1.0, 1.0, 1.0};
    EXPECT_EQ(scalar().first_crossing(up2.data(), lo.data(), uni.data(), 3, 100.0), 2u);
    // Bridge probability exp(-c d0 d1) = exp(-0.25) exceeds a uniform of 0.5.
    const std::vector<double> near{0.5, 0.5};
    const std::vector<double> u05{0.5};
    EXPECT_EQ(scalar().first_crossing(near.data(), nullptr, u05.data(), 1, 1.0), 0u);
    EXPECT_EQ(scalar().first_crossing(near.data(), nullptr, u05.data(), 1, 10.0), 1u);
}

TEST(Avx2Equivalence, Exp) {
    if (!have_avx2()) GTEST_SKIP() << "AVX2 unavailable";
    const auto& v = *simd::avx2_kernels();
    for (std::size_t n : {0u, 1u, 3u, 4u, 7u, 64u, 1001u}) {
        auto in = uniform(n, -700.0, 700.0, 4 + static_cast<unsigned>(n));
        std::vector<double> a(n), b(n);
        scalar().exp(in.data(), a.data(), n);
        v.exp(in.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_LE(ulp_distance(a[i], b[i]), 4.0) << in[i];
    }
}

TEST(Avx2Equivalence, ExpExtremes) {
    if (!have_avx2()) GTEST_SKIP() << "AVX2 unavailable";
    const std::vector<double> in{-1000.0, -745.0, -708.0, 0.0, 1e-300, 709.0, 710.0, 1000.0};
    std::vector<double> a(in.size()), b(in.size());
    scalar().exp(in.data(), a.data(), in.size());
    simd::avx2_kernels()->exp(in.data(), b.data(), in.size());
    for (std::size_t i = 0; i < in.size(); ++i) {
        if (std::isinf(a[i])) {
            EXPECT_EQ(a[i], b[i]) << in[i];
        } else if (a[i] < 1e-300) {
            EXPECT_LT(std::abs(a[i] - b[i]), 1e-300) << in[i];
        } else {
            EXPECT_LE(ulp_distance(a[i], b[i]), 4.0) << in[i];
        }
    }
}

TEST(Avx2Equivalence, InverseNormal) {
    if (!have_avx2()) GTEST_SKIP() << "AVX2 unavailable";
    for (std::size_t n : {1u, 5u, 64u, 4099u}) {
        auto u = uniform(n, 1e-15, 1.0 - 1e-15, 9 + static_cast<unsigned>(n));
        u[0] = 0x1.0p-54;
        std::vector<double> a(n), b(n);
        scalar().inverse_normal(u.data(), a.data(), n);
        simd::avx2_kernels()->inverse_normal(u.data(), b.data(), n);
        for (std::size_t i = 0; i < n; ++i) EXPECT_NEAR(a[i], b[i], 1e-12 * (1 + std::abs(a[i]))) << u[i];
    }
}

TEST(Avx2Equivalence, Reductions) {
    if (!have_avx2()) GTEST_SKIP() << "AVX2 unavailable";
    const auto& v = *simd::avx2_kernels();
    for (std::size_t n : {1u, 2u, 5u, 8u, 63u, 200u}) {
        const auto r = uniform(n, 0.0, 5.0, 20 + static_cast<unsigned>(n));
        const auto w = uniform(n, 0.0, 1.0, 40 + static_cast<unsigned>(n));
        for (double t : {0.0, 0.1, 3.0, 50.0}) {
            const double a = scalar().discount_sum(r.data(), w.data(), n, t);
            const double b = v.discount_sum(r.data(), w.data(), n, t);
            EXPECT_NEAR(a, b, 1e-14 * (1 + std::abs(a)));
        }
        const auto h = uniform(n + 1, 0.0, 1.0, 60 + static_cast<unsigned>(n));
        const auto f = uniform(n + 1, -2.0, 2.0, 80 + static_cast<unsigned>(n));
        const double a = scalar().trapezoid(h.data(), f.data(), n);
        EXPECT_NEAR(a, v.trapezoid(h.data(), f.data(), n), 1e-13 * (1 + std::abs(a)));
    }
}

TEST(Avx2Equivalence, FirstCrossing) {
    if (!have_avx2()) GTEST_SKIP() << "AVX2 unavailable";
    const auto& v = *simd::avx2_kernels();
    std::mt19937_64 gen(7);
    std::normal_distribution<double> nd(0.0, 0.05);
    for (int trial = 0; trial < 500; ++trial) {
        const std::size_t n = 1 + static_cast<std::size_t>(trial % 70);
        std::vector<double> up(n + 1), lo(n + 1);
        double y = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            up[i] = 0.4 - y;
            lo[i] = y + 0.4;
            y += nd(gen);
        }
        const auto u = uniform(n, 0.0, 1.0, 100 + static_cast<unsigned>(trial));
        const bool two = trial % 2 == 0;
        EXPECT_EQ(scalar().first_crossing(up.data(), two ? lo.data() : nullptr, u.data(), n, 400.0),
                  v.first_crossing(up.data(), two ? lo.data() : nullptr, u.data(), n, 400.0))
            << "trial " << trial;
    }
}

TEST(Dispatch, ScalarOverride) {
    EXPECT_EQ(simd::kernels(simd::Backend::Scalar).backend, simd::Backend::Scalar);
    EXPECT_EQ(simd::backend_available(simd::Backend::Avx2), have_avx2());
    EXPECT_EQ(simd::backend_name(simd::Backend::Scalar), "scalar");
}
