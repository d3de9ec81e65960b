#include "wdstop/simd/kernels.hpp"

#include <cmath>

#include "inverse_normal_coeffs.hpp"

namespace wdstop::simd {
namespace {

void exp_scalar(const double* in, double* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) out[i] = std::exp(in[i]);
}

void inverse_normal_scalar(const double* u, double* z, std::size_t n) {
    using namespace detail;
    for (std::size_t i = 0; i < n; ++i) {
        const double p = u[i];
        if (p < kPLow) {
            z[i] = inverse_normal_tail(p);
        } else if (p > 1.0 - kPLow) {
            z[i] = -inverse_normal_tail(1.0 - p);
        } else {
            z[i] = inverse_normal_central(p - 0.5);
        }
    }
}

double discount_sum_scalar(const double* rates, const double* weights, std::size_t n, double t) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += weights[i] * std::exp(-rates[i] * t);
    return s;
}

double trapezoid_scalar(const double* h, const double* f, std::size_t n) {
    if (n == 0) return 0.0;
    double s = 0.5 * (h[0] * f[0] + h[n] * f[n]);
    for (std::size_t i = 1; i < n; ++i) s += h[i] * f[i];
    return s;
}

std::size_t first_crossing_scalar(const double* upper, const double* lower, const double* uniforms,
                                  std::size_t n, double c) {
    for (std::size_t i = 0; i < n; ++i) {
        if (upper[i + 1] <= 0.0) return i;
        double p = std::exp(-c * upper[i] * upper[i + 1]);
        if (lower != nullptr) {
            if (lower[i + 1] <= 0.0) return i;
            p += std::exp(-c * lower[i] * lower[i + 1]);
        }
        if (uniforms[i] < p) return i;
    }
    return n;
}

}  // namespace

const KernelTable& scalar_kernels() {
    static const KernelTable table{Backend::Scalar,     exp_scalar,       inverse_normal_scalar,
                                   discount_sum_scalar, trapezoid_scalar, first_crossing_scalar};
    return table;
}

}  // namespace wdstop::simd
