#pragma once

// Data-parallel inner loops used by the quadrature and Monte Carlo engines.
//
// Every kernel has a scalar reference implementation and an AVX2+FMA variant.
// The variant is chosen once at startup from CPUID; WDSTOP_SIMD=scalar forces
// the reference path. Variants are not bit-identical: reductions are
// reassociated and exp/log use polynomials. exp agrees within 4 ulp, the
// normal quantile within 1e-12 relative, reductions within 1e-13 relative.

#include <cstddef>
#include <span>
#include <string_view>

namespace wdstop::simd {

enum class Backend { Scalar, Avx2 };

struct KernelTable {
    Backend backend;
    // out[i] = exp(in[i]); in and out may alias.
    void (*exp)(const double* in, double* out, std::size_t n);
    // z[i] = Phi^{-1}(u[i]) for u in (0,1); antisymmetric in u -> 1-u.
    void (*inverse_normal)(const double* u, double* z, std::size_t n);
    // sum_i weights[i] * exp(-rates[i] * t)
    double (*discount_sum)(const double* rates, const double* weights, std::size_t n, double t);
    // 0.5*h0*f0 + sum_{0<i<n} h_i f_i + 0.5*h_n f_n over arrays of length n+1
    double (*trapezoid)(const double* h, const double* f, std::size_t n);
    // First step i in [0, n) that reaches a barrier, or n. Step i goes from
    // point i to point i+1. upper[k] (and lower[k] when non-null) are log
    // distances to the barrier, positive inside the continuation gap. The step
    // crosses when the endpoint distance is <= 0 or when the Brownian-bridge
    // crossing probability exp(-c*d_i*d_{i+1}) exceeds uniforms[i].
    std::size_t (*first_crossing)(const double* upper, const double* lower,
                                  const double* uniforms, std::size_t n, double c);
};

const KernelTable& scalar_kernels();
/// Null when the binary or the CPU lacks AVX2/FMA.
const KernelTable* avx2_kernels();

bool backend_available(Backend b);
/// The dispatch target, chosen once per process.
const KernelTable& kernels();
/// A specific backend; throws InvalidArgument when unavailable.
const KernelTable& kernels(Backend b);
std::string_view backend_name(Backend b);

inline void exp(std::span<const double> in, std::span<double> out) {
    kernels().exp(in.data(), out.data(), in.size());
}

inline double discount_sum(std::span<const double> rates, std::span<const double> weights, double t) {
    return kernels().discount_sum(rates.data(), weights.data(), rates.size(), t);
}

}  // namespace wdstop::simd
