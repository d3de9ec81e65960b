// Compiled with -mavx2 -mfma; only reached after a CPUID check.
#include "wdstop/simd/kernels.hpp"

#include <immintrin.h>

#include <cmath>

#include "inverse_normal_coeffs.hpp"

namespace wdstop::simd {
namespace {

// Cephes-style exp: x = n ln2 + r, |r| <= ln2/2, e^r by a (2,3) Pade form.
inline __m256d exp4(__m256d x) {
    const __m256d hi = _mm256_set1_pd(709.78);
    const __m256d lo = _mm256_set1_pd(-708.39);
    const __m256d overflow = _mm256_cmp_pd(x, hi, _CMP_GT_OQ);
    const __m256d underflow = _mm256_cmp_pd(x, lo, _CMP_LT_OQ);
    const __m256d nan_mask = _mm256_cmp_pd(x, x, _CMP_UNORD_Q);
    x = _mm256_min_pd(_mm256_max_pd(x, lo), hi);

    const __m256d n = _mm256_round_pd(_mm256_mul_pd(x, _mm256_set1_pd(1.4426950408889634073599)),
                                      _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    __m256d r = _mm256_fnmadd_pd(n, _mm256_set1_pd(6.93145751953125E-1), x);
    r = _mm256_fnmadd_pd(n, _mm256_set1_pd(1.42860682030941723212E-6), r);

    const __m256d rr = _mm256_mul_pd(r, r);
    __m256d p = _mm256_set1_pd(1.26177193074810590878E-4);
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(3.02994407707441961300E-2));
    p = _mm256_fmadd_pd(p, rr, _mm256_set1_pd(9.99999999999999999910E-1));
    p = _mm256_mul_pd(p, r);
    __m256d q = _mm256_set1_pd(3.00198505138664455042E-6);
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.52448340349684104192E-3));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.27265548208155028766E-1));
    q = _mm256_fmadd_pd(q, rr, _mm256_set1_pd(2.00000000000000000009E0));
    __m256d e = _mm256_div_pd(p, _mm256_sub_pd(q, p));
    e = _mm256_fmadd_pd(e, _mm256_set1_pd(2.0), _mm256_set1_pd(1.0));

    // 2^n via the exponent field. n is in [-1022, 1024]; split the scale in two
    // halves so subnormal results and n = 1024 stay representable.
    const __m256d half_n = _mm256_round_pd(_mm256_mul_pd(n, _mm256_set1_pd(0.5)),
                                           _MM_FROUND_TO_NEG_INF | _MM_FROUND_NO_EXC);
    const __m256d other = _mm256_sub_pd(n, half_n);
    const __m256d magic = _mm256_set1_pd(6755399441055744.0);  // 1.5 * 2^52
    auto pow2 = [&](__m256d k) {
        __m256i bits = _mm256_castpd_si256(_mm256_add_pd(k, magic));
        bits = _mm256_add_epi64(bits, _mm256_set1_epi64x(1023));
        return _mm256_castsi256_pd(_mm256_slli_epi64(bits, 52));
    };
    e = _mm256_mul_pd(_mm256_mul_pd(e, pow2(half_n)), pow2(other));

    e = _mm256_blendv_pd(e, _mm256_set1_pd(HUGE_VAL), overflow);
    e = _mm256_blendv_pd(e, _mm256_setzero_pd(), underflow);
    e = _mm256_blendv_pd(e, _mm256_set1_pd(NAN), nan_mask);
    return e;
}

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

void exp_avx2(const double* in, double* out, std::size_t n) {
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) _mm256_storeu_pd(out + i, exp4(_mm256_loadu_pd(in + i)));
    for (; i < n; ++i) out[i] = std::exp(in[i]);
}

void inverse_normal_avx2(const double* u, double* z, std::size_t n) {
    using namespace detail;
    const __m256d plow = _mm256_set1_pd(kPLow);
    const __m256d phigh = _mm256_set1_pd(1.0 - kPLow);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d one = _mm256_set1_pd(1.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d p = _mm256_loadu_pd(u + i);
        const __m256d q = _mm256_sub_pd(p, half);
        const __m256d r = _mm256_mul_pd(q, q);
        __m256d num = _mm256_set1_pd(kA[0]);
        for (int k = 1; k < 6; ++k) num = _mm256_fmadd_pd(num, r, _mm256_set1_pd(kA[k]));
        num = _mm256_mul_pd(num, q);
        __m256d den = _mm256_set1_pd(kB[0]);
        for (int k = 1; k < 5; ++k) den = _mm256_fmadd_pd(den, r, _mm256_set1_pd(kB[k]));
        den = _mm256_fmadd_pd(den, r, one);
        _mm256_storeu_pd(z + i, _mm256_div_pd(num, den));

        const __m256d tail = _mm256_or_pd(_mm256_cmp_pd(p, plow, _CMP_LT_OQ),
                                          _mm256_cmp_pd(p, phigh, _CMP_GT_OQ));
        const int mask = _mm256_movemask_pd(tail);
        if (mask != 0) {
            for (int lane = 0; lane < 4; ++lane) {
                if ((mask & (1 << lane)) == 0) continue;
                const double pl = u[i + lane];
                z[i + lane] = pl < kPLow ? inverse_normal_tail(pl) : -inverse_normal_tail(1.0 - pl);
            }
        }
    }
    for (; i < n; ++i) {
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

double discount_sum_avx2(const double* rates, const double* weights, std::size_t n, double t) {
    const __m256d neg_t = _mm256_set1_pd(-t);
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d e = exp4(_mm256_mul_pd(_mm256_loadu_pd(rates + i), neg_t));
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(weights + i), e, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) s += weights[i] * std::exp(-rates[i] * t);
    return s;
}

double trapezoid_avx2(const double* h, const double* f, std::size_t n) {
    if (n == 0) return 0.0;
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 1;
    for (; i + 4 <= n; i += 4)
        acc = _mm256_fmadd_pd(_mm256_loadu_pd(h + i), _mm256_loadu_pd(f + i), acc);
    double s = hsum(acc);
    for (; i < n; ++i) s += h[i] * f[i];
    return s + 0.5 * (h[0] * f[0] + h[n] * f[n]);
}

std::size_t first_crossing_avx2(const double* upper, const double* lower, const double* uniforms,
                                std::size_t n, double c) {
    const __m256d zero = _mm256_setzero_pd();
    const __m256d neg_c = _mm256_set1_pd(-c);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d0 = _mm256_loadu_pd(upper + i);
        const __m256d d1 = _mm256_loadu_pd(upper + i + 1);
        __m256d hit = _mm256_cmp_pd(d1, zero, _CMP_LE_OQ);
        __m256d p = exp4(_mm256_mul_pd(neg_c, _mm256_mul_pd(d0, d1)));
        if (lower != nullptr) {
            const __m256d l0 = _mm256_loadu_pd(lower + i);
            const __m256d l1 = _mm256_loadu_pd(lower + i + 1);
            hit = _mm256_or_pd(hit, _mm256_cmp_pd(l1, zero, _CMP_LE_OQ));
            p = _mm256_add_pd(p, exp4(_mm256_mul_pd(neg_c, _mm256_mul_pd(l0, l1))));
        }
        hit = _mm256_or_pd(hit, _mm256_cmp_pd(_mm256_loadu_pd(uniforms + i), p, _CMP_LT_OQ));
        const int mask = _mm256_movemask_pd(hit);
        if (mask != 0) return i + static_cast<std::size_t>(__builtin_ctz(static_cast<unsigned>(mask)));
    }
    for (; i < n; ++i) {
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

const KernelTable* avx2_kernels() {
    static const KernelTable table{Backend::Avx2,     exp_avx2,       inverse_normal_avx2,
                                   discount_sum_avx2, trapezoid_avx2, first_crossing_avx2};
    __builtin_cpu_init();
    if (!__builtin_cpu_supports("avx2") || !__builtin_cpu_supports("fma")) return nullptr;
    return &table;
}

}  // namespace wdstop::simd
