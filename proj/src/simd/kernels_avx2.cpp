// Compiled with -mavx2 -mfma on x86-64 only. Keep this file free of standard
// library headers so no inline template instantiated here leaks AVX2 code into
// the scalar path through the linker.
#include "tables.hpp"

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>

namespace fxvol::simd::detail {
namespace {

inline double hsum(__m256d v) {
    const __m128d lo = _mm256_castpd256_pd128(v);
    const __m128d hi = _mm256_extractf128_pd(v, 1);
    const __m128d s = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(_mm_add_sd(s, _mm_unpackhi_pd(s, s)));
}

double dot_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    if (i + 4 <= n) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double weighted_dot_avx2(const double* x, const double* y, const double* w, std::size_t n) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        const __m256d a0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
        const __m256d a1 = _mm256_mul_pd(_mm256_loadu_pd(w + i + 4), _mm256_loadu_pd(x + i + 4));
        acc0 = _mm256_fmadd_pd(a0, _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(a1, _mm256_loadu_pd(y + i + 4), acc1);
    }
    if (i + 4 <= n) {
        const __m256d a0 = _mm256_mul_pd(_mm256_loadu_pd(w + i), _mm256_loadu_pd(x + i));
        acc0 = _mm256_fmadd_pd(a0, _mm256_loadu_pd(y + i), acc0);
        i += 4;
    }
    double s = hsum(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

void axpy_avx2(double a, const double* x, double* y, std::size_t n) {
    const __m256d va = _mm256_set1_pd(a);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        _mm256_storeu_pd(y + i, _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i)));
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

double squared_distance_avx2(const double* x, const double* y, std::size_t n) {
    __m256d acc = _mm256_setzero_pd();
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        const __m256d d = _mm256_sub_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i));
        acc = _mm256_fmadd_pd(d, d, acc);
    }
    double s = hsum(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

const KernelTable kAvx2{Isa::Avx2, dot_avx2, weighted_dot_avx2, axpy_avx2, squared_distance_avx2};

}  // namespace

const KernelTable* avx2_table() noexcept { return &kAvx2; }

}  // namespace fxvol::simd::detail

#else

namespace fxvol::simd::detail {
const KernelTable* avx2_table() noexcept { return nullptr; }
}  // namespace fxvol::simd::detail

#endif
