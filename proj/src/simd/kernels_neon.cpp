#include "tables.hpp"

#if defined(__aarch64__) && defined(__ARM_NEON)
#include <arm_neon.h>

namespace fxvol::simd::detail {
namespace {

double dot_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc0 = vdupq_n_f64(0.0);
    float64x2_t acc1 = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        acc0 = vfmaq_f64(acc0, vld1q_f64(x + i), vld1q_f64(y + i));
        acc1 = vfmaq_f64(acc1, vld1q_f64(x + i + 2), vld1q_f64(y + i + 2));
    }
    double s = vaddvq_f64(vaddq_f64(acc0, acc1));
    for (; i < n; ++i) s += x[i] * y[i];
    return s;
}

double weighted_dot_neon(const double* x, const double* y, const double* w, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        acc = vfmaq_f64(acc, vmulq_f64(vld1q_f64(w + i), vld1q_f64(x + i)), vld1q_f64(y + i));
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

void axpy_neon(double a, const double* x, double* y, std::size_t n) {
    const float64x2_t va = vdupq_n_f64(a);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) vst1q_f64(y + i, vfmaq_f64(vld1q_f64(y + i), va, vld1q_f64(x + i)));
    for (; i < n; ++i) y[i] += a * x[i];
}

double squared_distance_neon(const double* x, const double* y, std::size_t n) {
    float64x2_t acc = vdupq_n_f64(0.0);
    std::size_t i = 0;
    for (; i + 2 <= n; i += 2) {
        const float64x2_t d = vsubq_f64(vld1q_f64(x + i), vld1q_f64(y + i));
        acc = vfmaq_f64(acc, d, d);
    }
    double s = vaddvq_f64(acc);
    for (; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

const KernelTable kNeon{Isa::Neon, dot_neon, weighted_dot_neon, axpy_neon, squared_distance_neon};

}  // namespace

const KernelTable* neon_table() noexcept { return &kNeon; }

}  // namespace fxvol::simd::detail

#else

namespace fxvol::simd::detail {
const KernelTable* neon_table() noexcept { return nullptr; }
}  // namespace fxvol::simd::detail

#endif
