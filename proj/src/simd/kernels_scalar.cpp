#include "fxvol/simd.hpp"

namespace fxvol::simd {
namespace {

double dot_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x[i] * y[i];
    return s;
}

double weighted_dot_scalar(const double* x, const double* y, const double* w, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += w[i] * x[i] * y[i];
    return s;
}

void axpy_scalar(double a, const double* x, double* y, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

double squared_distance_scalar(const double* x, const double* y, std::size_t n) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = x[i] - y[i];
        s += d * d;
    }
    return s;
}

}  // namespace

const KernelTable& scalar_kernels() noexcept {
    static const KernelTable table{Isa::Scalar, dot_scalar, weighted_dot_scalar, axpy_scalar,
                                   squared_distance_scalar};
    return table;
}

}  // namespace fxvol::simd
