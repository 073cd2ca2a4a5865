#pragma once

// Data-parallel inner loops used by the covariance, projection and loss code.
//
// Every kernel has a scalar reference implementation; vector variants (AVX2+FMA
// on x86-64, NEON on AArch64) are selected once per process at first use.
// Setting FXVOL_SIMD=scalar in the environment forces the reference path.

#include <cstddef>
#include <span>
#include <string_view>

namespace fxvol::simd {

enum class Isa { Scalar, Avx2, Neon };

[[nodiscard]] std::string_view to_string(Isa isa) noexcept;

/// Raw kernel entry points. Lengths are element counts; pointers may be unaligned.
struct KernelTable {
    Isa isa;
    double (*dot)(const double* x, const double* y, std::size_t n);
    double (*weighted_dot)(const double* x, const double* y, const double* w, std::size_t n);
    void (*axpy)(double a, const double* x, double* y, std::size_t n);
    double (*squared_distance)(const double* x, const double* y, std::size_t n);
};

[[nodiscard]] const KernelTable& scalar_kernels() noexcept;

/// Vector table for the given ISA, or nullptr if it was not compiled in or the
/// CPU lacks the instructions.
[[nodiscard]] const KernelTable* kernels_for(Isa isa) noexcept;

/// The table every dispatched call below goes through.
[[nodiscard]] const KernelTable& active() noexcept;

/// Test hook: switch the active table. Returns false if `isa` is unavailable.
bool force(Isa isa) noexcept;

double dot(std::span<const double> x, std::span<const double> y);

/// Sum_j w_j x_j y_j, the quadrature inner product on an intraday grid.
double weighted_dot(std::span<const double> x, std::span<const double> y, std::span<const double> w);

/// y += a * x
void axpy(double a, std::span<const double> x, std::span<double> y);

double squared_distance(std::span<const double> x, std::span<const double> y);

/// out(i, :) += alpha * x(i) * z(:) for a row-major x.size() by z.size() block.
void rank1_update(double alpha, std::span<const double> x, std::span<const double> z, std::span<double> out);

}  // namespace fxvol::simd
