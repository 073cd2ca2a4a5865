#pragma once

#include "fxvol/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace fxvol {

enum class BasisMethod { TFPCA, DFPCA, LFPCA, MFPCA_COMMON, MFPCA_SPECIFIC };

[[nodiscard]] std::string_view to_string(BasisMethod method) noexcept;
[[nodiscard]] BasisMethod basis_method_from_string(std::string_view name);

enum class KernelNormalization { LAG0, BARTLETT_LONGRUN, UNNORMALIZED_LR, NONSTATIONARY_SUM };

/// Discretised covariance kernel c(u, v) on the grid.
struct CovKernel {
    IntradayGrid grid;
    Matrix matrix;
    KernelNormalization normalization = KernelNormalization::LAG0;
};

/// K orthonormal functions (rows of `functions`) with their eigenvalues.
struct BasisSet {
    IntradayGrid grid;
    Matrix functions;                       // K x J
    std::vector<double> eigenvalues;        // descending, non-negative
    std::vector<double> variation_explained;
    BasisMethod method = BasisMethod::TFPCA;

    [[nodiscard]] std::size_t size() const noexcept { return static_cast<std::size_t>(functions.rows()); }
    [[nodiscard]] std::span<const double> function(std::size_t l) const noexcept {
        return {functions.data() + l * static_cast<std::size_t>(functions.cols()),
                static_cast<std::size_t>(functions.cols())};
    }
    /// Leading `k` functions.
    [[nodiscard]] BasisSet truncated(std::size_t k) const;
};

/// Output of the multi-level split y2_{j,t} = mu_c + mu_j + U_{c,t} + U_{j,t}.
struct MultiLevelDecomposition {
    Vector mu_common;
    std::vector<Vector> mu_specific;
    CurveSeries u_common;
    std::vector<CurveSeries> u_specific;
};

struct MfpcaResult {
    MultiLevelDecomposition decomposition;
    BasisSet common;
    std::vector<BasisSet> specific;  // may be empty sets when an asset has no specific variation
};

/// (1/N) sum_t x_t x_t^T of the demeaned curves.
[[nodiscard]] CovKernel lag0_covariance(const CurveSeries& series);

/// Bartlett long-run covariance sum_{|l| <= h} (1 - |l|/h) r_l on demeaned curves;
/// h = 0 gives exactly the lag-0 covariance.
[[nodiscard]] CovKernel bartlett_covariance(const CurveSeries& series, std::size_t bandwidth,
                                            KernelNormalization tag = KernelNormalization::BARTLETT_LONGRUN);

/// (1/N) sum_t y_t (x) y_t of the raw curves (no centring).
[[nodiscard]] CovKernel raw_second_moment(const CurveSeries& series);

/// Leading eigenpairs of the integral operator with kernel `kernel`.
///
/// Functions are orthonormal under the trapezoid quadrature and signed so that
/// their integral is positive (largest-magnitude value positive when the
/// integral vanishes). Shares are relative to the sum of all non-negative
/// eigenvalues. Throws DegenerateInputError for a zero kernel.
[[nodiscard]] BasisSet eigendecompose(const CovKernel& kernel, std::size_t max_k,
                                      BasisMethod method = BasisMethod::TFPCA);

/// argmin_{1 <= l <= l_bar} lambda_{l+1} / lambda_l, ties to the smallest l.
[[nodiscard]] std::size_t eigenvalue_ratio(std::span<const double> eigenvalues, std::size_t l_bar);

/// Truncate a basis to the dimension chosen by eigenvalue_ratio (l_bar clipped to size - 1).
[[nodiscard]] BasisSet select_dimension(const BasisSet& basis, std::size_t l_bar);

[[nodiscard]] BasisSet tfpca(const CurveSeries& squared, std::size_t max_k);
[[nodiscard]] BasisSet dfpca(const CurveSeries& squared, std::size_t max_k,
                             std::optional<std::size_t> bandwidth = std::nullopt);
[[nodiscard]] BasisSet lfpca(const CurveSeries& squared, std::size_t max_k, bool stationary,
                             std::optional<std::size_t> bandwidth = std::nullopt);

/// Multi-level FPCA over d aligned squared panels; K^c and K^j are each chosen by
/// eigenvalue_ratio with l_bar = max_k.
[[nodiscard]] MfpcaResult mfpca(std::span<const CurveSeries> panels, std::size_t max_k,
                                std::optional<std::size_t> bandwidth = std::nullopt);

[[nodiscard]] MultiLevelDecomposition multilevel_decompose(std::span<const CurveSeries> panels);

/// Concatenate bases on the same grid (used for the common + specific MFPCA pair).
[[nodiscard]] BasisSet concatenate(const BasisSet& first, const BasisSet& second);

}  // namespace fxvol
