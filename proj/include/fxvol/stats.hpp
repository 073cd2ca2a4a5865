#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace fxvol::stats {

[[nodiscard]] double mean(std::span<const double> x);

/// Sample variance with the n - 1 divisor.
[[nodiscard]] double sample_variance(std::span<const double> x);

/// Autocovariance at `lag` with the 1/n divisor, around the sample mean.
[[nodiscard]] double autocovariance(std::span<const double> x, std::size_t lag);

/// Newey-West long-run variance: gamma_0 + 2 sum_{l=1..q} (1 - l/(q+1)) gamma_l.
[[nodiscard]] double newey_west_variance(std::span<const double> x, std::size_t q);

/// floor(n^(1/3)), the default truncation lag used throughout.
[[nodiscard]] std::size_t cube_root_lag(std::size_t n);

[[nodiscard]] double normal_cdf(double z);

/// Two-sided p-value of a standard normal statistic; infinite statistics give 0.
[[nodiscard]] double two_sided_normal_pvalue(double z);

/// Upper tail of the chi-square distribution; `dof` may be fractional.
[[nodiscard]] double chi_square_sf(double x, double dof);

struct PortmanteauResult {
    std::size_t lag;
    double statistic;
    double pvalue;
};

/// Ljung-Box Q at each requested lag with chi-square(H) p-values.
[[nodiscard]] std::vector<PortmanteauResult> ljung_box(std::span<const double> x, std::span<const std::size_t> lags);

/// Linear interpolation between order statistics (Hyndman-Fan type 7) of a sorted sample.
[[nodiscard]] double quantile_sorted(std::span<const double> sorted, double p);

/// Seed for the k-th independent stream derived from a user seed (SplitMix64 mixing).
[[nodiscard]] std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept;

}  // namespace fxvol::stats
