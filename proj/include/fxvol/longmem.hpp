#pragma once

#include "fxvol/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace fxvol {

struct MemoryEstimate {
    double a_hat = 0.0;
    std::size_t bandwidth_m = 0;
    double objective_value = 0.0;
};

/// Local Whittle estimate of the memory parameter over a in [-0.49, 1.49].
/// Default bandwidth m = floor(N^0.65).
[[nodiscard]] MemoryEstimate local_whittle(std::span<const double> series, std::optional<std::size_t> m = std::nullopt);

/// Local Whittle criterion R(a) on the first m Fourier frequencies (exposed for tests).
[[nodiscard]] double whittle_objective(std::span<const double> periodogram, std::span<const double> frequencies,
                                       double a);

/// Periodogram I(lambda_j) = |sum_t x_t e^{-i lambda_j t}|^2 / (2 pi N) at lambda_j = 2 pi j / N, j = 1..m,
/// after removing the sample mean.
[[nodiscard]] std::vector<double> periodogram(std::span<const double> series, std::size_t m);

/// Fractionally integrated Gaussian noise of order d from a truncated MA(infinity)
/// with 2n lags.
[[nodiscard]] std::vector<double> fractional_noise(std::size_t n, double d, std::uint64_t seed);

struct StationarityCheck {
    bool stationary = true;
    double statistic = 0.0;
    double pvalue = 1.0;
};

/// KPSS level statistic with an interpolated p-value (clipped to [0.01, 0.10]).
[[nodiscard]] StationarityCheck kpss_level(std::span<const double> x, std::optional<std::size_t> lag = std::nullopt);

/// KPSS check on the scores <y2_t, basis1>; stationary when the p-value is at least 0.05.
[[nodiscard]] StationarityCheck score_stationarity_check(const CurveSeries& squared, std::span<const double> basis1);

}  // namespace fxvol
