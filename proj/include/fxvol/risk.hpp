#pragma once

#include "fxvol/stats.hpp"
#include "fxvol/types.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol {

struct VaRCurve {
    double zeta = 0.01;
    Vector curve;
    std::string date;
};

enum class Side { LOWER, UPPER };

[[nodiscard]] std::string_view to_string(Side side) noexcept;

struct ViolationSeries {
    double zeta = 0.01;
    Matrix values;  // T x J of 0/1
    Side side = Side::LOWER;
    std::vector<std::string> dates;

    [[nodiscard]] std::size_t days() const noexcept { return static_cast<std::size_t>(values.rows()); }
};

/// Pointwise zeta-quantile of B whole residual curves drawn with replacement.
[[nodiscard]] Vector residual_quantile_curve(const CurveSeries& residuals, double zeta, std::size_t bootstrap_b,
                                             std::uint64_t seed);

[[nodiscard]] VaRCurve var_forecast(std::span<const double> sigma_forecast, std::span<const double> eps_quantile,
                                    double zeta, std::string date = {});

/// LOWER: 1{y < VaR}; UPPER: 1{y > VaR}.
[[nodiscard]] ViolationSeries violations(const CurveSeries& demeaned, std::span<const VaRCurve> var_curves, Side side);

/// Grid mean of each day's violation indicator.
[[nodiscard]] std::vector<double> exceedance_rates(const ViolationSeries& v);

struct BacktestResult {
    double statistic = 0.0;
    double pvalue = 1.0;
};

/// HAC z-test of mean exceedance rate == zeta.
[[nodiscard]] BacktestResult backtest_unbiasedness(const ViolationSeries& v);

/// Ljung-Box on the daily exceedance rates.
[[nodiscard]] std::vector<stats::PortmanteauResult> backtest_independence(const ViolationSeries& v,
                                                                          std::span<const std::size_t> lags);

}  // namespace fxvol
