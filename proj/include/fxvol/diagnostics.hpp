#pragma once

#include "fxvol/types.hpp"

#include <cstddef>
#include <span>
#include <string_view>
#include <vector>

namespace fxvol {

enum class DiagnosticTest { AUTOCORR, HETERO };

[[nodiscard]] std::string_view to_string(DiagnosticTest test) noexcept;

struct DiagnosticsReport {
    DiagnosticTest test = DiagnosticTest::AUTOCORR;
    std::vector<std::size_t> lags;
    std::vector<double> statistics;
    std::vector<double> pvalues;
    double kappa = 1.0;  // (tr C)^2 / ||C||^2_HS of the lag-0 covariance
};

/// Portmanteau Q_H = N sum_{h<=H} N/(N-h) ||r_h||^2 / ||r_0||^2 on the demeaned curves.
///
/// Under independence N||r_h||^2 is a weighted sum of chi-square(1) terms with
/// weights lambda_i lambda_j, so kappa Q_H is referred to chi-square(H kappa^2)
/// (two-moment match); kappa = 1 for a rank-one covariance gives chi-square(H).
[[nodiscard]] DiagnosticsReport autocorr_test(const CurveSeries& series, std::span<const std::size_t> lags);

/// autocorr_test on the centred squared curves.
[[nodiscard]] DiagnosticsReport hetero_test(const CurveSeries& series, std::span<const std::size_t> lags);

inline constexpr std::size_t kDefaultDiagnosticLags[] = {1, 5, 10, 20};

}  // namespace fxvol
