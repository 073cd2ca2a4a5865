#include "fxvol/diagnostics.hpp"

#include "fxvol/errors.hpp"
#include "fxvol/stats.hpp"

#include <fmt/format.h>

#include <algorithm>

namespace fxvol {
namespace {

// Weighted squared Hilbert-Schmidt norm of a discretised kernel.
double hs_norm2(const Matrix& k, const Vector& w) {
    return (w.transpose() * k.cwiseAbs2() * w)(0, 0);
}

DiagnosticsReport portmanteau(Matrix x, const IntradayGrid& grid, std::span<const std::size_t> lags,
                              DiagnosticTest test) {
    if (lags.empty()) throw InputError("diagnostic test needs at least one lag");
    for (auto h : lags) {
        if (h == 0) throw InputError("diagnostic lags must be positive");
    }
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    const auto N = static_cast<std::size_t>(x.rows());
    if (N <= max_lag + 10) {
        throw InsufficientDataError(fmt::format("diagnostic test needs N > {}, got {}", max_lag + 10, N));
    }
    x.rowwise() -= x.colwise().mean();
    const Vector w = Eigen::Map<const Vector>(grid.weights().data(), static_cast<Eigen::Index>(grid.size()));
    const double n = static_cast<double>(N);

    const Matrix c0 = (x.transpose() * x) / n;
    const double norm0 = hs_norm2(c0, w);
    const double scale = x.cwiseAbs().maxCoeff();
    if (!(norm0 > 0.0) || !(scale > 0.0)) throw DegenerateInputError("diagnostic test on a constant curve series");
    const double trace = c0.diagonal().dot(w);
    const double kappa = trace * trace / norm0;

    std::vector<double> cumulative(max_lag + 1, 0.0);
    const auto rows = static_cast<Eigen::Index>(N);
    for (std::size_t h = 1; h <= max_lag; ++h) {
        const auto lag = static_cast<Eigen::Index>(h);
        const Matrix ch = (x.topRows(rows - lag).transpose() * x.bottomRows(rows - lag)) / n;
        // n / (n - h) undoes the shrinkage of lag-h products, as in Ljung-Box
        cumulative[h] = cumulative[h - 1] + n / (n - static_cast<double>(h)) * hs_norm2(ch, w) / norm0;
    }

    DiagnosticsReport out;
    out.test = test;
    out.kappa = kappa;
    for (auto h : lags) {
        const double q = n * cumulative[h];
        out.lags.push_back(h);
        out.statistics.push_back(q);
        out.pvalues.push_back(stats::chi_square_sf(kappa * q, static_cast<double>(h) * kappa * kappa));
    }
    return out;
}

}  // namespace

std::string_view to_string(DiagnosticTest test) noexcept {
    return test == DiagnosticTest::AUTOCORR ? "AUTOCORR" : "HETERO";
}

DiagnosticsReport autocorr_test(const CurveSeries& series, std::span<const std::size_t> lags) {
    return portmanteau(series.values, series.grid, lags, DiagnosticTest::AUTOCORR);
}

DiagnosticsReport hetero_test(const CurveSeries& series, std::span<const std::size_t> lags) {
    return portmanteau(series.values.cwiseAbs2(), series.grid, lags, DiagnosticTest::HETERO);
}

}  // namespace fxvol
