#include "fxvol/stats.hpp"

#include "fxvol/errors.hpp"

#include <boost/math/distributions/chi_squared.hpp>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace fxvol::stats {

double mean(std::span<const double> x) {
    if (x.empty()) throw InsufficientDataError("mean of an empty sample");
    return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double sample_variance(std::span<const double> x) {
    if (x.size() < 2) throw InsufficientDataError("variance needs at least two observations");
    const double m = mean(x);
    double s = 0.0;
    for (double v : x) s += (v - m) * (v - m);
    return s / static_cast<double>(x.size() - 1);
}

double autocovariance(std::span<const double> x, std::size_t lag) {
    const std::size_t n = x.size();
    if (lag >= n) return 0.0;
    const double m = mean(x);
    double s = 0.0;
    for (std::size_t t = 0; t + lag < n; ++t) s += (x[t] - m) * (x[t + lag] - m);
    return s / static_cast<double>(n);
}

double newey_west_variance(std::span<const double> x, std::size_t q) {
    double v = autocovariance(x, 0);
    for (std::size_t l = 1; l <= q && l < x.size(); ++l) {
        const double w = 1.0 - static_cast<double>(l) / static_cast<double>(q + 1);
        v += 2.0 * w * autocovariance(x, l);
    }
    return v;
}

std::size_t cube_root_lag(std::size_t n) {
    auto h = static_cast<std::size_t>(std::floor(std::cbrt(static_cast<double>(n))));
    // cbrt of a perfect cube can land a hair below the integer
    while ((h + 1) * (h + 1) * (h + 1) <= n) ++h;
    return h;
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

double two_sided_normal_pvalue(double z) {
    if (std::isnan(z)) throw NumericError("normal p-value of NaN statistic");
    if (std::isinf(z)) return 0.0;
    return std::min(1.0, std::erfc(std::fabs(z) / std::sqrt(2.0)));
}

double chi_square_sf(double x, double dof) {
    if (!(dof > 0.0)) throw InputError("chi-square degrees of freedom must be positive");
    if (std::isnan(x)) throw NumericError("chi-square p-value of NaN statistic");
    if (x <= 0.0) return 1.0;
    if (std::isinf(x)) return 0.0;
    const boost::math::chi_squared dist(dof);
    return boost::math::cdf(boost::math::complement(dist, x));
}

std::vector<PortmanteauResult> ljung_box(std::span<const double> x, std::span<const std::size_t> lags) {
    const std::size_t n = x.size();
    if (lags.empty()) throw InputError("Ljung-Box needs at least one lag");
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    for (auto h : lags) {
        if (h == 0) throw InputError("Ljung-Box lags must be positive");
    }
    if (n <= max_lag + 1) throw InsufficientDataError("Ljung-Box sample shorter than the largest lag");
    const double g0 = autocovariance(x, 0);
    if (!(g0 > 0.0)) throw DegenerateInputError("Ljung-Box on a constant series");

    std::vector<double> cumulative(max_lag + 1, 0.0);
    const double nn = static_cast<double>(n);
    for (std::size_t k = 1; k <= max_lag; ++k) {
        const double rho = autocovariance(x, k) / g0;
        cumulative[k] = cumulative[k - 1] + rho * rho / (nn - static_cast<double>(k));
    }
    std::vector<PortmanteauResult> out;
    out.reserve(lags.size());
    for (auto h : lags) {
        const double q = nn * (nn + 2.0) * cumulative[h];
        out.push_back({h, q, chi_square_sf(q, static_cast<double>(h))});
    }
    return out;
}

double quantile_sorted(std::span<const double> sorted, double p) {
    if (sorted.empty()) throw InsufficientDataError("quantile of an empty sample");
    if (!(p >= 0.0 && p <= 1.0)) throw InputError(fmt::format("quantile level {} outside [0, 1]", p));
    const double h = p * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    const double frac = h - static_cast<double>(lo);
    return sorted[lo] + frac * (sorted[hi] - sorted[lo]);
}

std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) noexcept {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

}  // namespace fxvol::stats
