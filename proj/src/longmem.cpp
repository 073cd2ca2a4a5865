#include "fxvol/longmem.hpp"

#include "fxvol/errors.hpp"
#include "fxvol/simd.hpp"
#include "fxvol/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <random>

namespace fxvol {

std::vector<double> periodogram(std::span<const double> series, std::size_t m) {
    const std::size_t n = series.size();
    const double mu = stats::mean(series);
    // exact twiddles from a table indexed by (j t) mod N
    std::vector<double> cs(n), sn(n);
    for (std::size_t k = 0; k < n; ++k) {
        const double ang = 2.0 * std::numbers::pi * static_cast<double>(k) / static_cast<double>(n);
        cs[k] = std::cos(ang);
        sn[k] = std::sin(ang);
    }
    std::vector<double> out(m);
    for (std::size_t j = 1; j <= m; ++j) {
        double re = 0.0;
        double im = 0.0;
        std::size_t idx = 0;
        for (std::size_t t = 0; t < n; ++t) {
            const double v = series[t] - mu;
            re += v * cs[idx];
            im -= v * sn[idx];
            idx += j;
            if (idx >= n) idx -= n;
        }
        out[j - 1] = (re * re + im * im) / (2.0 * std::numbers::pi * static_cast<double>(n));
    }
    return out;
}

double whittle_objective(std::span<const double> periodogram, std::span<const double> frequencies, double a) {
    const std::size_t m = periodogram.size();
    double g = 0.0;
    double logs = 0.0;
    for (std::size_t j = 0; j < m; ++j) {
        g += std::pow(frequencies[j], 2.0 * a) * periodogram[j];
        logs += std::log(frequencies[j]);
    }
    const double md = static_cast<double>(m);
    return std::log(g / md) - 2.0 * a * logs / md;
}

MemoryEstimate local_whittle(std::span<const double> series, std::optional<std::size_t> m) {
    const std::size_t n = series.size();
    if (n < 128) throw InsufficientDataError(fmt::format("local Whittle needs at least 128 observations, got {}", n));
    const auto [lo_it, hi_it] = std::minmax_element(series.begin(), series.end());
    if (*lo_it == *hi_it) throw DegenerateInputError("local Whittle on a constant series");
    const std::size_t bw = m.value_or(static_cast<std::size_t>(std::floor(std::pow(static_cast<double>(n), 0.65))));
    if (2 * bw >= n) throw InputError(fmt::format("bandwidth m = {} must be below N/2 = {}", bw, n / 2));
    if (bw < 2) throw InputError("local Whittle bandwidth must be at least 2");

    const auto I = periodogram(series, bw);
    for (double v : I) {
        if (!(v > 0.0)) throw DegenerateInputError("periodogram has a zero ordinate");
    }
    std::vector<double> lam(bw);
    for (std::size_t j = 0; j < bw; ++j) lam[j] = 2.0 * std::numbers::pi * static_cast<double>(j + 1) / static_cast<double>(n);

    // golden-section search
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = -0.49;
    double b = 1.49;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = whittle_objective(I, lam, c);
    double fd = whittle_objective(I, lam, d);
    while (b - a > 1e-6) {
        if (fc < fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = whittle_objective(I, lam, c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = whittle_objective(I, lam, d);
        }
    }
    const double a_hat = 0.5 * (a + b);
    return {a_hat, bw, whittle_objective(I, lam, a_hat)};
}

std::vector<double> fractional_noise(std::size_t n, double d, std::uint64_t seed) {
    const std::size_t lags = 2 * n;
    std::vector<double> coef(lags + 1);
    coef[0] = 1.0;
    for (std::size_t j = 1; j <= lags; ++j) coef[j] = coef[j - 1] * (static_cast<double>(j) - 1.0 + d) / static_cast<double>(j);
    std::reverse(coef.begin(), coef.end());  // coef[k] multiplies e_{t - lags + k}

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, 1.0);
    std::vector<double> e(n + lags);
    for (auto& v : e) v = z(rng);
    std::vector<double> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        out[t] = simd::dot(std::span<const double>(e).subspan(t, lags + 1), coef);
    }
    return out;
}

StationarityCheck kpss_level(std::span<const double> x, std::optional<std::size_t> lag) {
    const std::size_t n = x.size();
    if (n < 2) throw InsufficientDataError("KPSS needs at least two observations");
    const double mu = stats::mean(x);
    const double lrv = stats::newey_west_variance(x, lag.value_or(stats::cube_root_lag(n)));
    if (!(lrv > 0.0)) throw DegenerateInputError("KPSS on a series with zero long-run variance");
    double cum = 0.0;
    double ss = 0.0;
    for (double v : x) {
        cum += v - mu;
        ss += cum * cum;
    }
    const double nd = static_cast<double>(n);
    const double eta = ss / (nd * nd * lrv);

    static constexpr std::array<double, 4> crit{0.347, 0.463, 0.574, 0.739};
    static constexpr std::array<double, 4> pval{0.10, 0.05, 0.025, 0.01};
    double p = 0.0;
    if (eta <= crit.front()) {
        p = pval.front();
    } else if (eta >= crit.back()) {
        p = pval.back();
    } else {
        std::size_t k = 0;
        while (eta > crit[k + 1]) ++k;
        const double f = (eta - crit[k]) / (crit[k + 1] - crit[k]);
        p = pval[k] + f * (pval[k + 1] - pval[k]);
    }
    return {p >= 0.05, eta, p};
}

StationarityCheck score_stationarity_check(const CurveSeries& squared, std::span<const double> basis1) {
    if (squared.days() < 100) {
        throw InsufficientDataError(fmt::format("stationarity check needs at least 100 curves, got {}", squared.days()));
    }
    if (basis1.size() != squared.points()) throw ShapeError("basis function length differs from the grid");
    const auto w = squared.grid.weights();
    std::vector<double> z(squared.days());
    for (std::size_t t = 0; t < z.size(); ++t) z[t] = simd::weighted_dot(squared.row(t), basis1, w);
    const auto [lo, hi] = std::minmax_element(z.begin(), z.end());
    if (*lo == *hi) throw DegenerateInputError("stationarity check on constant scores");
    return kpss_level(z);
}

}  // namespace fxvol
