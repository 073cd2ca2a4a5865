#include "fxvol/risk.hpp"

#include "fxvol/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fxvol {

std::string_view to_string(Side side) noexcept { return side == Side::LOWER ? "LOWER" : "UPPER"; }

Vector residual_quantile_curve(const CurveSeries& residuals, double zeta, std::size_t bootstrap_b,
                               std::uint64_t seed) {
    if (!(zeta > 0.0 && zeta < 1.0)) throw InputError("zeta must lie in (0, 1)");
    if (bootstrap_b < 1000) throw InputError(fmt::format("bootstrap needs B >= 1000, got {}", bootstrap_b));
    const std::size_t N = residuals.days();
    if (N < 50) throw InsufficientDataError(fmt::format("residual bootstrap needs N >= 50, got {}", N));
    const std::size_t J = residuals.points();

    // Draw B curve indices; only the multiplicity of each curve matters for the
    // order statistics, so the quantile is read off the weighted sorted sample.
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, N - 1);
    std::vector<std::size_t> count(N, 0);
    for (std::size_t b = 0; b < bootstrap_b; ++b) ++count[pick(rng)];

    const double h = zeta * static_cast<double>(bootstrap_b - 1);
    const auto lo = static_cast<std::size_t>(std::floor(h));
    const std::size_t hi = std::min(lo + 1, bootstrap_b - 1);
    const double frac = h - static_cast<double>(lo);

    std::vector<std::pair<double, std::size_t>> col;
    col.reserve(N);
    Vector out(static_cast<Eigen::Index>(J));
    for (std::size_t j = 0; j < J; ++j) {
        col.clear();
        for (std::size_t t = 0; t < N; ++t) {
            if (count[t] > 0) col.emplace_back(residuals.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)), count[t]);
        }
        std::sort(col.begin(), col.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        // k-th order statistic (0-based) of the expanded sample
        auto order_stat = [&](std::size_t k) {
            std::size_t cum = 0;
            for (const auto& [v, c] : col) {
                cum += c;
                if (k < cum) return v;
            }
            return col.back().first;
        };
        const double a = order_stat(lo);
        const double b = order_stat(hi);
        out[static_cast<Eigen::Index>(j)] = a + frac * (b - a);
    }
    return out;
}

VaRCurve var_forecast(std::span<const double> sigma_forecast, std::span<const double> eps_quantile, double zeta,
                      std::string date) {
    if (sigma_forecast.size() != eps_quantile.size()) {
        throw ShapeError(fmt::format("sigma has {} points but the quantile curve has {}", sigma_forecast.size(),
                                     eps_quantile.size()));
    }
    VaRCurve out{zeta, Vector(static_cast<Eigen::Index>(sigma_forecast.size())), std::move(date)};
    for (std::size_t j = 0; j < sigma_forecast.size(); ++j) {
        if (!(sigma_forecast[j] > 0.0)) throw DomainError("volatility forecast must be positive");
        out.curve[static_cast<Eigen::Index>(j)] = sigma_forecast[j] * eps_quantile[j];
    }
    return out;
}

ViolationSeries violations(const CurveSeries& demeaned, std::span<const VaRCurve> var_curves, Side side) {
    if (var_curves.size() != demeaned.days()) {
        throw AlignmentError(fmt::format("{} return curves but {} VaR curves", demeaned.days(), var_curves.size()));
    }
    const std::size_t J = demeaned.points();
    ViolationSeries out;
    out.side = side;
    out.zeta = var_curves.empty() ? 0.0 : var_curves.front().zeta;
    out.dates = demeaned.dates;
    out.values = Matrix::Zero(static_cast<Eigen::Index>(demeaned.days()), static_cast<Eigen::Index>(J));
    for (std::size_t t = 0; t < demeaned.days(); ++t) {
        const auto& v = var_curves[t];
        if (static_cast<std::size_t>(v.curve.size()) != J) throw AlignmentError("VaR curve grid differs from returns");
        if (!v.date.empty() && v.date != demeaned.dates[t]) {
            throw AlignmentError(fmt::format("VaR curve dated {} aligned with return day {}", v.date, demeaned.dates[t]));
        }
        const auto y = demeaned.row(t);
        for (std::size_t j = 0; j < J; ++j) {
            const double q = v.curve[static_cast<Eigen::Index>(j)];
            const bool hit = side == Side::LOWER ? y[j] < q : y[j] > q;
            out.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) = hit ? 1.0 : 0.0;
        }
    }
    return out;
}

std::vector<double> exceedance_rates(const ViolationSeries& v) {
    std::vector<double> p(v.days());
    for (std::size_t t = 0; t < v.days(); ++t) p[t] = v.values.row(static_cast<Eigen::Index>(t)).mean();
    return p;
}

BacktestResult backtest_unbiasedness(const ViolationSeries& v) {
    const std::size_t T = v.days();
    if (T < 100) throw InsufficientDataError(fmt::format("unbiasedness backtest needs T >= 100, got {}", T));
    const auto p = exceedance_rates(v);
    const double gap = stats::mean(p) - v.zeta;
    const double lrv = stats::newey_west_variance(p, stats::cube_root_lag(T));
    if (!(lrv > 0.0)) {
        // constant exceedance rate: exact answer without sampling noise
        if (gap == 0.0) return {0.0, 1.0};
        return {std::copysign(std::numeric_limits<double>::infinity(), gap), 0.0};
    }
    const double stat = std::sqrt(static_cast<double>(T)) * gap / std::sqrt(lrv);
    return {stat, stats::two_sided_normal_pvalue(stat)};
}

std::vector<stats::PortmanteauResult> backtest_independence(const ViolationSeries& v,
                                                            std::span<const std::size_t> lags) {
    if (lags.empty()) throw InputError("independence backtest needs at least one lag");
    const std::size_t max_lag = *std::max_element(lags.begin(), lags.end());
    if (v.days() <= max_lag + 10) {
        throw InsufficientDataError(fmt::format("independence backtest needs T > {}, got {}", max_lag + 10, v.days()));
    }
    const auto p = exceedance_rates(v);
    return stats::ljung_box(p, lags);
}

}  // namespace fxvol
