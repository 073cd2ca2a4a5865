#include "fxvol/evalstat.hpp"

#include "fxvol/errors.hpp"
#include "fxvol/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

namespace fxvol {
namespace {

constexpr double kProxyFloor = 1e-12;

double pointwise_loss(double proxy, double forecast, LossKind kind) {
    if (kind == LossKind::MSFE) {
        const double e = proxy - forecast;
        return e * e;
    }
    return std::log(forecast) + proxy / forecast;
}

void finish(LossSeries& out) {
    out.mean = out.per_day.empty() ? 0.0 : stats::mean(out.per_day);
}

}  // namespace

std::string_view to_string(Horizon h) noexcept { return h == Horizon::INTRADAY ? "INTRADAY" : "INTERDAILY"; }
std::string_view to_string(LossKind k) noexcept { return k == LossKind::MSFE ? "MSFE" : "QLIKE"; }

LossSeries loss_interdaily(std::span<const double> rv, std::span<const double> forecasts, LossKind kind,
                           std::string model_id) {
    if (rv.size() != forecasts.size()) {
        throw ShapeError(fmt::format("{} proxies but {} forecasts", rv.size(), forecasts.size()));
    }
    LossSeries out{std::move(model_id), Horizon::INTERDAILY, kind, {}, 0.0, 0};
    out.per_day.reserve(rv.size());
    for (std::size_t t = 0; t < rv.size(); ++t) {
        const double f = forecasts[t];
        if (!(f > 0.0)) throw DomainError(fmt::format("variance forecast {} on day {} is not positive", f, t));
        double p = rv[t];
        if (kind == LossKind::QLIKE) {
            if (p < 0.0) throw DomainError(fmt::format("negative realised variance on day {}", t));
            if (p < kProxyFloor) {
                p = kProxyFloor;
                ++out.lifted_proxies;
            }
        }
        out.per_day.push_back(pointwise_loss(p, f, kind));
    }
    finish(out);
    return out;
}

LossSeries loss_intraday(const CurveSeries& proxy, const CurveSeries& forecasts, LossKind kind, std::string model_id) {
    require_aligned(proxy, forecasts, "intraday loss");
    LossSeries out{std::move(model_id), Horizon::INTRADAY, kind, {}, 0.0, 0};
    const std::size_t J = proxy.points();
    out.per_day.reserve(proxy.days());
    for (std::size_t t = 0; t < proxy.days(); ++t) {
        const auto y = proxy.row(t);
        const auto f = forecasts.row(t);
        double acc = 0.0;
        for (std::size_t j = 0; j < J; ++j) {
            if (!(f[j] > 0.0)) throw DomainError(fmt::format("variance forecast is not positive on day {}", t));
            double p = y[j];
            if (kind == LossKind::QLIKE) {
                if (p < 0.0) throw DomainError(fmt::format("negative squared-return proxy on day {}", t));
                if (p < kProxyFloor) {
                    p = kProxyFloor;
                    ++out.lifted_proxies;
                }
            }
            acc += pointwise_loss(p, f[j], kind);
        }
        out.per_day.push_back(acc / static_cast<double>(J));
    }
    finish(out);
    return out;
}

DMResult dm_test(const LossSeries& a, const LossSeries& b, std::optional<std::size_t> hac_lag) {
    if (a.horizon != b.horizon || a.loss_kind != b.loss_kind) {
        throw InputError("Diebold-Mariano needs losses of the same horizon and kind");
    }
    if (a.per_day.size() != b.per_day.size()) throw AlignmentError("Diebold-Mariano loss series differ in length");
    const std::size_t T = a.per_day.size();
    if (T < 30) throw InsufficientDataError(fmt::format("Diebold-Mariano needs T >= 30, got {}", T));
    std::vector<double> d(T);
    for (std::size_t t = 0; t < T; ++t) d[t] = a.per_day[t] - b.per_day[t];
    const std::size_t q = hac_lag.value_or(stats::cube_root_lag(T));
    if (std::all_of(d.begin(), d.end(), [](double v) { return v == 0.0; })) return {0.0, 1.0, q};
    const double lrv = stats::newey_west_variance(d, q);
    if (!(lrv > 0.0)) throw DegenerateInputError("degenerate loss differential: zero long-run variance");
    const double stat = stats::mean(d) / std::sqrt(lrv / static_cast<double>(T));
    return {stat, stats::two_sided_normal_pvalue(stat), q};
}

std::vector<std::size_t> moving_block_indices(std::size_t n, std::size_t block_len, std::uint64_t& state) {
    if (block_len < 1 || block_len > n) throw InputError("block length must lie in [1, T]");
    std::mt19937_64 rng(state);
    std::uniform_int_distribution<std::size_t> start(0, n - block_len);
    std::vector<std::size_t> idx;
    idx.reserve(n + block_len);
    while (idx.size() < n) {
        const std::size_t s = start(rng);
        for (std::size_t k = 0; k < block_len; ++k) idx.push_back(s + k);
    }
    idx.resize(n);
    state = rng();
    return idx;
}

MCSResult mcs(std::span<const LossSeries> losses, double alpha, std::size_t bootstrap_b,
              std::optional<std::size_t> block_len, std::uint64_t seed) {
    const std::size_t M = losses.size();
    if (M < 2) throw InputError("model confidence set needs at least two models");
    if (!(alpha > 0.0 && alpha < 1.0)) throw InputError("MCS alpha must lie in (0, 1)");
    if (bootstrap_b < 1) throw InputError("MCS needs at least one bootstrap replicate");
    const std::size_t T = losses[0].per_day.size();
    for (const auto& l : losses) {
        if (l.per_day.size() != T) throw AlignmentError("MCS loss series differ in length");
    }
    if (T < 2) throw InsufficientDataError("MCS needs at least two days");
    const std::size_t bl = block_len.value_or(std::max<std::size_t>(1, stats::cube_root_lag(T)));

    std::vector<double> mean(M);
    for (std::size_t i = 0; i < M; ++i) mean[i] = stats::mean(losses[i].per_day);

    // bootstrap means; the same resampled days are used for every model
    std::vector<double> boot(bootstrap_b * M);
    std::uint64_t state = seed;
    for (std::size_t b = 0; b < bootstrap_b; ++b) {
        const auto idx = moving_block_indices(T, bl, state);
        for (std::size_t i = 0; i < M; ++i) {
            double s = 0.0;
            for (auto k : idx) s += losses[i].per_day[k];
            boot[b * M + i] = s / static_cast<double>(T);
        }
    }

    std::vector<std::size_t> alive(M);
    std::iota(alive.begin(), alive.end(), 0);
    MCSResult out;
    out.alpha = alpha;
    double running_p = 0.0;
    const double inf = std::numeric_limits<double>::infinity();
    while (alive.size() > 1) {
        const std::size_t m = alive.size();
        // pairwise standard errors of the mean differential
        std::vector<double> se(m * m, 0.0);
        double stat = 0.0;
        for (std::size_t a = 0; a < m; ++a) {
            for (std::size_t c = a + 1; c < m; ++c) {
                const std::size_t i = alive[a];
                const std::size_t j = alive[c];
                const double dbar = mean[i] - mean[j];
                double v = 0.0;
                for (std::size_t b = 0; b < bootstrap_b; ++b) {
                    const double e = boot[b * M + i] - boot[b * M + j] - dbar;
                    v += e * e;
                }
                v /= static_cast<double>(bootstrap_b);
                se[a * m + c] = std::sqrt(v);
                if (v > 0.0) {
                    stat = std::max(stat, std::fabs(dbar) / se[a * m + c]);
                } else if (dbar != 0.0) {
                    stat = inf;
                }
            }
        }
        double p = 1.0;
        if (stat > 0.0) {
            std::size_t exceed = 0;
            for (std::size_t b = 0; b < bootstrap_b; ++b) {
                double tb = 0.0;
                for (std::size_t a = 0; a < m; ++a) {
                    for (std::size_t c = a + 1; c < m; ++c) {
                        const double s = se[a * m + c];
                        if (!(s > 0.0)) continue;
                        const std::size_t i = alive[a];
                        const std::size_t j = alive[c];
                        const double e = boot[b * M + i] - boot[b * M + j] - (mean[i] - mean[j]);
                        tb = std::max(tb, std::fabs(e) / s);
                    }
                }
                if (tb >= stat) ++exceed;
            }
            p = static_cast<double>(exceed) / static_cast<double>(bootstrap_b);
        }
        running_p = std::max(running_p, p);
        if (p >= alpha) break;
        std::size_t worst = 0;
        for (std::size_t a = 1; a < m; ++a) {
            if (mean[alive[a]] > mean[alive[worst]]) worst = a;
        }
        out.elimination_order.push_back({losses[alive[worst]].model_id, running_p});
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(worst));
    }
    for (auto i : alive) out.surviving.push_back(losses[i].model_id);
    return out;
}

}  // namespace fxvol
