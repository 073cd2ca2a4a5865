#include "fxvol/trading.hpp"

#include "fxvol/errors.hpp"
#include "fxvol/stats.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace fxvol {

std::string_view to_string(TradeSide side) noexcept { return side == TradeSide::LONG ? "LONG" : "SHORT"; }

std::string_view to_string(ExitReason reason) noexcept {
    switch (reason) {
        case ExitReason::TARGET: return "TARGET";
        case ExitReason::VAR_HIT: return "VAR_HIT";
        case ExitReason::SUPPRESSED: return "SUPPRESSED";
    }
    return "SUPPRESSED";
}

TradeSide trade_side_from_string(std::string_view name) {
    if (name == "LONG") return TradeSide::LONG;
    if (name == "SHORT") return TradeSide::SHORT;
    throw ConfigError(fmt::format("unknown trade side '{}'", name));
}

void StrategyConfig::validate() const {
    if (lookback < 1) throw ConfigError("strategy lookback must be at least 1");
    if (!(cost_rate >= 0.0)) throw ConfigError("strategy cost rate must be non-negative");
    if (!(cost_legs >= 0.0)) throw ConfigError("strategy cost legs must be non-negative");
    if (!(zeta > 0.0 && zeta < 1.0)) throw ConfigError("strategy zeta must lie in (0, 1)");
}

StrategyConfig StrategyConfig::defaults_for(TradeSide side) {
    StrategyConfig c;
    c.side = side;
    c.zeta = side == TradeSide::LONG ? 0.01 : 0.99;
    return c;
}

Vector functional_mean_forecast(const CurveSeries& history, std::size_t lookback) {
    if (lookback < 1) throw InputError("lookback must be at least 1");
    if (history.days() < lookback) {
        throw InsufficientDataError(fmt::format("functional mean needs {} days of history, got {}", lookback,
                                                history.days()));
    }
    const auto first = static_cast<Eigen::Index>(history.days() - lookback);
    Vector sum = Vector::Zero(static_cast<Eigen::Index>(history.points()));
    for (Eigen::Index t = first; t < static_cast<Eigen::Index>(history.days()); ++t) {
        sum += history.values.row(t).transpose();
    }
    return sum / static_cast<double>(lookback);
}

Decision signal(std::span<const double> forecast, TradeSide side) {
    const std::size_t J = forecast.size();
    if (J < 2) throw InputError("trading signal needs at least two grid points");
    const auto [mn, mx] = std::minmax_element(forecast.begin(), forecast.end());
    double avg = 0.0;
    for (double v : forecast) avg += v;
    avg /= static_cast<double>(J);
    if (!(std::fabs(*mx - *mn) >= avg)) return {};

    // min_element / max_element return the earliest extremum
    const bool up = side == TradeSide::LONG;
    const auto entry = static_cast<std::size_t>((up ? mn : mx) - forecast.begin());
    if (entry + 1 >= J) return {};
    const auto tail = forecast.subspan(entry + 1);
    const auto it = up ? std::max_element(tail.begin(), tail.end()) : std::min_element(tail.begin(), tail.end());
    return {true, entry, entry + 1 + static_cast<std::size_t>(it - tail.begin())};
}

Vector prices_from_ocidr(std::span<const double> ocidr, double previous_close) {
    Vector p(static_cast<Eigen::Index>(ocidr.size()));
    for (std::size_t j = 0; j < ocidr.size(); ++j) {
        p[static_cast<Eigen::Index>(j)] = previous_close * std::exp(ocidr[j] / 100.0);
    }
    return p;
}

TradeRecord execute_day(const Decision& decision, std::span<const double> realized_prices, const VaRCurve* var_curve,
                        std::span<const double> realized_demeaned, TradeSide side, double cost_rate, std::string date,
                        double cost_legs) {
    TradeRecord rec;
    rec.date = std::move(date);
    if (!decision.trade) return rec;
    const std::size_t J = realized_prices.size();
    if (decision.entry >= decision.exit || decision.exit >= J) {
        throw std::logic_error(fmt::format("trade indices {} -> {} invalid for {} grid points", decision.entry,
                                           decision.exit, J));
    }
    if (var_curve != nullptr &&
        (static_cast<std::size_t>(var_curve->curve.size()) != J || realized_demeaned.size() != J)) {
        throw ShapeError("VaR curve, returns and prices must share the grid");
    }
    for (std::size_t j = 0; j < J; ++j) {
        if (!(realized_prices[j] > 0.0)) throw DomainError("prices must be positive");
    }

    std::size_t close = decision.exit;
    ExitReason reason = ExitReason::TARGET;
    if (var_curve != nullptr) {
        for (std::size_t j = decision.entry + 1; j <= decision.exit; ++j) {
            const double q = var_curve->curve[static_cast<Eigen::Index>(j)];
            const bool hit = side == TradeSide::LONG ? realized_demeaned[j] < q : realized_demeaned[j] > q;
            if (hit) {
                close = j;
                reason = ExitReason::VAR_HIT;
                break;
            }
        }
    }
    const double p_in = realized_prices[decision.entry];
    const double p_out = realized_prices[close];
    rec.traded = true;
    rec.entry_u = decision.entry;
    rec.exit_u = close;
    rec.exit_reason = reason;
    rec.gross_return = side == TradeSide::LONG ? p_out / p_in - 1.0 : p_in / p_out - 1.0;
    rec.net_return = rec.gross_return - cost_legs * cost_rate;
    return rec;
}

StrategyResult performance(std::span<const TradeRecord> records) {
    if (records.empty()) throw InsufficientDataError("performance needs at least one trading day");
    StrategyResult out;
    out.records.assign(records.begin(), records.end());
    std::vector<double> net;
    net.reserve(records.size());
    for (const auto& r : records) net.push_back(r.net_return);

    out.cumulative.reserve(net.size());
    double level = 1.0;
    double peak = 1.0;  // the starting capital counts as a peak
    for (double r : net) {
        level *= 1.0 + r;
        peak = std::max(peak, level);
        out.cumulative.push_back(level);
        out.max_drawdown = std::min(out.max_drawdown, level / peak - 1.0);
    }
    const double m = stats::mean(net);
    out.annual_return = m * kTradingDaysPerYear;
    if (net.size() >= 2) {
        const double sd = std::sqrt(stats::sample_variance(net));
        if (sd > 0.0) {
            out.sharpe = m / sd;
            out.sharpe_defined = true;
        }
    }
    return out;
}

}  // namespace fxvol
