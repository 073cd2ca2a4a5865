#pragma once

#include "fxvol/risk.hpp"
#include "fxvol/types.hpp"

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol {

enum class TradeSide { LONG, SHORT };
enum class ExitReason { TARGET, VAR_HIT, SUPPRESSED };

[[nodiscard]] std::string_view to_string(TradeSide side) noexcept;
[[nodiscard]] std::string_view to_string(ExitReason reason) noexcept;
[[nodiscard]] TradeSide trade_side_from_string(std::string_view name);

struct StrategyConfig {
    TradeSide side = TradeSide::LONG;
    std::size_t lookback = 102;
    double cost_rate = 0.000003;
    double cost_legs = 2.0;  // costs charged per round trip, one per leg
    double zeta = 0.01;      // 0.99 for SHORT
    bool var_enabled = true;

    void validate() const;
    [[nodiscard]] static StrategyConfig defaults_for(TradeSide side);
};

/// Planned entry and exit grid indices (0-based), or none when suppressed.
struct Decision {
    bool trade = false;
    std::size_t entry = 0;
    std::size_t exit = 0;
};

struct TradeRecord {
    std::string date;
    bool traded = false;
    std::optional<std::size_t> entry_u;
    std::optional<std::size_t> exit_u;
    ExitReason exit_reason = ExitReason::SUPPRESSED;
    double gross_return = 0.0;
    double net_return = 0.0;

    friend bool operator==(const TradeRecord&, const TradeRecord&) = default;
};

struct StrategyResult {
    std::vector<TradeRecord> records;
    double annual_return = 0.0;
    double sharpe = 0.0;
    bool sharpe_defined = false;
    double max_drawdown = 0.0;
    std::vector<double> cumulative;
};

inline constexpr double kTradingDaysPerYear = 204.0;

/// Pointwise mean of the last `lookback` curves.
[[nodiscard]] Vector functional_mean_forecast(const CurveSeries& history, std::size_t lookback);

[[nodiscard]] Decision signal(std::span<const double> forecast, TradeSide side);

/// Price path implied by an OCIDR curve relative to the previous close.
[[nodiscard]] Vector prices_from_ocidr(std::span<const double> ocidr, double previous_close = 1.0);

/// Executes one day. `var_curve` may be null (benchmark); `realized_demeaned` is
/// the demeaned OCIDR compared against the VaR curve.
[[nodiscard]] TradeRecord execute_day(const Decision& decision, std::span<const double> realized_prices,
                                      const VaRCurve* var_curve, std::span<const double> realized_demeaned,
                                      TradeSide side, double cost_rate, std::string date = {},
                                      double cost_legs = 2.0);

[[nodiscard]] StrategyResult performance(std::span<const TradeRecord> records);

}  // namespace fxvol
