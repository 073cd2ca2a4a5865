#pragma once

#include "fxvol/types.hpp"

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol {

enum class Horizon { INTRADAY, INTERDAILY };
enum class LossKind { MSFE, QLIKE };

[[nodiscard]] std::string_view to_string(Horizon h) noexcept;
[[nodiscard]] std::string_view to_string(LossKind k) noexcept;

struct LossSeries {
    std::string model_id;
    Horizon horizon = Horizon::INTERDAILY;
    LossKind loss_kind = LossKind::MSFE;
    std::vector<double> per_day;
    double mean = 0.0;
    std::size_t lifted_proxies = 0;  // QLIKE proxies raised to the 1e-12 floor
};

/// Daily losses of scalar variance forecasts against realised volatility.
[[nodiscard]] LossSeries loss_interdaily(std::span<const double> rv, std::span<const double> forecasts, LossKind kind,
                                         std::string model_id = {});

/// Grid-averaged pointwise losses of variance curves against squared-return proxies.
[[nodiscard]] LossSeries loss_intraday(const CurveSeries& proxy, const CurveSeries& forecasts, LossKind kind,
                                       std::string model_id = {});

struct DMResult {
    double statistic = 0.0;
    double pvalue = 1.0;
    std::size_t hac_lag = 0;
};

/// Diebold-Mariano test on d_t = lossA_t - lossB_t; positive statistics mean A is worse.
[[nodiscard]] DMResult dm_test(const LossSeries& a, const LossSeries& b, std::optional<std::size_t> hac_lag = std::nullopt);

struct MCSStep {
    std::string model;
    double pvalue = 0.0;  // monotonised
};

struct MCSResult {
    std::vector<std::string> surviving;
    std::vector<MCSStep> elimination_order;
    double alpha = 0.05;
};

/// Model Confidence Set with the range statistic and a moving-block bootstrap.
[[nodiscard]] MCSResult mcs(std::span<const LossSeries> losses, double alpha = 0.05, std::size_t bootstrap_b = 2000,
                            std::optional<std::size_t> block_len = std::nullopt, std::uint64_t seed = 0);

/// Indices of a moving-block bootstrap resample of length n.
[[nodiscard]] std::vector<std::size_t> moving_block_indices(std::size_t n, std::size_t block_len, std::uint64_t& state);

}  // namespace fxvol
