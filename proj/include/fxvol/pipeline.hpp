#pragma once

#include "fxvol/curvebuild.hpp"
#include "fxvol/fgarch.hpp"
#include "fxvol/io.hpp"
#include "fxvol/risk.hpp"
#include "fxvol/trading.hpp"
#include "fxvol/types.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace fxvol {

inline constexpr const char* kVersion = "0.1.0";

struct AssetInput {
    std::string name;
    std::string quotes_path;
};

struct RunConfig {
    std::vector<AssetInput> assets;
    std::size_t grid_J = 48;
    std::size_t window = 600;
    std::size_t refit_every = 5;
    std::vector<std::string> basis_methods{"TFPCA", "DFPCA", "LFPCA", "MFPCA"};
    std::vector<ModelKind> model_kinds{ModelKind::FGARCH11, ModelKind::FGARCHX};
    std::vector<double> zetas{0.01, 0.99};
    StrategyConfig strategy;
    std::uint64_t seed = 0;
    std::string output_dir = "out";

    std::size_t max_components = 5;  // l_bar of the eigenvalue ratio
    std::size_t bootstrap_b = 1000;
    std::size_t mcs_bootstrap_b = 2000;
    double mcs_alpha = 0.05;
    std::vector<std::size_t> backtest_lags{1, 5, 10, 20};
    std::vector<std::size_t> diagnostic_lags{1, 5, 10, 20};
    std::size_t starts = 5;
    std::size_t max_iterations = 400;
    double variance_floor = 1e-8;
    std::optional<SessionSpec> session;
    double max_missing_share = 0.05;
    std::vector<std::string> exclude_dates;

    void validate() const;
};

[[nodiscard]] RunConfig run_config_from_json(const io::Json& j);
[[nodiscard]] io::Json to_json(const RunConfig& config);

/// Reads a RunConfig document; relative quote paths resolve against its directory.
[[nodiscard]] RunConfig load_run_config(const std::filesystem::path& path);

struct AssetData {
    std::string name;
    CurveSeries ocidr;
    CurveSeries ocibas;
    std::vector<double> rv;  // aligned with ocidr rows
};

[[nodiscard]] AssetData load_asset(const AssetInput& input, const RunConfig& config);
[[nodiscard]] AssetData asset_from_panel(std::string name, const QuotePanel& panel);

struct FitSummary {
    std::string date;  // first forecast date served by the fit
    std::size_t K = 0;
    double objective = 0.0;
    bool converged = false;
    double residual_scale = 1.0;
    std::size_t floor_engagements = 0;
    bool curve_positivity = false;
    std::optional<bool> lfpca_stationary;
};

/// Rolling one-step forecasts of one (asset, basis, model) combination.
struct ComboForecasts {
    std::string model_id;  // e.g. FG-TFPCA, X-MFPCA
    CurveSeries sigma2;    // T x J forecasts, dated by forecast day
    CurveSeries demeaned;  // realised curves minus the mean of the serving fit
    std::map<double, std::vector<VaRCurve>> var;
    std::vector<FitSummary> fits;
};

struct AssetForecasts {
    std::string asset;
    std::vector<ComboForecasts> combos;
};

/// Fit/forecast loop shared by `run` and the tests: forecast day t uses rows [t - window, t) only.
[[nodiscard]] std::vector<AssetForecasts> rolling_forecasts(const std::vector<AssetData>& assets,
                                                            const RunConfig& config);

[[nodiscard]] std::string model_id(ModelKind kind, const std::string& basis_method);

struct RunManifest {
    io::Json document;
    std::vector<std::string> files;
    bool failed = false;
};

/// End to end: ingest, rolling forecasts, losses, DM, MCS, VaR, backtests, trading, diagnostics.
RunManifest run_rolling(const RunConfig& config);

/// Same, on already-built asset data (no quote files).
RunManifest run_rolling(const RunConfig& config, const std::vector<AssetData>& assets);

struct SimulateConfig {
    std::vector<std::string> assets{"EUR", "GBP", "JPY"};
    std::size_t days = 800;
    std::size_t grid_J = 48;
    double d = 0.2;
    double a = 0.3;
    double b = 0.4;
    double common_share = 0.5;  // share of error variance common to all assets
    double correlation_length = 0.3;
    std::vector<double> spread{0.0002};  // one value (constant) or J values
    double spread_noise = 0.1;
    double base_price = 1.0;
    std::size_t burn_in = 200;
    std::uint64_t seed = 0;
    std::string output_dir = "synthetic";
};

[[nodiscard]] SimulateConfig simulate_config_from_json(const io::Json& j);
[[nodiscard]] io::Json to_json(const SimulateConfig& config);

struct SimulatedAsset {
    std::string name;
    CurveSeries ocidr;
    QuotePanel quotes;  // days + 1 rows; the first day is flat at base_price
};

[[nodiscard]] std::vector<SimulatedAsset> simulate_dataset(const SimulateConfig& config);

/// Writes <asset>_quotes.csv, <asset>_ocidr.csv and run_config.json; returns written paths.
std::vector<std::string> run_simulate(const SimulateConfig& config);

}  // namespace fxvol
