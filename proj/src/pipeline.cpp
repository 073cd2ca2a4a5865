#include "fxvol/pipeline.hpp"

#include "fxvol/basis.hpp"
#include "fxvol/diagnostics.hpp"
#include "fxvol/errors.hpp"
#include "fxvol/evalstat.hpp"
#include "fxvol/longmem.hpp"
#include "fxvol/stats.hpp"

#include <Eigen/Core>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace fxvol {
namespace {

// Error raised inside a named stage; carries enough to report and re-raise.
struct StageFailure {
    std::string stage;
    std::string date;
    std::string message;
    bool numeric = false;
};

template <class F>
auto in_stage(std::string_view name, std::string_view date, F&& f) -> decltype(f()) {
    try {
        return f();
    } catch (const Error& e) {
        throw StageFailure{std::string(name), std::string(date), e.what(), e.is_numeric()};
    }
}

std::string fnv1a_hex(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return fmt::format("{:016x}", h);
}

std::string zeta_label(double zeta) { return io::format_double(zeta); }

bool is_known_method(const std::string& m) {
    return m == "TFPCA" || m == "DFPCA" || m == "LFPCA" || m == "MFPCA";
}

template <class T>
T get_or(const io::Json& j, const char* key, T fallback) {
    return j.contains(key) ? j.at(key).get<T>() : fallback;
}

void reject_unknown(const io::Json& j, std::initializer_list<std::string_view> known, std::string_view what) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (std::find(known.begin(), known.end(), it.key()) == known.end()) {
            throw ConfigError(fmt::format("unknown {} key '{}'", what, it.key()));
        }
    }
}

}  // namespace

// ---------------------------------------------------------------- configuration

void RunConfig::validate() const {
    if (assets.empty()) throw ConfigError("run config lists no assets");
    std::set<std::string> names;
    for (const auto& a : assets) {
        if (a.name.empty()) throw ConfigError("asset names must be non-empty");
        if (!names.insert(a.name).second) throw ConfigError(fmt::format("duplicate asset '{}'", a.name));
    }
    if (grid_J < 2) throw ConfigError("grid_J must be at least 2");
    if (refit_every < 1) throw ConfigError("refit_every must be at least 1");
    if (window < 100) throw ConfigError("window must be at least 100 days");
    if (basis_methods.empty()) throw ConfigError("no basis methods requested");
    for (const auto& m : basis_methods) {
        if (!is_known_method(m)) throw ConfigError(fmt::format("unknown basis method '{}'", m));
        if (m == "MFPCA" && assets.size() < 2) {
            throw ConfigError("MFPCA needs at least 2 assets (multi-level FPCA pools several currencies)");
        }
    }
    if (model_kinds.empty()) throw ConfigError("no model kinds requested");
    for (double z : zetas) {
        if (!(z > 0.0 && z < 1.0)) throw ConfigError(fmt::format("zeta {} outside (0, 1)", z));
    }
    strategy.validate();
    if (strategy.lookback > window) throw ConfigError("strategy lookback cannot exceed the window");
    if (max_components < 1) throw ConfigError("max_components must be at least 1");
    if (bootstrap_b < 1000) throw ConfigError("bootstrap_b must be at least 1000");
    if (mcs_bootstrap_b < 1) throw ConfigError("mcs_bootstrap_b must be positive");
    if (!(mcs_alpha > 0.0 && mcs_alpha < 1.0)) throw ConfigError("mcs_alpha must lie in (0, 1)");
    if (starts < 1) throw ConfigError("starts must be at least 1");
    if (!(variance_floor > 0.0)) throw ConfigError("variance_floor must be positive");
}

RunConfig run_config_from_json(const io::Json& j) {
    try {
        if (!j.is_object()) throw ConfigError("run config must be a JSON object");
        reject_unknown(j,
                       {"assets", "grid_J", "window", "refit_every", "basis_methods", "model_kinds", "zetas",
                        "strategy", "seed", "output_dir", "max_components", "bootstrap_b", "mcs_bootstrap_b",
                        "mcs_alpha", "backtest_lags", "diagnostic_lags", "starts", "max_iterations", "variance_floor",
                        "session", "max_missing_share", "exclude_dates"},
                       "run config");
        RunConfig c;
        for (const auto& a : j.at("assets")) {
            reject_unknown(a, {"name", "quotes_path"}, "asset");
            c.assets.push_back({a.at("name").get<std::string>(), a.at("quotes_path").get<std::string>()});
        }
        c.grid_J = get_or(j, "grid_J", c.grid_J);
        c.window = get_or(j, "window", c.window);
        c.refit_every = get_or(j, "refit_every", c.refit_every);
        c.basis_methods = get_or(j, "basis_methods", c.basis_methods);
        if (j.contains("model_kinds")) {
            c.model_kinds.clear();
            for (const auto& k : j.at("model_kinds")) c.model_kinds.push_back(model_kind_from_string(k.get<std::string>()));
        }
        c.zetas = get_or(j, "zetas", c.zetas);
        if (j.contains("strategy")) {
            const auto& s = j.at("strategy");
            reject_unknown(s, {"side", "lookback", "cost_rate", "cost_legs", "zeta", "var_enabled"}, "strategy");
            const TradeSide side = trade_side_from_string(get_or<std::string>(s, "side", "LONG"));
            c.strategy = StrategyConfig::defaults_for(side);
            c.strategy.lookback = get_or(s, "lookback", c.strategy.lookback);
            c.strategy.cost_rate = get_or(s, "cost_rate", c.strategy.cost_rate);
            c.strategy.cost_legs = get_or(s, "cost_legs", c.strategy.cost_legs);
            c.strategy.zeta = get_or(s, "zeta", c.strategy.zeta);
            c.strategy.var_enabled = get_or(s, "var_enabled", c.strategy.var_enabled);
        }
        c.seed = get_or(j, "seed", c.seed);
        c.output_dir = get_or(j, "output_dir", c.output_dir);
        c.max_components = get_or(j, "max_components", c.max_components);
        c.bootstrap_b = get_or(j, "bootstrap_b", c.bootstrap_b);
        c.mcs_bootstrap_b = get_or(j, "mcs_bootstrap_b", c.mcs_bootstrap_b);
        c.mcs_alpha = get_or(j, "mcs_alpha", c.mcs_alpha);
        c.backtest_lags = get_or(j, "backtest_lags", c.backtest_lags);
        c.diagnostic_lags = get_or(j, "diagnostic_lags", c.diagnostic_lags);
        c.starts = get_or(j, "starts", c.starts);
        c.max_iterations = get_or(j, "max_iterations", c.max_iterations);
        c.variance_floor = get_or(j, "variance_floor", c.variance_floor);
        if (j.contains("session")) {
            const auto& s = j.at("session");
            c.session = SessionSpec{s.at("open_minute").get<int>(), s.at("close_minute").get<int>()};
        }
        c.max_missing_share = get_or(j, "max_missing_share", c.max_missing_share);
        c.exclude_dates = get_or(j, "exclude_dates", c.exclude_dates);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("malformed run config: {}", e.what()));
    }
}

io::Json to_json(const RunConfig& c) {
    io::Json assets = io::Json::array();
    for (const auto& a : c.assets) assets.push_back({{"name", a.name}, {"quotes_path", a.quotes_path}});
    io::Json kinds = io::Json::array();
    for (auto k : c.model_kinds) kinds.push_back(std::string(to_string(k)));
    io::Json j{{"assets", assets},
               {"grid_J", c.grid_J},
               {"window", c.window},
               {"refit_every", c.refit_every},
               {"basis_methods", c.basis_methods},
               {"model_kinds", kinds},
               {"zetas", c.zetas},
               {"strategy",
                {{"side", std::string(to_string(c.strategy.side))},
                 {"lookback", c.strategy.lookback},
                 {"cost_rate", c.strategy.cost_rate},
                 {"cost_legs", c.strategy.cost_legs},
                 {"zeta", c.strategy.zeta},
                 {"var_enabled", c.strategy.var_enabled}}},
               {"seed", c.seed},
               {"output_dir", c.output_dir},
               {"max_components", c.max_components},
               {"bootstrap_b", c.bootstrap_b},
               {"mcs_bootstrap_b", c.mcs_bootstrap_b},
               {"mcs_alpha", c.mcs_alpha},
               {"backtest_lags", c.backtest_lags},
               {"diagnostic_lags", c.diagnostic_lags},
               {"starts", c.starts},
               {"max_iterations", c.max_iterations},
               {"variance_floor", c.variance_floor},
               {"max_missing_share", c.max_missing_share},
               {"exclude_dates", c.exclude_dates}};
    if (c.session) j["session"] = {{"open_minute", c.session->open_minute}, {"close_minute", c.session->close_minute}};
    return j;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    const std::string text = io::read_text_file(path);
    io::Json j;
    try {
        j = io::Json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("{} is not valid JSON: {}", path.string(), e.what()));
    }
    RunConfig c = run_config_from_json(j);
    const auto base = path.parent_path();
    for (auto& a : c.assets) {
        const std::filesystem::path p(a.quotes_path);
        if (p.is_relative() && !base.empty()) a.quotes_path = (base / p).string();
    }
    return c;
}

// ---------------------------------------------------------------- data

AssetData asset_from_panel(std::string name, const QuotePanel& panel) {
    AssetData d;
    d.name = std::move(name);
    d.ocidr = build_ocidr(panel);
    d.ocibas = build_ocibas(panel);
    d.rv = realised_vol(panel);
    return d;
}

AssetData load_asset(const AssetInput& input, const RunConfig& config) {
    std::ifstream in(input.quotes_path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open quotes for {}: {}", input.name, input.quotes_path));
    IngestOptions opts;
    opts.session = config.session;
    opts.max_missing_share = config.max_missing_share;
    opts.exclude_dates = config.exclude_dates;
    const auto result = ingest_quotes(in, IntradayGrid(config.grid_J), opts);
    return asset_from_panel(input.name, result.panel);
}

std::string model_id(ModelKind kind, const std::string& basis_method) {
    return fmt::format("{}-{}", kind == ModelKind::FGARCH11 ? "FG" : "X", basis_method);
}

// ---------------------------------------------------------------- rolling forecasts

namespace {

struct BasisChoice {
    BasisSet basis;
    std::vector<std::size_t> blocks;
    std::optional<bool> stationary;
};

struct ComboState {
    FGarchFit fit;
    Vector h;  // variance scores of the last observed day
    std::map<double, Vector> eps_quantile;
};

std::map<std::string, BasisChoice> build_bases(const std::vector<CurveSeries>& squared, std::size_t asset,
                                               const RunConfig& config, const MfpcaResult* mf) {
    const CurveSeries& sq = squared[asset];
    const std::size_t l_bar = config.max_components;
    std::map<std::string, BasisChoice> out;
    for (const auto& m : config.basis_methods) {
        BasisChoice c;
        if (m == "TFPCA") {
            c.basis = select_dimension(tfpca(sq, l_bar + 1), l_bar);
        } else if (m == "DFPCA") {
            c.basis = select_dimension(dfpca(sq, l_bar + 1), l_bar);
        } else if (m == "LFPCA") {
            const BasisSet first = tfpca(sq, 1);
            const auto check = score_stationarity_check(sq, first.function(0));
            c.stationary = check.stationary;
            c.basis = select_dimension(lfpca(sq, l_bar + 1, check.stationary), l_bar);
        } else {
            const BasisSet& common = mf->common;
            const BasisSet& specific = mf->specific[asset];
            if (specific.size() == 0) {
                c.basis = common;
            } else {
                c.basis = concatenate(common, specific);
                c.blocks = {common.size(), specific.size()};
            }
        }
        out.emplace(m, std::move(c));
    }
    return out;
}

}  // namespace

std::vector<AssetForecasts> rolling_forecasts(const std::vector<AssetData>& assets, const RunConfig& config) {
    config.validate();
    if (assets.size() != config.assets.size()) throw ConfigError("asset data does not match the run config");
    const std::size_t N = assets.front().ocidr.days();
    const std::size_t J = assets.front().ocidr.points();
    for (const auto& a : assets) {
        require_aligned(assets.front().ocidr, a.ocidr, fmt::format("asset {}", a.name));
        require_aligned(a.ocidr, a.ocibas, fmt::format("asset {} spread curves", a.name));
        if (a.rv.size() != N) throw AlignmentError(fmt::format("asset {} realised volatility misaligned", a.name));
    }
    if (config.window >= N) {
        throw InsufficientDataError(fmt::format("window {} leaves no forecast days in {} days", config.window, N));
    }
    const std::size_t W = config.window;
    const std::size_t T = N - W;
    const bool want_mfpca =
        std::find(config.basis_methods.begin(), config.basis_methods.end(), "MFPCA") != config.basis_methods.end();

    std::set<double> zeta_set(config.zetas.begin(), config.zetas.end());
    if (config.strategy.var_enabled) zeta_set.insert(config.strategy.zeta);

    std::vector<AssetForecasts> out(assets.size());
    // per asset: combos in (basis, kind) order
    std::vector<std::vector<ComboState>> state(assets.size());
    std::vector<std::vector<Matrix>> sig(assets.size());
    std::vector<std::vector<Matrix>> dem(assets.size());
    for (std::size_t a = 0; a < assets.size(); ++a) {
        out[a].asset = assets[a].name;
        for (const auto& m : config.basis_methods) {
            for (auto k : config.model_kinds) {
                ComboForecasts cf;
                cf.model_id = model_id(k, m);
                out[a].combos.push_back(std::move(cf));
                state[a].emplace_back();
                sig[a].emplace_back(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(J));
                dem[a].emplace_back(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(J));
            }
        }
    }

    for (std::size_t i = 0; i < T; ++i) {
        const std::size_t t = W + i;
        const std::string& date = assets.front().ocidr.dates[t];
        if (i % config.refit_every == 0) {
            std::vector<Demeaned> train;
            std::vector<CurveSeries> squared;
            for (const auto& a : assets) {
                train.push_back(demean(a.ocidr.slice(t - W, W)));
                squared.push_back(square_series(train.back().series));
            }
            std::optional<MfpcaResult> mf;
            if (want_mfpca) {
                mf = in_stage("basis:MFPCA", date, [&] { return mfpca(squared, config.max_components); });
            }
            for (std::size_t a = 0; a < assets.size(); ++a) {
                const auto bases = in_stage(fmt::format("basis:{}", assets[a].name), date,
                                            [&] { return build_bases(squared, a, config, mf ? &*mf : nullptr); });
                const CurveSeries x_train = assets[a].ocibas.slice(t - W, W);
                std::size_t c = 0;
                for (const auto& m : config.basis_methods) {
                    const BasisChoice& choice = bases.at(m);
                    for (auto kind : config.model_kinds) {
                        ComboState& st = state[a][c];
                        ComboForecasts& cf = out[a].combos[c];
                        const std::uint64_t stream = (static_cast<std::uint64_t>(a) * 64 + c) * 1000003ULL + t;
                        ModelSpec spec;
                        spec.kind = kind;
                        spec.basis_method = m;
                        spec.variance_floor = config.variance_floor;
                        spec.starts = config.starts;
                        spec.max_iterations = config.max_iterations;
                        spec.seed = stats::derive_seed(config.seed, stream);
                        spec.blocks = choice.blocks;
                        st.fit = in_stage(fmt::format("fit:{}:{}", assets[a].name, cf.model_id), date, [&] {
                            return qmle_fit(spec, train[a].series, choice.basis,
                                            kind == ModelKind::FGARCHX ? &x_train : nullptr,
                                            {train[a].mean.data(), J});
                        });
                        st.h = st.fit.variance_scores.row(st.fit.variance_scores.rows() - 1).transpose();
                        st.eps_quantile.clear();
                        std::size_t zi = 0;
                        for (double z : zeta_set) {
                            st.eps_quantile[z] =
                                in_stage(fmt::format("var:{}:{}", assets[a].name, cf.model_id), date, [&] {
                                    return residual_quantile_curve(st.fit.residuals, z, config.bootstrap_b,
                                                                   stats::derive_seed(spec.seed, 17 + zi));
                                });
                            ++zi;
                        }
                        cf.fits.push_back({date, choice.basis.size(), st.fit.objective, st.fit.converged,
                                           st.fit.residual_scale, st.fit.floor_engagements, st.fit.curve_positivity,
                                           choice.stationary});
                        ++c;
                    }
                }
            }
        }

        for (std::size_t a = 0; a < assets.size(); ++a) {
            const auto prev = assets[a].ocidr.row(t - 1);
            const auto prev_x = assets[a].ocibas.row(t - 1);
            const auto today = assets[a].ocidr.row(t);
            for (std::size_t c = 0; c < state[a].size(); ++c) {
                ComboState& st = state[a][c];
                ComboForecasts& cf = out[a].combos[c];
                const Vector& mu = st.fit.mean_curve;
                std::vector<double> latest(J);
                for (std::size_t j = 0; j < J; ++j) {
                    const double e = prev[j] - mu[static_cast<Eigen::Index>(j)];
                    latest[j] = e * e;
                }
                const std::span<const double> hx{st.h.data(), static_cast<std::size_t>(st.h.size())};
                const std::span<const double> xs = st.fit.params.has_x() ? prev_x : std::span<const double>{};
                const Vector s2 = in_stage(fmt::format("forecast:{}:{}", assets[a].name, cf.model_id), date,
                                           [&] { return forecast_one_step(st.fit, latest, hx, xs); });
                st.h = next_variance_scores(st.fit, latest, hx, xs);
                const auto r = static_cast<Eigen::Index>(i);
                sig[a][c].row(r) = s2.transpose();
                for (std::size_t j = 0; j < J; ++j) {
                    dem[a][c](r, static_cast<Eigen::Index>(j)) = today[j] - mu[static_cast<Eigen::Index>(j)];
                }
                std::vector<double> sd(J);
                for (std::size_t j = 0; j < J; ++j) sd[j] = std::sqrt(s2[static_cast<Eigen::Index>(j)]);
                for (const auto& [z, q] : st.eps_quantile) {
                    cf.var[z].push_back(var_forecast(sd, {q.data(), J}, z, date));
                }
            }
        }
    }

    std::vector<std::string> fdates(assets.front().ocidr.dates.begin() + static_cast<std::ptrdiff_t>(W),
                                    assets.front().ocidr.dates.end());
    const IntradayGrid grid = assets.front().ocidr.grid;
    for (std::size_t a = 0; a < assets.size(); ++a) {
        for (std::size_t c = 0; c < out[a].combos.size(); ++c) {
            out[a].combos[c].sigma2 = CurveSeries(grid, fdates, std::move(sig[a][c]), CurveKind::VARIANCE);
            out[a].combos[c].demeaned = CurveSeries(grid, fdates, std::move(dem[a][c]), CurveKind::GENERIC);
        }
    }
    return out;
}

// ---------------------------------------------------------------- reports

namespace {

class Reports {
public:
    void add(const std::string& path, std::string content) { files_[path] = std::move(content); }
    [[nodiscard]] const std::map<std::string, std::string>& files() const noexcept { return files_; }

private:
    std::map<std::string, std::string> files_;
};

std::string curve_csv(const CurveSeries& s) {
    std::ostringstream os;
    io::write_curve_series(os, s);
    return os.str();
}

std::string fmt_num(double x) { return std::isfinite(x) ? io::format_double(x) : (std::isnan(x) ? "NA" : (x > 0 ? "inf" : "-inf")); }

struct LossSet {
    Horizon horizon;
    LossKind kind;
    std::vector<LossSeries> series;  // one per combo
};

void evaluate_asset(const AssetData& data, const AssetForecasts& fc, const RunConfig& config, Reports& rep,
                    std::ostringstream& backtests, std::ostringstream& var_summary, std::ostringstream& trading_summary,
                    std::size_t asset_index) {
    const std::string& name = data.name;
    const std::size_t W = config.window;
    const std::size_t T = data.ocidr.days() - W;
    const std::size_t J = data.ocidr.points();
    const std::string first_date = data.ocidr.dates[W];

    // losses
    std::vector<LossSet> sets;
    for (auto h : {Horizon::INTRADAY, Horizon::INTERDAILY}) {
        for (auto k : {LossKind::MSFE, LossKind::QLIKE}) sets.push_back({h, k, {}});
    }
    in_stage(fmt::format("evaluate:{}", name), first_date, [&] {
        const std::vector<double> rv(data.rv.begin() + static_cast<std::ptrdiff_t>(W), data.rv.end());
        for (const auto& combo : fc.combos) {
            const CurveSeries proxy = square_series(combo.demeaned);
            std::vector<double> daily(T);
            for (std::size_t i = 0; i < T; ++i) daily[i] = combo.sigma2.values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(J - 1));
            for (auto& s : sets) {
                s.series.push_back(s.horizon == Horizon::INTRADAY
                                       ? loss_intraday(proxy, combo.sigma2, s.kind, combo.model_id)
                                       : loss_interdaily(rv, daily, s.kind, combo.model_id));
            }
        }
        return 0;
    });

    std::ostringstream losses;
    losses << "model,horizon,loss_kind,mean_loss\n";
    for (std::size_t c = 0; c < fc.combos.size(); ++c) {
        for (const auto& s : sets) {
            losses << fc.combos[c].model_id << ',' << to_string(s.horizon) << ',' << to_string(s.kind) << ','
                   << fmt_num(s.series[c].mean) << '\n';
        }
    }
    rep.add(fmt::format("{}/losses.csv", name), losses.str());

    std::size_t set_index = 0;
    for (const auto& s : sets) {
        const std::string tag = fmt::format("{}_{}", to_string(s.horizon), to_string(s.kind));
        std::ostringstream dm;
        dm << "modelA,modelB,dm_stat,pvalue\n";
        for (std::size_t i = 0; i < s.series.size(); ++i) {
            for (std::size_t k = i + 1; k < s.series.size(); ++k) {
                double stat = std::nan("");
                double p = std::nan("");
                try {
                    const auto r = dm_test(s.series[i], s.series[k]);
                    stat = r.statistic;
                    p = r.pvalue;
                } catch (const DegenerateInputError&) {
                }
                dm << s.series[i].model_id << ',' << s.series[k].model_id << ',' << fmt_num(stat) << ',' << fmt_num(p)
                   << '\n';
            }
        }
        rep.add(fmt::format("{}/dm_{}.csv", name, tag), dm.str());
        if (s.series.size() >= 2) {
            const auto res = in_stage(fmt::format("mcs:{}", name), first_date, [&] {
                return mcs(s.series, config.mcs_alpha, config.mcs_bootstrap_b, std::nullopt,
                           stats::derive_seed(config.seed, 500000 + asset_index * 16 + set_index));
            });
            std::string joined;
            for (std::size_t m = 0; m < res.surviving.size(); ++m) joined += (m ? ";" : "") + res.surviving[m];
            std::ostringstream os;
            os << "alpha,surviving_models\n" << fmt_num(config.mcs_alpha) << ',' << joined << '\n';
            rep.add(fmt::format("{}/mcs_{}.csv", name, tag), os.str());
        }
        ++set_index;
    }

    // VaR, violations, backtests
    for (const auto& combo : fc.combos) {
        rep.add(fmt::format("{}/forecast_{}.csv", name, combo.model_id), curve_csv(combo.sigma2));
        for (const auto& [z, curves] : combo.var) {
            if (std::find(config.zetas.begin(), config.zetas.end(), z) == config.zetas.end()) continue;
            const Side side = z < 0.5 ? Side::LOWER : Side::UPPER;
            Matrix vm(static_cast<Eigen::Index>(curves.size()), static_cast<Eigen::Index>(J));
            for (std::size_t i = 0; i < curves.size(); ++i) vm.row(static_cast<Eigen::Index>(i)) = curves[i].curve.transpose();
            rep.add(fmt::format("{}/var_{}_{}.csv", name, combo.model_id, zeta_label(z)),
                    curve_csv(CurveSeries(combo.sigma2.grid, combo.sigma2.dates, std::move(vm), CurveKind::GENERIC)));
            const auto v = in_stage(fmt::format("backtest:{}:{}", name, combo.model_id), first_date,
                                    [&] { return violations(combo.demeaned, curves, side); });
            const auto rates = exceedance_rates(v);
            var_summary << name << ',' << combo.model_id << ',' << zeta_label(z) << ','
                        << fmt_num(stats::mean(rates)) << '\n';
            double up = std::nan("");
            try {
                up = backtest_unbiasedness(v).pvalue;
            } catch (const InsufficientDataError&) {
            }
            backtests << name << ',' << combo.model_id << ',' << zeta_label(z) << ",UNBIASEDNESS,," << fmt_num(up) << '\n';
            std::vector<double> ip(config.backtest_lags.size(), std::nan(""));
            try {
                const auto r = backtest_independence(v, config.backtest_lags);
                for (std::size_t l = 0; l < r.size(); ++l) ip[l] = r[l].pvalue;
            } catch (const DegenerateInputError&) {
                // no variation in the exceedance rate (e.g. no violations at all)
            } catch (const InsufficientDataError&) {
            }
            for (std::size_t l = 0; l < config.backtest_lags.size(); ++l) {
                backtests << name << ',' << combo.model_id << ',' << zeta_label(z) << ",INDEPENDENCE,"
                          << config.backtest_lags[l] << ',' << fmt_num(ip[l]) << '\n';
            }
        }
    }

    // trading: benchmark plus one VaR-corrected variant per combination
    const StrategyConfig& sc = config.strategy;
    std::vector<std::string> names{"BENCHMARK"};
    std::vector<std::vector<TradeRecord>> records(1);
    if (sc.var_enabled) {
        for (const auto& combo : fc.combos) {
            names.push_back("VAR-" + combo.model_id);
            records.emplace_back();
        }
    }
    in_stage(fmt::format("trade:{}", name), first_date, [&] {
        for (std::size_t i = 0; i < T; ++i) {
            const std::size_t t = W + i;
            const Vector mean_fc = functional_mean_forecast(data.ocidr.slice(t - sc.lookback, sc.lookback), sc.lookback);
            const Decision d = signal({mean_fc.data(), J}, sc.side);
            const Vector prices = prices_from_ocidr(data.ocidr.row(t));
            const std::span<const double> px{prices.data(), J};
            const std::string& date = data.ocidr.dates[t];
            records[0].push_back(execute_day(d, px, nullptr, {}, sc.side, sc.cost_rate, date, sc.cost_legs));
            if (sc.var_enabled) {
                for (std::size_t c = 0; c < fc.combos.size(); ++c) {
                    const auto& combo = fc.combos[c];
                    const VaRCurve& var = combo.var.at(sc.zeta)[i];
                    records[c + 1].push_back(execute_day(d, px, &var, combo.demeaned.row(i), sc.side, sc.cost_rate,
                                                         date, sc.cost_legs));
                }
            }
        }
        return 0;
    });

    std::ostringstream cum;
    cum << "date";
    for (const auto& n : names) cum << ',' << n;
    cum << '\n';
    std::vector<StrategyResult> results;
    for (std::size_t s = 0; s < names.size(); ++s) {
        results.push_back(performance(records[s]));
        const auto& r = results.back();
        trading_summary << name << ',' << names[s] << ',' << to_string(sc.side) << ',' << fmt_num(r.annual_return)
                        << ',' << fmt_num(r.sharpe) << ',' << (r.sharpe_defined ? "true" : "false") << ','
                        << fmt_num(r.max_drawdown) << '\n';
        std::ostringstream log;
        log << "date,traded,entry_u,exit_u,exit_reason,gross_return,net_return\n";
        for (const auto& rec : r.records) {
            log << rec.date << ',' << (rec.traded ? "true" : "false") << ','
                << (rec.entry_u ? std::to_string(*rec.entry_u) : "") << ','
                << (rec.exit_u ? std::to_string(*rec.exit_u) : "") << ',' << to_string(rec.exit_reason) << ','
                << fmt_num(rec.gross_return) << ',' << fmt_num(rec.net_return) << '\n';
        }
        rep.add(fmt::format("{}/trades_{}.csv", name, names[s]), log.str());
    }
    for (std::size_t i = 0; i < T; ++i) {
        cum << data.ocidr.dates[W + i];
        for (const auto& r : results) cum << ',' << fmt_num(r.cumulative[i]);
        cum << '\n';
    }
    rep.add(fmt::format("{}/cumulative_returns.csv", name), cum.str());
}

void diagnose_asset(const AssetData& data, const RunConfig& config, std::ostringstream& os) {
    const auto& y = data.ocidr;
    const auto dm = demean(y);
    const auto ac = autocorr_test(dm.series, config.diagnostic_lags);
    const auto ht = hetero_test(dm.series, config.diagnostic_lags);
    for (const auto* r : {&ac, &ht}) {
        for (std::size_t l = 0; l < r->lags.size(); ++l) {
            os << data.name << ',' << to_string(r->test) << ',' << r->lags[l] << ',' << fmt_num(r->statistics[l]) << ','
               << fmt_num(r->pvalues[l]) << '\n';
        }
    }
    // memory of the integrated curve and of its squares
    const auto w = y.grid.weights();
    std::vector<double> level(y.days());
    std::vector<double> power(y.days());
    for (std::size_t t = 0; t < y.days(); ++t) {
        const auto r = dm.series.row(t);
        double s = 0.0;
        double s2 = 0.0;
        for (std::size_t j = 0; j < r.size(); ++j) {
            s += w[j] * r[j];
            s2 += w[j] * r[j] * r[j];
        }
        level[t] = s;
        power[t] = s2;
    }
    os << data.name << ",MEMORY_Y,," << fmt_num(local_whittle(level).a_hat) << ",\n";
    os << data.name << ",MEMORY_Y2,," << fmt_num(local_whittle(power).a_hat) << ",\n";
}

io::Json fit_summaries(const std::vector<AssetForecasts>& fc) {
    io::Json arr = io::Json::array();
    for (const auto& a : fc) {
        for (const auto& c : a.combos) {
            for (const auto& f : c.fits) {
                io::Json e{{"asset", a.asset},
                           {"model", c.model_id},
                           {"date", f.date},
                           {"K", f.K},
                           {"objective", f.objective},
                           {"converged", f.converged},
                           {"residual_scale", f.residual_scale},
                           {"floor_engagements", f.floor_engagements},
                           {"curve_positivity", f.curve_positivity}};
                if (f.lfpca_stationary) e["lfpca_stationary"] = *f.lfpca_stationary;
                arr.push_back(std::move(e));
            }
        }
    }
    return arr;
}

RunManifest finish(const RunConfig& config, const Reports& rep, io::Json windows, const StageFailure* failure) {
    const std::filesystem::path root(config.output_dir);
    RunManifest m;
    io::Json files = io::Json::array();
    for (const auto& [path, content] : rep.files()) {
        io::write_text_file(root / path, content);
        files.push_back({{"path", path}, {"bytes", content.size()}, {"fnv1a64", fnv1a_hex(content)}});
        m.files.push_back(path);
    }
    m.failed = failure != nullptr;
    m.document = io::Json{{"status", failure ? "FAILED" : "OK"},
                          {"config", to_json(config)},
                          {"seed", config.seed},
                          {"versions",
                           {{"fxvol", kVersion},
                            {"eigen", fmt::format("{}.{}.{}", EIGEN_WORLD_VERSION, EIGEN_MAJOR_VERSION,
                                                  EIGEN_MINOR_VERSION)},
                            {"fmt", FMT_VERSION}}},
                          {"windows", std::move(windows)},
                          {"files", files}};
    if (failure) {
        m.document["failure"] = {{"stage", failure->stage}, {"date", failure->date}, {"error", failure->message}};
    }
    io::write_text_file(root / "manifest.json", m.document.dump(2) + "\n");
    m.files.push_back("manifest.json");
    return m;
}

}  // namespace

RunManifest run_rolling(const RunConfig& config, const std::vector<AssetData>& assets) {
    config.validate();
    Reports rep;
    io::Json windows = io::Json::array();
    try {
        const auto fc = in_stage("forecast", "", [&] { return rolling_forecasts(assets, config); });
        windows = fit_summaries(fc);
        std::ostringstream backtests;
        backtests << "asset,model,zeta,test,lag,pvalue\n";
        std::ostringstream var_summary;
        var_summary << "asset,model,zeta,exceedance_rate\n";
        std::ostringstream trading;
        trading << "asset,strategy,side,annual_return,sharpe,sharpe_defined,max_drawdown\n";
        std::ostringstream diag;
        diag << "asset,test,lag,statistic,pvalue\n";
        for (std::size_t a = 0; a < assets.size(); ++a) {
            evaluate_asset(assets[a], fc[a], config, rep, backtests, var_summary, trading, a);
            in_stage(fmt::format("diagnostics:{}", assets[a].name), "", [&] {
                diagnose_asset(assets[a], config, diag);
                return 0;
            });
        }
        rep.add("backtests.csv", backtests.str());
        rep.add("var_summary.csv", var_summary.str());
        rep.add("trading_summary.csv", trading.str());
        rep.add("diagnostics.csv", diag.str());
    } catch (const StageFailure& f) {
        finish(config, rep, std::move(windows), &f);
        const std::string msg =
            f.date.empty() ? fmt::format("stage {} failed: {}", f.stage, f.message)
                           : fmt::format("stage {} failed at {}: {}", f.stage, f.date, f.message);
        if (f.numeric) throw EstimationError(msg);
        throw InputError(msg);
    }
    return finish(config, rep, std::move(windows), nullptr);
}

RunManifest run_rolling(const RunConfig& config) {
    config.validate();
    std::vector<AssetData> assets;
    for (const auto& a : config.assets) {
        try {
            assets.push_back(load_asset(a, config));
        } catch (const Error& e) {
            Reports rep;
            const StageFailure f{fmt::format("ingest:{}", a.name), "", e.what(), e.is_numeric()};
            finish(config, rep, io::Json::array(), &f);
            throw;
        }
    }
    return run_rolling(config, assets);
}

// ---------------------------------------------------------------- simulation

SimulateConfig simulate_config_from_json(const io::Json& j) {
    try {
        if (!j.is_object()) throw ConfigError("simulate config must be a JSON object");
        reject_unknown(j,
                       {"assets", "days", "grid_J", "d", "a", "b", "common_share", "correlation_length", "spread",
                        "spread_noise", "base_price", "burn_in", "seed", "output_dir"},
                       "simulate config");
        SimulateConfig c;
        c.assets = get_or(j, "assets", c.assets);
        c.days = get_or(j, "days", c.days);
        c.grid_J = get_or(j, "grid_J", c.grid_J);
        c.d = get_or(j, "d", c.d);
        c.a = get_or(j, "a", c.a);
        c.b = get_or(j, "b", c.b);
        c.common_share = get_or(j, "common_share", c.common_share);
        c.correlation_length = get_or(j, "correlation_length", c.correlation_length);
        if (j.contains("spread")) {
            const auto& s = j.at("spread");
            c.spread = s.is_array() ? s.get<std::vector<double>>() : std::vector<double>{s.get<double>()};
        }
        c.spread_noise = get_or(j, "spread_noise", c.spread_noise);
        c.base_price = get_or(j, "base_price", c.base_price);
        c.burn_in = get_or(j, "burn_in", c.burn_in);
        c.seed = get_or(j, "seed", c.seed);
        c.output_dir = get_or(j, "output_dir", c.output_dir);
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(fmt::format("malformed simulate config: {}", e.what()));
    }
}

io::Json to_json(const SimulateConfig& c) {
    return io::Json{{"assets", c.assets},
                    {"days", c.days},
                    {"grid_J", c.grid_J},
                    {"d", c.d},
                    {"a", c.a},
                    {"b", c.b},
                    {"common_share", c.common_share},
                    {"correlation_length", c.correlation_length},
                    {"spread", c.spread},
                    {"spread_noise", c.spread_noise},
                    {"base_price", c.base_price},
                    {"burn_in", c.burn_in},
                    {"seed", c.seed},
                    {"output_dir", c.output_dir}};
}

std::vector<SimulatedAsset> simulate_dataset(const SimulateConfig& c) {
    if (c.assets.empty()) throw ConfigError("simulation needs at least one asset");
    if (c.days < 1) throw ConfigError("simulation needs at least one day");
    if (c.grid_J < 2) throw ConfigError("grid_J must be at least 2");
    if (!(c.common_share >= 0.0 && c.common_share <= 1.0)) throw ConfigError("common_share must lie in [0, 1]");
    if (!(c.base_price > 0.0)) throw ConfigError("base_price must be positive");
    if (!(c.spread_noise >= 0.0)) throw ConfigError("spread_noise must be non-negative");
    const std::size_t J = c.grid_J;
    if (c.spread.size() != 1 && c.spread.size() != J) {
        throw ConfigError(fmt::format("spread must have 1 or {} values, got {}", J, c.spread.size()));
    }
    for (double s : c.spread) {
        if (!(s >= 0.0) || !std::isfinite(s)) throw InputError(fmt::format("spread curve must be non-negative, got {}", s));
    }
    const IntradayGrid grid(J);

    // one rising basis function: intraday variance grows through the session
    BasisSet basis;
    basis.grid = grid;
    basis.functions.resize(1, static_cast<Eigen::Index>(J));
    for (std::size_t j = 0; j < J; ++j) basis.functions(0, static_cast<Eigen::Index>(j)) = 0.5 + grid.points()[j];
    {
        double n2 = 0.0;
        for (std::size_t j = 0; j < J; ++j) n2 += grid.weights()[j] * basis.functions(0, static_cast<Eigen::Index>(j)) * basis.functions(0, static_cast<Eigen::Index>(j));
        basis.functions /= std::sqrt(n2);
    }
    basis.eigenvalues = {1.0};
    basis.variation_explained = {1.0};

    ProjectedParams p;
    p.D = Vector::Constant(1, c.d);
    p.A = Matrix::Constant(1, 1, c.a);
    p.B = Matrix::Constant(1, 1, c.b);

    ErrorModel em;
    em.correlation_length = c.correlation_length;
    const std::size_t total = c.days + c.burn_in;
    const Matrix common = simulate_errors(grid, em, total, stats::derive_seed(c.seed, 0));
    const std::vector<std::string> dates = synthetic_dates(c.days + 1);

    std::vector<SimulatedAsset> out;
    for (std::size_t a = 0; a < c.assets.size(); ++a) {
        const Matrix own = simulate_errors(grid, em, total, stats::derive_seed(c.seed, 1 + a));
        const Matrix eps = std::sqrt(c.common_share) * common + std::sqrt(1.0 - c.common_share) * own;
        SimulationOptions opts;
        opts.burn_in = c.burn_in;
        opts.innovations = &eps;
        CurveSeries y = simulate(p, basis, em, c.days, 0, opts);
        y.dates.assign(dates.begin() + 1, dates.end());

        const Matrix spread_noise = simulate_errors(grid, em, c.days + 1, stats::derive_seed(c.seed, 100 + a));
        QuotePanel q;
        q.grid = grid;
        q.dates = dates;
        const auto rows = static_cast<Eigen::Index>(c.days + 1);
        q.mid.resize(rows, static_cast<Eigen::Index>(J));
        q.bid.resize(rows, static_cast<Eigen::Index>(J));
        q.ask.resize(rows, static_cast<Eigen::Index>(J));
        double close = c.base_price;
        for (Eigen::Index t = 0; t < rows; ++t) {
            for (Eigen::Index j = 0; j < static_cast<Eigen::Index>(J); ++j) {
                const double mid = t == 0 ? c.base_price : close * std::exp(y.values(t - 1, j) / 100.0);
                const double s0 = c.spread.size() == 1 ? c.spread[0] : c.spread[static_cast<std::size_t>(j)];
                const double s = s0 * std::exp(c.spread_noise * spread_noise(t, j));
                q.mid(t, j) = mid;
                q.bid(t, j) = mid - 0.5 * s;
                q.ask(t, j) = mid + 0.5 * s;
                if (!(q.bid(t, j) > 0.0)) throw InputError("spread too wide for the simulated price level");
            }
            close = q.mid(t, static_cast<Eigen::Index>(J) - 1);
        }
        out.push_back({c.assets[a], std::move(y), std::move(q)});
    }
    return out;
}

std::vector<std::string> run_simulate(const SimulateConfig& c) {
    const auto data = simulate_dataset(c);
    const std::filesystem::path root(c.output_dir);
    const SessionSpec session = SessionSpec::full_day(c.grid_J);
    std::vector<std::string> written;
    RunConfig rc;
    rc.grid_J = c.grid_J;
    rc.seed = c.seed;
    rc.output_dir = "run";
    if (data.size() < 2) rc.basis_methods = {"TFPCA", "DFPCA", "LFPCA"};
    for (const auto& a : data) {
        std::ostringstream q;
        io::write_quotes(q, a.quotes, session);
        io::write_text_file(root / (a.name + "_quotes.csv"), q.str());
        written.push_back(a.name + "_quotes.csv");
        std::ostringstream y;
        io::write_curve_series(y, a.ocidr);
        io::write_text_file(root / (a.name + "_ocidr.csv"), y.str());
        written.push_back(a.name + "_ocidr.csv");
        rc.assets.push_back({a.name, a.name + "_quotes.csv"});
    }
    if (rc.window >= c.days) rc.window = std::max<std::size_t>(100, c.days * 3 / 4);
    io::write_text_file(root / "run_config.json", to_json(rc).dump(2) + "\n");
    written.push_back("run_config.json");
    io::write_text_file(root / "simulate_config.json", to_json(c).dump(2) + "\n");
    written.push_back("simulate_config.json");
    return written;
}

}  // namespace fxvol
