// Command-line front end. Exit codes: 0 success, 1 input error, 2 numeric failure.

#include "fxvol/basis.hpp"
#include "fxvol/curvebuild.hpp"
#include "fxvol/errors.hpp"
#include "fxvol/evalstat.hpp"
#include "fxvol/fgarch.hpp"
#include "fxvol/io.hpp"
#include "fxvol/longmem.hpp"
#include "fxvol/pipeline.hpp"
#include "fxvol/risk.hpp"
#include "fxvol/stats.hpp"
#include "fxvol/trading.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

namespace fs = std::filesystem;
using namespace fxvol;

namespace {

struct Globals {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::string output_dir = ".";
};

fs::path out_path(const Globals& g, const std::string& name) { return fs::path(g.output_dir) / name; }

std::ifstream open_in(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", path));
    return in;
}

CurveSeries read_curves(const std::string& path, CurveKind kind = CurveKind::GENERIC) {
    auto in = open_in(path);
    return io::read_curve_series(in, kind);
}

BasisSet read_basis(const std::string& path) {
    auto in = open_in(path);
    return io::read_basis_set(in);
}

void write_curves(const Globals& g, const std::string& name, const CurveSeries& s) {
    std::ostringstream os;
    io::write_curve_series(os, s);
    io::write_text_file(out_path(g, name), os.str());
}

void write_basis(const Globals& g, const std::string& name, const BasisSet& b) {
    std::ostringstream os;
    io::write_basis_set(os, b);
    io::write_text_file(out_path(g, name), os.str());
}

FGarchFit read_fit(const std::string& path) {
    io::Json j;
    try {
        j = io::Json::parse(io::read_text_file(path));
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("{}: {}", path, e.what()), 0);
    }
    return io::fit_from_json(j);
}

// date,value two-column files (realised volatility)
std::pair<std::vector<std::string>, std::vector<double>> read_series(const std::string& path) {
    auto in = open_in(path);
    std::string line;
    std::getline(in, line);
    std::vector<std::string> dates;
    std::vector<double> values;
    std::size_t n = 1;
    while (std::getline(in, line)) {
        ++n;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = io::split_csv_line(line);
        if (f.size() != 2) throw ParseError("expected date,value", n);
        dates.emplace_back(f[0]);
        values.push_back(io::parse_double(f[1], n));
    }
    return {dates, values};
}

std::uint64_t seed_or(const Globals& g, std::uint64_t fallback) { return g.seed.value_or(fallback); }

std::string num(double x) { return std::isfinite(x) ? io::format_double(x) : "NA"; }

IngestResult ingest_file(const std::string& path, std::size_t J, const std::vector<std::string>& exclude,
                         double max_missing) {
    auto in = open_in(path);
    IngestOptions opts;
    opts.exclude_dates = exclude;
    opts.max_missing_share = max_missing;
    return ingest_quotes(in, IntradayGrid(J), opts);
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Functional GARCH volatility curves for intraday FX"};
    app.require_subcommand(1);
    Globals g;
    app.add_option("--config", g.config, "JSON configuration (RunConfig for run, simulation settings for simulate)");
    app.add_option("--seed", g.seed, "random seed overriding the configuration");
    app.add_option("--output-dir", g.output_dir, "directory for emitted files");
    app.fallthrough();

    // ingest
    std::string quotes;
    std::size_t grid_J = 48;
    std::vector<std::string> exclude;
    double max_missing = 0.05;
    auto* ingest = app.add_subcommand("ingest", "snap quotes onto the grid and report dropped days");
    ingest->add_option("--quotes", quotes, "quotes CSV (date,time,bid,ask[,mid])")->required();
    ingest->add_option("--grid-J", grid_J, "grid points per day");
    ingest->add_option("--exclude-dates", exclude, "dates to drop");
    ingest->add_option("--max-missing", max_missing, "largest share of missing slots kept");

    auto* curves = app.add_subcommand("curves", "build OCIDR, OCIBAS, demeaned and squared curves and realised volatility");
    curves->add_option("--quotes", quotes)->required();
    curves->add_option("--grid-J", grid_J);
    curves->add_option("--exclude-dates", exclude);
    curves->add_option("--max-missing", max_missing);

    // basis
    std::vector<std::string> curve_files;
    std::string method = "TFPCA";
    std::size_t max_components = 5;
    std::optional<std::size_t> bandwidth;
    std::string stationary = "auto";
    auto* basis = app.add_subcommand("basis", "data-driven basis from squared demeaned curves");
    basis->add_option("--curves", curve_files, "OCIDR curve CSV (repeat for MFPCA)")->required();
    basis->add_option("--method", method, "TFPCA, DFPCA, LFPCA or MFPCA");
    basis->add_option("--max-components", max_components, "upper bound for the eigenvalue ratio");
    basis->add_option("--bandwidth", bandwidth, "Bartlett bandwidth");
    basis->add_option("--stationary", stationary, "LFPCA branch: auto, yes or no");

    // fit
    std::string curve_file;
    std::string basis_file;
    std::string model = "FGARCH11";
    std::string covariate;
    std::vector<std::size_t> blocks;
    std::size_t starts = 5;
    auto* fit = app.add_subcommand("fit", "QMLE fit of FGARCH(1,1) or FGARCH-X");
    fit->add_option("--curves", curve_file, "OCIDR curve CSV")->required();
    fit->add_option("--basis", basis_file, "basis CSV")->required();
    fit->add_option("--model", model, "FGARCH11 or FGARCHX");
    fit->add_option("--covariate", covariate, "covariate curve CSV (FGARCHX)");
    fit->add_option("--blocks", blocks, "block sizes of a concatenated basis");
    fit->add_option("--starts", starts, "optimiser starts");

    // forecast
    std::string fit_file;
    auto* forecast = app.add_subcommand("forecast", "filter a stored fit through new curves and forecast one step ahead");
    forecast->add_option("--fit", fit_file, "fit JSON")->required();
    forecast->add_option("--curves", curve_file, "OCIDR curves after the fit's last day")->required();
    forecast->add_option("--covariate", covariate, "covariate curves aligned with --curves");

    // evaluate
    std::string proxy_file;
    std::string rv_file;
    std::vector<std::string> forecast_specs;
    double alpha = 0.05;
    std::size_t mcs_b = 2000;
    auto* evaluate = app.add_subcommand("evaluate", "losses, Diebold-Mariano and model confidence set");
    evaluate->add_option("--proxy", proxy_file, "squared demeaned curves for the forecast days");
    evaluate->add_option("--rv", rv_file, "realised volatility CSV (date,rv)");
    evaluate->add_option("--forecast", forecast_specs, "MODEL=variance_curves.csv")->required();
    evaluate->add_option("--alpha", alpha, "MCS size");
    evaluate->add_option("--mcs-bootstrap", mcs_b, "MCS bootstrap replicates");

    // var
    std::string residual_file;
    double zeta = 0.01;
    std::size_t boot_b = 10000;
    auto* var = app.add_subcommand("var", "intraday VaR curves from variance forecasts and bootstrapped residuals");
    var->add_option("--residuals", residual_file, "fitted residual curves")->required();
    var->add_option("--forecast", curve_file, "variance forecast curves")->required();
    var->add_option("--zeta", zeta, "quantile level");
    var->add_option("--bootstrap", boot_b, "bootstrap replicates (>= 1000)");

    // backtest
    std::string var_file;
    std::string asset_name = "asset";
    std::string model_name = "model";
    std::vector<std::size_t> lags{1, 5, 10, 20};
    auto* backtest = app.add_subcommand("backtest", "unbiasedness and independence backtests of VaR curves");
    backtest->add_option("--returns", curve_file, "demeaned return curves")->required();
    backtest->add_option("--var", var_file, "VaR curves")->required();
    backtest->add_option("--zeta", zeta);
    backtest->add_option("--lags", lags);
    backtest->add_option("--asset", asset_name);
    backtest->add_option("--model", model_name);

    // trade
    std::string side = "LONG";
    std::size_t lookback = 102;
    double cost_rate = 0.000003;
    std::string demeaned_file;
    std::size_t first_day = 0;
    auto* trade = app.add_subcommand("trade", "intraday trading strategy with optional VaR stop");
    trade->add_option("--curves", curve_file, "OCIDR curves")->required();
    trade->add_option("--side", side, "LONG or SHORT");
    trade->add_option("--lookback", lookback);
    trade->add_option("--cost-rate", cost_rate);
    trade->add_option("--var", var_file, "VaR curves for the traded days (enables the stop)");
    trade->add_option("--demeaned", demeaned_file, "demeaned curves for the traded days (with --var)");
    trade->add_option("--first-day", first_day, "index of the first traded day (default: lookback)");

    auto* run = app.add_subcommand("run", "end-to-end rolling evaluation from a RunConfig");
    auto* simulate = app.add_subcommand("simulate", "write a synthetic quote dataset");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    }

    try {
        if (g.output_dir != ".") fs::create_directories(g.output_dir);

        if (*ingest) {
            const auto r = ingest_file(quotes, grid_J, exclude, max_missing);
            std::ostringstream os;
            os << "date,missing_share\n";
            for (std::size_t i = 0; i < r.report.dropped_dates.size(); ++i) {
                os << r.report.dropped_dates[i] << ',' << num(r.report.missing_share[i]) << '\n';
            }
            io::write_text_file(out_path(g, "dropped_days.csv"), os.str());
            std::ostringstream q;
            io::write_quotes(q, r.panel, SessionSpec::full_day(grid_J));
            io::write_text_file(out_path(g, "quotes_grid.csv"), q.str());
            fmt::print("{} days kept, {} dropped, {} cells interpolated\n", r.panel.days(),
                       r.report.dropped_dates.size(), r.report.interpolated_cells);
        } else if (*curves) {
            const auto r = ingest_file(quotes, grid_J, exclude, max_missing);
            const CurveSeries y = build_ocidr(r.panel);
            write_curves(g, "ocidr.csv", y);
            write_curves(g, "ocibas.csv", build_ocibas(r.panel));
            const auto dm = demean(y);
            write_curves(g, "demeaned.csv", dm.series);
            write_curves(g, "squared.csv", square_series(dm.series));
            const auto rv = realised_vol(r.panel);
            std::ostringstream os;
            os << "date,rv\n";
            for (std::size_t t = 0; t < rv.size(); ++t) os << y.dates[t] << ',' << num(rv[t]) << '\n';
            io::write_text_file(out_path(g, "rv.csv"), os.str());
            fmt::print("{} curves on {} points\n", y.days(), y.points());
        } else if (*basis) {
            std::vector<CurveSeries> sq;
            for (const auto& f : curve_files) sq.push_back(square_series(demean(read_curves(f)).series));
            if (method == "MFPCA") {
                const auto r = mfpca(sq, max_components, bandwidth);
                write_basis(g, "basis_common.csv", r.common);
                for (std::size_t i = 0; i < r.specific.size(); ++i) {
                    write_basis(g, fmt::format("basis_specific_{}.csv", i + 1), r.specific[i]);
                    write_basis(g, fmt::format("basis_{}.csv", i + 1), concatenate(r.common, r.specific[i]));
                }
                fmt::print("K common = {}\n", r.common.size());
            } else {
                if (sq.size() != 1) throw InputError("only MFPCA accepts several curve files");
                BasisSet b;
                if (method == "TFPCA") {
                    b = tfpca(sq[0], max_components + 1);
                } else if (method == "DFPCA") {
                    b = dfpca(sq[0], max_components + 1, bandwidth);
                } else if (method == "LFPCA") {
                    bool st = stationary == "yes";
                    if (stationary == "auto") {
                        const BasisSet first = tfpca(sq[0], 1);
                        st = score_stationarity_check(sq[0], first.function(0)).stationary;
                    } else if (stationary != "no" && stationary != "yes") {
                        throw InputError("--stationary must be auto, yes or no");
                    }
                    b = lfpca(sq[0], max_components + 1, st, bandwidth);
                } else {
                    throw InputError(fmt::format("unknown basis method '{}'", method));
                }
                b = select_dimension(b, max_components);
                write_basis(g, "basis.csv", b);
                fmt::print("K = {}\n", b.size());
            }
        } else if (*fit) {
            const auto dm = demean(read_curves(curve_file, CurveKind::OCIDR));
            const BasisSet b = read_basis(basis_file);
            ModelSpec spec;
            spec.kind = model_kind_from_string(model);
            spec.basis_method = std::string(to_string(b.method));
            spec.seed = seed_or(g, 0);
            spec.starts = starts;
            spec.blocks = blocks;
            std::optional<CurveSeries> x;
            if (spec.kind == ModelKind::FGARCHX) {
                if (covariate.empty()) throw InputError("FGARCHX needs --covariate");
                x = read_curves(covariate, CurveKind::OCIBAS);
            }
            const auto f = qmle_fit(spec, dm.series, b, x ? &*x : nullptr, {dm.mean.data(), dm.series.points()});
            io::write_text_file(out_path(g, "fit.json"), io::to_json(f).dump(2) + "\n");
            write_curves(g, "sigma2.csv", f.sigma2);
            write_curves(g, "residuals.csv", f.residuals);
            fmt::print("objective {} converged {} residual scale {}\n", f.objective, f.converged, f.residual_scale);
        } else if (*forecast) {
            const FGarchFit f = read_fit(fit_file);
            const CurveSeries y = read_curves(curve_file, CurveKind::OCIDR);
            std::optional<CurveSeries> x;
            if (f.params.has_x()) {
                if (covariate.empty()) throw InputError("the fit has a covariate; pass --covariate");
                x = read_curves(covariate, CurveKind::OCIBAS);
                require_aligned(y, *x, "forecast covariate");
            }
            if (f.squared_scores.rows() != 1) throw InputError("fit document carries no filter state");
            const std::size_t J = y.points();
            const auto K = static_cast<Eigen::Index>(f.params.K());
            // day 1 of the output comes from the stored state; later days from the supplied curves
            Vector h = f.variance_scores.row(0).transpose();
            Vector s_prev = f.squared_scores.row(0).transpose();
            Vector x_prev = f.params.has_x() ? Vector(f.x_scores.row(0).transpose()) : Vector();
            Matrix out(static_cast<Eigen::Index>(y.days() + 1), static_cast<Eigen::Index>(J));
            std::vector<std::string> dates = y.dates;
            dates.emplace_back("next");
            for (std::size_t t = 0; t <= y.days(); ++t) {
                const Vector c = next_coefficients(f.params, {s_prev.data(), static_cast<std::size_t>(K)},
                                                   {h.data(), static_cast<std::size_t>(K)},
                                                   {x_prev.data(), static_cast<std::size_t>(x_prev.size())});
                out.row(static_cast<Eigen::Index>(t)) =
                    variance_curve({c.data(), static_cast<std::size_t>(K)}, f.basis, f.residual_scale,
                                   f.spec.variance_floor)
                        .transpose();
                if (t == y.days()) break;
                h = gram_matrix(f.basis) * c;
                std::vector<double> sq(J);
                for (std::size_t j = 0; j < J; ++j) {
                    const double e = y.values(static_cast<Eigen::Index>(t), static_cast<Eigen::Index>(j)) -
                                     f.mean_curve[static_cast<Eigen::Index>(j)];
                    sq[j] = e * e;
                }
                s_prev = project(sq, f.basis);
                if (x) x_prev = project(x->row(t), f.basis);
            }
            write_curves(g, "forecast.csv", CurveSeries(y.grid, dates, std::move(out), CurveKind::VARIANCE));
            fmt::print("{} forecasts written\n", y.days() + 1);
        } else if (*evaluate) {
            std::vector<std::string> names;
            std::vector<CurveSeries> fc;
            for (const auto& spec : forecast_specs) {
                const auto eq = spec.find('=');
                if (eq == std::string::npos) throw InputError(fmt::format("--forecast expects MODEL=path, got '{}'", spec));
                names.push_back(spec.substr(0, eq));
                fc.push_back(read_curves(spec.substr(eq + 1), CurveKind::VARIANCE));
            }
            std::vector<std::pair<std::string, std::vector<LossSeries>>> sets;
            if (!proxy_file.empty()) {
                const CurveSeries proxy = read_curves(proxy_file);
                for (auto k : {LossKind::MSFE, LossKind::QLIKE}) {
                    std::vector<LossSeries> ls;
                    for (std::size_t m = 0; m < fc.size(); ++m) ls.push_back(loss_intraday(proxy, fc[m], k, names[m]));
                    sets.emplace_back(fmt::format("INTRADAY_{}", to_string(k)), std::move(ls));
                }
            }
            if (!rv_file.empty()) {
                const auto [dates, rv] = read_series(rv_file);
                for (auto k : {LossKind::MSFE, LossKind::QLIKE}) {
                    std::vector<LossSeries> ls;
                    for (std::size_t m = 0; m < fc.size(); ++m) {
                        if (fc[m].dates != dates) throw AlignmentError("forecast and realised volatility dates differ");
                        std::vector<double> close(fc[m].days());
                        for (std::size_t t = 0; t < close.size(); ++t) close[t] = fc[m].row(t)[fc[m].points() - 1];
                        ls.push_back(loss_interdaily(rv, close, k, names[m]));
                    }
                    sets.emplace_back(fmt::format("INTERDAILY_{}", to_string(k)), std::move(ls));
                }
            }
            if (sets.empty()) throw InputError("evaluate needs --proxy and/or --rv");
            std::ostringstream losses;
            losses << "model,horizon,loss_kind,mean_loss\n";
            std::size_t idx = 0;
            for (const auto& [tag, ls] : sets) {
                for (const auto& l : ls) {
                    losses << l.model_id << ',' << to_string(l.horizon) << ',' << to_string(l.loss_kind) << ','
                           << num(l.mean) << '\n';
                }
                std::ostringstream dm;
                dm << "modelA,modelB,dm_stat,pvalue\n";
                for (std::size_t i = 0; i < ls.size(); ++i) {
                    for (std::size_t k = i + 1; k < ls.size(); ++k) {
                        const auto r = dm_test(ls[i], ls[k]);
                        dm << ls[i].model_id << ',' << ls[k].model_id << ',' << num(r.statistic) << ','
                           << num(r.pvalue) << '\n';
                    }
                }
                io::write_text_file(out_path(g, fmt::format("dm_{}.csv", tag)), dm.str());
                if (ls.size() >= 2) {
                    const auto r = mcs(ls, alpha, mcs_b, std::nullopt, stats::derive_seed(seed_or(g, 0), idx));
                    std::string joined;
                    for (std::size_t m = 0; m < r.surviving.size(); ++m) joined += (m ? ";" : "") + r.surviving[m];
                    io::write_text_file(out_path(g, fmt::format("mcs_{}.csv", tag)),
                                        fmt::format("alpha,surviving_models\n{},{}\n", num(alpha), joined));
                }
                ++idx;
            }
            io::write_text_file(out_path(g, "losses.csv"), losses.str());
        } else if (*var) {
            const CurveSeries res = read_curves(residual_file, CurveKind::RESIDUAL);
            const CurveSeries f = read_curves(curve_file, CurveKind::VARIANCE);
            const Vector q = residual_quantile_curve(res, zeta, boot_b, seed_or(g, 0));
            Matrix out(static_cast<Eigen::Index>(f.days()), static_cast<Eigen::Index>(f.points()));
            for (std::size_t t = 0; t < f.days(); ++t) {
                std::vector<double> sd(f.points());
                for (std::size_t j = 0; j < sd.size(); ++j) sd[j] = std::sqrt(f.row(t)[j]);
                out.row(static_cast<Eigen::Index>(t)) =
                    var_forecast(sd, {q.data(), sd.size()}, zeta, f.dates[t]).curve.transpose();
            }
            write_curves(g, "var.csv", CurveSeries(f.grid, f.dates, std::move(out), CurveKind::GENERIC));
        } else if (*backtest) {
            const CurveSeries y = read_curves(curve_file);
            const CurveSeries v = read_curves(var_file);
            require_aligned(y, v, "backtest");
            std::vector<VaRCurve> curves;
            for (std::size_t t = 0; t < v.days(); ++t) {
                curves.push_back({zeta, Eigen::Map<const Vector>(v.row(t).data(), static_cast<Eigen::Index>(v.points())),
                                  v.dates[t]});
            }
            const auto viol = violations(y, curves, zeta < 0.5 ? Side::LOWER : Side::UPPER);
            const auto ub = backtest_unbiasedness(viol);
            const auto ind = backtest_independence(viol, lags);
            std::ostringstream os;
            os << "asset,model,zeta,test,lag,pvalue\n";
            os << asset_name << ',' << model_name << ',' << num(zeta) << ",UNBIASEDNESS,," << num(ub.pvalue) << '\n';
            for (const auto& r : ind) {
                os << asset_name << ',' << model_name << ',' << num(zeta) << ",INDEPENDENCE," << r.lag << ','
                   << num(r.pvalue) << '\n';
            }
            io::write_text_file(out_path(g, "backtest.csv"), os.str());
            fmt::print("exceedance rate {}\n", stats::mean(exceedance_rates(viol)));
        } else if (*trade) {
            const CurveSeries y = read_curves(curve_file, CurveKind::OCIDR);
            const TradeSide ts = trade_side_from_string(side);
            const std::size_t start = first_day == 0 ? lookback : first_day;
            if (start < lookback || start >= y.days()) throw InputError("no tradable days after the lookback");
            std::optional<CurveSeries> v;
            std::optional<CurveSeries> dm;
            if (!var_file.empty()) {
                if (demeaned_file.empty()) throw InputError("--var needs --demeaned");
                v = read_curves(var_file);
                dm = read_curves(demeaned_file);
                require_aligned(*v, *dm, "trade");
                if (v->days() != y.days() - start) throw AlignmentError("VaR curves must cover exactly the traded days");
            }
            std::vector<TradeRecord> recs;
            for (std::size_t t = start; t < y.days(); ++t) {
                const Vector fcast = functional_mean_forecast(y.slice(t - lookback, lookback), lookback);
                const Decision d = signal({fcast.data(), y.points()}, ts);
                const Vector px = prices_from_ocidr(y.row(t));
                std::optional<VaRCurve> vc;
                if (v) {
                    const std::size_t i = t - start;
                    if (v->dates[i] != y.dates[t]) throw AlignmentError("VaR curve dates differ from traded days");
                    vc = VaRCurve{zeta, Eigen::Map<const Vector>(v->row(i).data(), static_cast<Eigen::Index>(y.points())),
                                  v->dates[i]};
                }
                recs.push_back(execute_day(d, {px.data(), y.points()}, vc ? &*vc : nullptr,
                                           dm ? dm->row(t - start) : std::span<const double>{}, ts, cost_rate, y.dates[t]));
            }
            const auto r = performance(recs);
            std::ostringstream log;
            log << "date,traded,entry_u,exit_u,exit_reason,gross_return,net_return\n";
            for (const auto& rec : r.records) {
                log << rec.date << ',' << (rec.traded ? "true" : "false") << ','
                    << (rec.entry_u ? std::to_string(*rec.entry_u) : "") << ','
                    << (rec.exit_u ? std::to_string(*rec.exit_u) : "") << ',' << to_string(rec.exit_reason) << ','
                    << num(rec.gross_return) << ',' << num(rec.net_return) << '\n';
            }
            io::write_text_file(out_path(g, "trades.csv"), log.str());
            io::write_text_file(out_path(g, "trading_summary.csv"),
                                fmt::format("strategy,side,annual_return,sharpe,sharpe_defined,max_drawdown\n{},{},{},{},{},{}\n",
                                            v ? "VAR" : "BENCHMARK", side, num(r.annual_return), num(r.sharpe),
                                            r.sharpe_defined ? "true" : "false", num(r.max_drawdown)));
            fmt::print("annual return {} sharpe {} max drawdown {}\n", r.annual_return, r.sharpe, r.max_drawdown);
        } else if (*run) {
            if (g.config.empty()) throw ConfigError("run needs --config");
            RunConfig cfg = load_run_config(g.config);
            if (g.seed) cfg.seed = *g.seed;
            if (app.get_option("--output-dir")->count() > 0) cfg.output_dir = g.output_dir;
            const auto m = run_rolling(cfg);
            fmt::print("{} files written to {}\n", m.files.size(), cfg.output_dir);
        } else if (*simulate) {
            SimulateConfig cfg;
            if (!g.config.empty()) {
                io::Json j;
                try {
                    j = io::Json::parse(io::read_text_file(g.config));
                } catch (const nlohmann::json::exception& e) {
                    throw ConfigError(fmt::format("{} is not valid JSON: {}", g.config, e.what()));
                }
                cfg = simulate_config_from_json(j);
            }
            if (g.seed) cfg.seed = *g.seed;
            if (app.get_option("--output-dir")->count() > 0) cfg.output_dir = g.output_dir;
            const auto files = run_simulate(cfg);
            fmt::print("{} files written to {}\n", files.size(), cfg.output_dir);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.is_numeric() ? 2 : 1;
    } catch (const fs::filesystem_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << '\n';
        return 2;
    }
    return 0;
}
