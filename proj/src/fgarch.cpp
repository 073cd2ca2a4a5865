#include "fxvol/fgarch.hpp"

#include "fxvol/errors.hpp"
#include "fxvol/simd.hpp"
#include "fxvol/stats.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

namespace fxvol {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kThetaFloor = 1e-12;
const double kEtaFloor = std::log(kThetaFloor);

void check_basis(const BasisSet& basis) {
    if (basis.size() == 0) throw InputError("basis has no functions");
    if (static_cast<std::size_t>(basis.functions.cols()) != basis.grid.size()) {
        throw ShapeError("basis functions do not match their grid");
    }
}

std::vector<std::size_t> block_labels(const std::vector<std::size_t>& blocks, std::size_t k) {
    std::vector<std::size_t> label(k, 0);
    if (blocks.empty()) return label;
    std::size_t total = 0;
    for (auto b : blocks) total += b;
    if (total != k) throw ConfigError(fmt::format("parameter blocks sum to {} but the basis has {} functions", total, k));
    std::size_t pos = 0;
    for (std::size_t b = 0; b < blocks.size(); ++b) {
        for (std::size_t i = 0; i < blocks[b]; ++i) label[pos++] = b;
    }
    return label;
}

struct OptimResult {
    std::vector<double> eta;
    double value = kInf;
    bool converged = false;
    std::vector<double> trace;
};

// BFGS on the log-parameters with Armijo backtracking. Only iterates that pass
// the sufficient-decrease test are accepted, so the trace is non-increasing.
OptimResult bfgs(const QmleProblem& problem, std::vector<double> x, std::size_t max_iterations) {
    const std::size_t n = x.size();
    OptimResult out;
    std::vector<double> g(n), g1(n), x1(n), p(n);
    double f = problem.evaluate(x, g);
    if (!std::isfinite(f)) return out;
    out.trace.push_back(f);

    Eigen::MatrixXd H = Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    bool identity = true;
    bool first = true;
    for (std::size_t iter = 0; iter < max_iterations; ++iter) {
        Eigen::Map<const Eigen::VectorXd> gv(g.data(), static_cast<Eigen::Index>(n));
        Eigen::VectorXd dir = -(H * gv);
        double slope = gv.dot(dir);
        if (!(slope < 0.0)) {
            H.setIdentity();
            identity = true;
            dir = -gv;
            slope = gv.dot(dir);
        }
        if (slope == 0.0) {
            out.converged = true;
            break;
        }
        const double big = dir.cwiseAbs().maxCoeff();
        if (big > 3.0) {
            dir *= 3.0 / big;
            slope = gv.dot(dir);
        }

        double step = 1.0;
        double f1 = kInf;
        bool accepted = false;
        for (int k = 0; k < 50; ++k) {
            for (std::size_t i = 0; i < n; ++i) x1[i] = x[i] + step * dir(static_cast<Eigen::Index>(i));
            f1 = problem.evaluate(x1, g1);
            if (std::isfinite(f1) && f1 <= f + 1e-4 * step * slope) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            if (!identity) {
                H.setIdentity();
                identity = true;
                continue;
            }
            double gmax = 0.0;
            for (double v : g) gmax = std::max(gmax, std::fabs(v));
            out.converged = gmax < 1e-5;
            break;
        }

        Eigen::VectorXd sv(static_cast<Eigen::Index>(n)), yv(static_cast<Eigen::Index>(n));
        for (std::size_t i = 0; i < n; ++i) {
            sv(static_cast<Eigen::Index>(i)) = x1[i] - x[i];
            yv(static_cast<Eigen::Index>(i)) = g1[i] - g[i];
        }
        const double sy = sv.dot(yv);
        if (sy > 1e-12) {
            if (first) {
                H *= sy / yv.squaredNorm();
                first = false;
            }
            const double rho = 1.0 / sy;
            const Eigen::VectorXd Hy = H * yv;
            H += (rho * rho * yv.dot(Hy) + rho) * (sv * sv.transpose()) - rho * (Hy * sv.transpose() + sv * Hy.transpose());
            identity = false;
        }
        const double improvement = f - f1;
        x.swap(x1);
        g.swap(g1);
        f = f1;
        out.trace.push_back(f);
        if (improvement < 1e-8) {
            out.converged = true;
            break;
        }
    }
    out.eta = std::move(x);
    out.value = f;
    return out;
}

ProjectedParams starting_params(std::size_t k, bool with_x, const Vector& s_mean, const Vector& s_absmean,
                                const Vector& x_absmean, std::size_t index, std::uint64_t seed) {
    const auto K = static_cast<Eigen::Index>(k);
    std::mt19937_64 rng(stats::derive_seed(seed, index));
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ProjectedParams p;
    p.A = Matrix::Constant(K, K, 1e-3);
    p.B = Matrix::Constant(K, K, 1e-3);
    p.D.resize(K);
    for (Eigen::Index l = 0; l < K; ++l) {
        double a = 0.1;
        double b = 0.6;
        double dscale = 1.0;
        if (index > 0) {
            a = 0.05 + 0.3 * unif(rng);
            b = 0.3 + 0.55 * unif(rng);
            if (a + b > 0.95) b = 0.95 - a;
            dscale = 0.5 + 1.5 * unif(rng);
        }
        p.A(l, l) = a;
        p.B(l, l) = b;
        const double level = s_mean(l) > 0.0 ? s_mean(l) : 1e-2 * s_absmean(l);
        p.D(l) = std::max((1.0 - a - b) * level * dscale, kThetaFloor);
    }
    if (index > 0) {
        for (Eigen::Index i = 0; i < K; ++i) {
            for (Eigen::Index j = 0; j < K; ++j) {
                if (i == j) continue;
                p.A(i, j) = 1e-3 + 0.01 * unif(rng);
                p.B(i, j) = 1e-3 + 0.01 * unif(rng);
            }
        }
    }
    if (with_x) {
        // separate stream so the D, A, B draws match the model without covariate
        std::mt19937_64 xrng(stats::derive_seed(seed, 1000 + index));
        p.G = Matrix::Constant(K, K, 1e-4);
        for (Eigen::Index l = 0; l < K; ++l) {
            const double ratio = x_absmean(l) > 0.0 ? s_absmean(l) / x_absmean(l) : 1.0;
            p.G(l, l) = std::max(0.02 * ratio * (index > 0 ? 0.5 + unif(xrng) : 1.0), kThetaFloor);
        }
    }
    return p;
}

}  // namespace

std::string_view to_string(ModelKind kind) noexcept { return kind == ModelKind::FGARCHX ? "FGARCHX" : "FGARCH11"; }

ModelKind model_kind_from_string(std::string_view name) {
    if (name == "FGARCH11") return ModelKind::FGARCH11;
    if (name == "FGARCHX") return ModelKind::FGARCHX;
    throw InputError(fmt::format("unknown model kind '{}'", name));
}

Vector project(std::span<const double> curve, const BasisSet& basis) {
    check_basis(basis);
    if (curve.size() != basis.grid.size()) {
        throw ShapeError(fmt::format("curve has {} points, basis grid has {}", curve.size(), basis.grid.size()));
    }
    const auto w = basis.grid.weights();
    Vector out(static_cast<Eigen::Index>(basis.size()));
    for (std::size_t l = 0; l < basis.size(); ++l) {
        out(static_cast<Eigen::Index>(l)) = simd::weighted_dot(curve, basis.function(l), w);
    }
    return out;
}

Matrix project_series(const CurveSeries& series, const BasisSet& basis) {
    check_basis(basis);
    if (series.points() != basis.grid.size()) throw ShapeError("series and basis are on different grids");
    Matrix out(static_cast<Eigen::Index>(series.days()), static_cast<Eigen::Index>(basis.size()));
    for (std::size_t t = 0; t < series.days(); ++t) {
        out.row(static_cast<Eigen::Index>(t)) = project(series.row(t), basis).transpose();
    }
    return out;
}

Matrix gram_matrix(const BasisSet& basis) {
    check_basis(basis);
    const auto K = static_cast<Eigen::Index>(basis.size());
    const auto w = basis.grid.weights();
    Matrix P(K, K);
    for (Eigen::Index i = 0; i < K; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
            P(i, j) = simd::weighted_dot(basis.function(static_cast<std::size_t>(i)),
                                         basis.function(static_cast<std::size_t>(j)), w);
            P(j, i) = P(i, j);
        }
    }
    return P;
}

Vector variance_curve(std::span<const double> coefficients, const BasisSet& basis, double scale,
                      double variance_floor, std::size_t* engaged) {
    if (coefficients.size() != basis.size()) throw ShapeError("coefficient vector does not match the basis");
    std::vector<double> acc(basis.grid.size(), 0.0);
    for (std::size_t l = 0; l < basis.size(); ++l) simd::axpy(coefficients[l], basis.function(l), acc);
    Vector out(static_cast<Eigen::Index>(acc.size()));
    for (std::size_t j = 0; j < acc.size(); ++j) {
        double v = std::max(acc[j], variance_floor);
        if (acc[j] < variance_floor && engaged) ++*engaged;
        v = std::max(scale * v, variance_floor);
        out(static_cast<Eigen::Index>(j)) = v;
    }
    return out;
}

RecursionResult variance_recursion(const ProjectedParams& params, const BasisSet& basis, const Matrix& squared_scores,
                                   const Matrix* x_scores, double variance_floor) {
    check_basis(basis);
    const auto K = static_cast<Eigen::Index>(basis.size());
    if (params.D.size() != K || params.A.rows() != K || params.A.cols() != K || params.B.rows() != K ||
        params.B.cols() != K) {
        throw ShapeError("parameter dimensions do not match the basis");
    }
    if (squared_scores.cols() != K) throw ShapeError("score matrix does not match the basis");
    const bool use_x = params.has_x();
    if (use_x && (!x_scores || x_scores->rows() != squared_scores.rows() || x_scores->cols() != K)) {
        throw ShapeError("FGARCH-X recursion needs covariate scores aligned with the squared scores");
    }
    const Eigen::Index N = squared_scores.rows();
    const Matrix P = gram_matrix(basis);
    std::vector<double> ones(basis.grid.size(), 1.0);
    Vector h_prev = project(ones, basis);
    Vector s_prev = P * params.D;
    Vector x_prev = Vector::Zero(K);

    RecursionResult out;
    out.coefficients.resize(N, K);
    out.variance_scores.resize(N, K);
    Matrix curves(N, static_cast<Eigen::Index>(basis.grid.size()));
    for (Eigen::Index t = 0; t < N; ++t) {
        Vector c = params.D + params.A * s_prev + params.B * h_prev;
        if (use_x) c += params.G * x_prev;
        if (!c.allFinite()) throw NumericError(fmt::format("variance recursion became non-finite at t = {}", t));
        Vector h = P * c;
        out.coefficients.row(t) = c.transpose();
        out.variance_scores.row(t) = h.transpose();
        curves.row(t) = variance_curve(std::span<const double>(c.data(), static_cast<std::size_t>(K)), basis, 1.0,
                                       variance_floor, &out.floor_engagements)
                            .transpose();
        s_prev = squared_scores.row(t).transpose();
        if (use_x) x_prev = x_scores->row(t).transpose();
        h_prev = std::move(h);
    }
    std::vector<std::string> dates(static_cast<std::size_t>(N));
    for (Eigen::Index t = 0; t < N; ++t) dates[static_cast<std::size_t>(t)] = fmt::format("t{:06d}", t);
    out.curves = CurveSeries(basis.grid, std::move(dates), std::move(curves), CurveKind::VARIANCE);
    return out;
}

Vector positivity_margin(const Matrix& squared_scores) {
    const Eigen::Index K = squared_scores.cols();
    Vector m(K);
    for (Eigen::Index l = 0; l < K; ++l) {
        const double scale = squared_scores.col(l).cwiseAbs().mean();
        const double most_negative = std::max(0.0, -squared_scores.col(l).minCoeff());
        m(l) = std::max(0.5 * most_negative, 1e-12 * scale);
    }
    return m;
}

double qmle_objective(const ProjectedParams& params, const Matrix& gram, const Matrix& squared_scores,
                      const Matrix* x_scores, const Vector& unit_scores) {
    const Eigen::Index N = squared_scores.rows();
    const Eigen::Index K = squared_scores.cols();
    const Vector margin = positivity_margin(squared_scores);
    Vector s_prev = gram * params.D;
    Vector h_prev = unit_scores;
    Vector x_prev = Vector::Zero(K);
    double total = 0.0;
    for (Eigen::Index t = 0; t < N; ++t) {
        Vector c = params.D + params.A * s_prev + params.B * h_prev;
        if (params.has_x()) c += params.G * x_prev;
        Vector h = gram * c;
        for (Eigen::Index l = 0; l < K; ++l) {
            const double hl = h(l);
            if (!(hl > margin(l)) || !std::isfinite(hl)) return kInf;
            total += squared_scores(t, l) / hl + std::log(hl);
        }
        s_prev = squared_scores.row(t).transpose();
        if (params.has_x()) x_prev = x_scores->row(t).transpose();
        h_prev = std::move(h);
    }
    return total / static_cast<double>(N);
}

QmleProblem::QmleProblem(const BasisSet& basis, Matrix squared_scores, std::optional<Matrix> x_scores,
                         std::vector<std::size_t> blocks)
    : gram(gram_matrix(basis)), s(std::move(squared_scores)), x(std::move(x_scores)) {
    K_ = static_cast<Eigen::Index>(basis.size());
    if (s.cols() != K_) throw ShapeError("score matrix does not match the basis");
    if (x && (x->rows() != s.rows() || x->cols() != K_)) throw ShapeError("covariate scores misaligned");
    std::vector<double> ones(basis.grid.size(), 1.0);
    unit = project(ones, basis);
    margin = positivity_margin(s);
    psi = basis.functions;
    const auto label = block_labels(blocks, static_cast<std::size_t>(K_));
    for (Eigen::Index l = 0; l < K_; ++l) free_.push_back({Block::D, l, 0});
    std::vector<Block> mats{Block::A, Block::B};
    if (x) mats.push_back(Block::G);
    for (auto b : mats) {
        for (Eigen::Index i = 0; i < K_; ++i) {
            for (Eigen::Index j = 0; j < K_; ++j) {
                if (label[static_cast<std::size_t>(i)] == label[static_cast<std::size_t>(j)]) free_.push_back({b, i, j});
            }
        }
    }
}

ProjectedParams QmleProblem::unpack(std::span<const double> eta) const {
    ProjectedParams p;
    p.D = Vector::Zero(K_);
    p.A = Matrix::Zero(K_, K_);
    p.B = Matrix::Zero(K_, K_);
    if (x) p.G = Matrix::Zero(K_, K_);
    for (std::size_t i = 0; i < free_.size(); ++i) {
        const double theta = std::exp(std::max(eta[i], kEtaFloor));
        const auto& e = free_[i];
        switch (e.block) {
            case Block::D: p.D(e.row) = theta; break;
            case Block::A: p.A(e.row, e.col) = theta; break;
            case Block::B: p.B(e.row, e.col) = theta; break;
            case Block::G: p.G(e.row, e.col) = theta; break;
        }
    }
    return p;
}

std::vector<double> QmleProblem::pack(const ProjectedParams& params) const {
    std::vector<double> eta(free_.size());
    for (std::size_t i = 0; i < free_.size(); ++i) {
        const auto& e = free_[i];
        double v = 0.0;
        switch (e.block) {
            case Block::D: v = params.D(e.row); break;
            case Block::A: v = params.A(e.row, e.col); break;
            case Block::B: v = params.B(e.row, e.col); break;
            case Block::G: v = params.G(e.row, e.col); break;
        }
        eta[i] = std::log(std::max(v, kThetaFloor));
    }
    return eta;
}

double QmleProblem::evaluate(std::span<const double> eta, std::span<double> grad) const {
    const ProjectedParams p = unpack(eta);
    const Eigen::Index N = s.rows();
    const Eigen::Index K = K_;
    const bool use_x = x.has_value();
    const double inv_n = 1.0 / static_cast<double>(N);

    Matrix h(N, K);
    Matrix coef(N, K);
    {
        Vector s_prev = gram * p.D;
        Vector h_prev = unit;
        Vector x_prev = Vector::Zero(K);
        for (Eigen::Index t = 0; t < N; ++t) {
            Vector c = p.D + p.A * s_prev + p.B * h_prev;
            if (use_x) c += p.G * x_prev;
            coef.row(t) = c.transpose();
            h.row(t) = (gram * c).transpose();
            s_prev = s.row(t).transpose();
            if (use_x) x_prev = x->row(t).transpose();
            h_prev = h.row(t).transpose();
        }
    }
    double total = 0.0;
    for (Eigen::Index t = 0; t < N; ++t) {
        for (Eigen::Index l = 0; l < K; ++l) {
            const double hl = h(t, l);
            if (!(hl > margin(l)) || !std::isfinite(hl)) return kInf;
            total += s(t, l) / hl + std::log(hl);
        }
    }
    if (curve_positivity && !((coef * psi).minCoeff() > 0.0)) return kInf;
    const double value = total * inv_n;
    if (grad.empty()) return value;

    // adjoint pass: gamma_t = dQ/dc_t = P^T (l_t + B^T gamma_{t+1})
    Vector gD = Vector::Zero(K);
    Matrix gA = Matrix::Zero(K, K);
    Matrix gB = Matrix::Zero(K, K);
    Matrix gG = Matrix::Zero(K, K);
    Vector gamma_next = Vector::Zero(K);
    const Vector s_init = gram * p.D;
    Vector ell(K);
    for (Eigen::Index t = N - 1; t >= 0; --t) {
        for (Eigen::Index l = 0; l < K; ++l) {
            const double hl = h(t, l);
            ell(l) = inv_n * (1.0 / hl - s(t, l) / (hl * hl));
        }
        const Vector gamma = gram.transpose() * (ell + p.B.transpose() * gamma_next);
        gD += gamma;
        if (t > 0) {
            gA += gamma * s.row(t - 1);
            gB += gamma * h.row(t - 1);
            if (use_x) gG += gamma * x->row(t - 1);
        } else {
            gA += gamma * s_init.transpose();
            gB += gamma * unit.transpose();
            gD += gram.transpose() * (p.A.transpose() * gamma);
        }
        gamma_next = gamma;
    }
    for (std::size_t i = 0; i < free_.size(); ++i) {
        const auto& e = free_[i];
        if (eta[i] < kEtaFloor) {
            grad[i] = 0.0;
            continue;
        }
        double d = 0.0;
        double theta = 0.0;
        switch (e.block) {
            case Block::D: d = gD(e.row); theta = p.D(e.row); break;
            case Block::A: d = gA(e.row, e.col); theta = p.A(e.row, e.col); break;
            case Block::B: d = gB(e.row, e.col); theta = p.B(e.row, e.col); break;
            case Block::G: d = gG(e.row, e.col); theta = p.G(e.row, e.col); break;
        }
        grad[i] = d * theta;
    }
    return value;
}

FGarchFit qmle_fit(const ModelSpec& spec, const CurveSeries& demeaned, const BasisSet& basis, const CurveSeries* x,
                   std::span<const double> mean_curve) {
    check_basis(basis);
    if (demeaned.points() != basis.grid.size()) throw ShapeError("data and basis are on different grids");
    const bool with_x = spec.kind == ModelKind::FGARCHX;
    if (with_x) {
        if (!x) throw InputError("FGARCH-X needs an exogenous curve series");
        require_aligned(demeaned, *x, "FGARCH-X covariate");
    }
    if (!(spec.variance_floor > 0.0)) throw ConfigError("variance floor must be positive");
    if (spec.starts < 1) throw ConfigError("at least one optimiser start is required");
    if (demeaned.values.cwiseAbs().maxCoeff() == 0.0) {
        throw EstimationError("degenerate likelihood: demeaned curves are identically zero");
    }
    if (demeaned.days() < 100) {
        throw InsufficientDataError(fmt::format("QMLE needs at least 100 curves, got {}", demeaned.days()));
    }
    const Eigen::Index J = static_cast<Eigen::Index>(demeaned.points());

    CurveSeries squared = demeaned;
    squared.values = demeaned.values.cwiseAbs2();
    squared.kind = CurveKind::SQUARED;
    Matrix s = project_series(squared, basis);
    std::optional<Matrix> xs;
    if (with_x) xs = project_series(*x, basis);
    QmleProblem problem(basis, s, xs, spec.blocks);

    const Vector s_mean = s.colwise().mean().transpose();
    const Vector s_absmean = s.cwiseAbs().colwise().mean().transpose();
    const Vector x_absmean = with_x ? Vector(xs->cwiseAbs().colwise().mean().transpose()) : Vector::Zero(s.cols());

    FGarchFit fit;
    OptimResult best;
    bool best_set = false;
    // Positive reconstructed curves are preferred; bases that cannot produce them
    // (a lone sign-changing function) fall back to score positivity only.
    for (bool curve_positive : {true, false}) {
    problem.curve_positivity = curve_positive;
    fit.curve_positivity = curve_positive;
    fit.objective_traces.clear();
    for (std::size_t i = 0; i < spec.starts; ++i) {
        ProjectedParams start =
            starting_params(basis.size(), with_x, s_mean, s_absmean, x_absmean, i, spec.seed);
        for (Eigen::Index l = 0; l < start.D.size(); ++l) start.D(l) = std::max(start.D(l), 3.0 * problem.margin(l));
        std::vector<double> eta = problem.pack(start);
        double f0 = problem.evaluate(eta, {});
        for (int shrink = 0; shrink < 20 && !std::isfinite(f0); ++shrink) {
            start.A *= 0.5;
            start.B *= 0.5;
            start.D *= 1.5;
            // the leading function is positive; lifting its level pushes the curve above zero
            start.D(0) *= 2.0;
            if (with_x) start.G *= 0.5;
            eta = problem.pack(start);
            f0 = problem.evaluate(eta, {});
        }
        if (!std::isfinite(f0)) {
            fit.objective_traces.emplace_back();
            continue;
        }
        OptimResult r = bfgs(problem, std::move(eta), spec.max_iterations);
        fit.objective_traces.push_back(r.trace);
        if (std::isfinite(r.value) && (!best_set || r.value < best.value)) {
            best = std::move(r);
            best_set = true;
        }
    }
    if (best_set) break;
    }
    if (!best_set) throw EstimationError("every optimiser start produced a non-positive variance score");

    fit.spec = spec;
    fit.basis = basis;
    fit.params = problem.unpack(best.eta);
    fit.objective = best.value;
    fit.loglik = -best.value;
    fit.converged = best.converged;
    fit.squared_scores = s;
    if (xs) fit.x_scores = *xs;
    if (mean_curve.empty()) {
        fit.mean_curve = Vector::Zero(J);
    } else {
        if (static_cast<Eigen::Index>(mean_curve.size()) != J) throw ShapeError("mean curve length differs from J");
        fit.mean_curve = Eigen::Map<const Vector>(mean_curve.data(), J);
    }

    RecursionResult rec =
        variance_recursion(fit.params, basis, s, xs ? &*xs : nullptr, spec.variance_floor);
    fit.variance_scores = rec.variance_scores;
    fit.floor_engagements = rec.floor_engagements;

    double sum = 0.0;
    for (Eigen::Index t = 0; t < demeaned.values.rows(); ++t) {
        for (Eigen::Index j = 0; j < J; ++j) {
            const double y = demeaned.values(t, j);
            sum += y * y / rec.curves.values(t, j);
        }
    }
    const double cbar = sum / static_cast<double>(demeaned.values.size());
    if (!(cbar > 0.0) || !std::isfinite(cbar)) throw EstimationError("residual normalisation is not positive");
    fit.residual_scale = cbar;

    Matrix sig(demeaned.values.rows(), J);
    Matrix res(demeaned.values.rows(), J);
    for (Eigen::Index t = 0; t < sig.rows(); ++t) {
        for (Eigen::Index j = 0; j < J; ++j) {
            double v = cbar * rec.curves.values(t, j);
            if (v < spec.variance_floor) {
                v = spec.variance_floor;
                ++fit.floor_engagements;
            }
            sig(t, j) = v;
            res(t, j) = demeaned.values(t, j) / std::sqrt(v);
        }
    }
    fit.sigma2 = CurveSeries(demeaned.grid, demeaned.dates, std::move(sig), CurveKind::VARIANCE);
    fit.residuals = CurveSeries(demeaned.grid, demeaned.dates, std::move(res), CurveKind::RESIDUAL);
    return fit;
}

Vector next_coefficients(const ProjectedParams& params, std::span<const double> squared_scores,
                         std::span<const double> variance_scores, std::span<const double> x_scores) {
    const auto K = static_cast<Eigen::Index>(params.K());
    if (static_cast<Eigen::Index>(squared_scores.size()) != K || static_cast<Eigen::Index>(variance_scores.size()) != K) {
        throw ShapeError("score vectors do not match the parameter dimension");
    }
    Vector c = params.D + params.A * Eigen::Map<const Vector>(squared_scores.data(), K) +
               params.B * Eigen::Map<const Vector>(variance_scores.data(), K);
    if (params.has_x()) {
        if (static_cast<Eigen::Index>(x_scores.size()) != K) throw ShapeError("FGARCH-X forecast needs covariate scores");
        c += params.G * Eigen::Map<const Vector>(x_scores.data(), K);
    }
    return c;
}

namespace {

Vector step_coefficients(const FGarchFit& fit, std::span<const double> latest_squared,
                         std::span<const double> latest_variance_scores, std::span<const double> latest_x) {
    if (latest_squared.size() != fit.basis.grid.size()) throw ShapeError("latest squared curve has the wrong length");
    const Vector s = project(latest_squared, fit.basis);
    Vector xs;
    if (fit.params.has_x()) {
        if (latest_x.size() != fit.basis.grid.size()) throw ShapeError("FGARCH-X forecast needs the latest covariate curve");
        xs = project(latest_x, fit.basis);
    }
    return next_coefficients(fit.params, {s.data(), static_cast<std::size_t>(s.size())}, latest_variance_scores,
                             {xs.data(), static_cast<std::size_t>(xs.size())});
}

}  // namespace

Vector forecast_one_step(const FGarchFit& fit, std::span<const double> latest_squared,
                         std::span<const double> latest_variance_scores, std::span<const double> latest_x) {
    const Vector c = step_coefficients(fit, latest_squared, latest_variance_scores, latest_x);
    return variance_curve({c.data(), static_cast<std::size_t>(c.size())}, fit.basis, fit.residual_scale,
                          fit.spec.variance_floor);
}

Vector next_variance_scores(const FGarchFit& fit, std::span<const double> latest_squared,
                            std::span<const double> latest_variance_scores, std::span<const double> latest_x) {
    const Vector c = step_coefficients(fit, latest_squared, latest_variance_scores, latest_x);
    return gram_matrix(fit.basis) * c;
}

double spectral_radius(const Matrix& m) {
    if (m.rows() != m.cols()) throw ShapeError("spectral radius of a non-square matrix");
    if (m.size() == 0) return 0.0;
    Eigen::EigenSolver<Eigen::MatrixXd> es(m, false);
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

Matrix simulate_errors(const IntradayGrid& grid, const ErrorModel& errors, std::size_t n, std::uint64_t seed) {
    const auto J = static_cast<Eigen::Index>(grid.size());
    Matrix out(static_cast<Eigen::Index>(n), J);
    std::mt19937_64 rng(seed);
    if (errors.kind == ErrorModelKind::BOOTSTRAP) {
        if (!errors.pool || errors.pool->days() == 0) throw InputError("bootstrap errors need a non-empty curve pool");
        const CurveSeries& pool = *errors.pool;
        if (static_cast<Eigen::Index>(pool.points()) != J) throw ShapeError("bootstrap pool is on a different grid");
        const Eigen::RowVectorXd rms = pool.values.cwiseAbs2().colwise().mean().cwiseSqrt();
        for (Eigen::Index j = 0; j < J; ++j) {
            if (!(rms(j) > 0.0)) throw DegenerateInputError("bootstrap pool has a zero column");
        }
        std::uniform_int_distribution<std::size_t> pick(0, pool.days() - 1);
        for (Eigen::Index t = 0; t < out.rows(); ++t) {
            const auto k = static_cast<Eigen::Index>(pick(rng));
            out.row(t) = pool.values.row(k).cwiseQuotient(rms);
        }
        return out;
    }
    if (!(errors.correlation_length > 0.0)) throw InputError("correlation length must be positive");
    std::normal_distribution<double> z(0.0, 1.0);
    const double rho = J > 1 ? std::exp(-grid.spacing() / errors.correlation_length) : 0.0;
    const double innov = std::sqrt(1.0 - rho * rho);
    for (Eigen::Index t = 0; t < out.rows(); ++t) {
        double e = z(rng);
        out(t, 0) = e;
        for (Eigen::Index j = 1; j < J; ++j) {
            e = rho * e + innov * z(rng);
            out(t, j) = e;
        }
    }
    return out;
}

CurveSeries simulate(const ProjectedParams& params, const BasisSet& basis, const ErrorModel& errors, std::size_t n,
                     std::uint64_t seed, const SimulationOptions& options) {
    check_basis(basis);
    const auto K = static_cast<Eigen::Index>(basis.size());
    if (params.D.size() != K) throw ShapeError("parameter dimensions do not match the basis");
    if ((params.D.array() < 0).any() || (params.A.array() < 0).any() || (params.B.array() < 0).any() ||
        (params.has_x() && (params.G.array() < 0).any())) {
        throw InputError("projected parameters must be non-negative");
    }
    const Matrix P = gram_matrix(basis);
    const double radius = spectral_radius(P * params.B);
    if (radius >= 1.0 && !options.allow_unstable) {
        throw InputError(fmt::format("refusing to simulate: spectral radius of B is {:.4g} (>= 1)", radius));
    }
    if (params.has_x()) {
        if (!options.x || options.x->days() != n || options.x->points() != basis.grid.size()) {
            throw InputError("FGARCH-X simulation needs a covariate series with one curve per simulated day");
        }
    }
    const std::size_t total = n + options.burn_in;
    const auto J = static_cast<Eigen::Index>(basis.grid.size());
    if (options.innovations &&
        (options.innovations->rows() != static_cast<Eigen::Index>(total) || options.innovations->cols() != J)) {
        throw ShapeError(fmt::format("innovations must be {} x {}", total, J));
    }
    const Matrix eps = options.innovations ? *options.innovations : simulate_errors(basis.grid, errors, total, seed);

    std::vector<double> ones(basis.grid.size(), 1.0);
    Vector h_prev = project(ones, basis);
    Vector s_prev = P * params.D;
    Vector x_prev = Vector::Zero(K);
    Matrix y(static_cast<Eigen::Index>(n), J);
    std::vector<double> ysq(static_cast<std::size_t>(J));
    for (std::size_t t = 0; t < total; ++t) {
        Vector c = params.D + params.A * s_prev + params.B * h_prev;
        if (params.has_x()) c += params.G * x_prev;
        if (!c.allFinite()) throw NumericError(fmt::format("simulated recursion became non-finite at t = {}", t));
        const Vector sig2 = variance_curve({c.data(), static_cast<std::size_t>(K)}, basis, 1.0, options.variance_floor);
        for (Eigen::Index j = 0; j < J; ++j) {
            const double v = std::sqrt(sig2(j)) * eps(static_cast<Eigen::Index>(t), j);
            ysq[static_cast<std::size_t>(j)] = v * v;
            if (t >= options.burn_in) y(static_cast<Eigen::Index>(t - options.burn_in), j) = v;
        }
        s_prev = project(ysq, basis);
        if (params.has_x() && t >= options.burn_in) {
            x_prev = project(options.x->row(t - options.burn_in), basis);
        }
        h_prev = P * c;
    }
    return CurveSeries(basis.grid, synthetic_dates(n), std::move(y), CurveKind::OCIDR);
}

}  // namespace fxvol
