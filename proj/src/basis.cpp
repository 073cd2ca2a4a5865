#include "fxvol/basis.hpp"

#include "fxvol/errors.hpp"
#include "fxvol/simd.hpp"
#include "fxvol/stats.hpp"

#include <Eigen/Eigenvalues>
#include <fmt/format.h>

#include <algorithm>
#include <cmath>

namespace fxvol {
namespace {

Matrix centered(const CurveSeries& s) {
    const Eigen::RowVectorXd m = s.values.colwise().mean();
    return s.values.rowwise() - m;
}

std::span<const double> row_of(const Matrix& m, Eigen::Index t) {
    return {m.data() + t * m.cols(), static_cast<std::size_t>(m.cols())};
}

// sum_t x_t x_t^T, accumulated with the dispatched rank-1 kernel. Using a unit
// multiplier keeps (i, j) and (j, i) products identical so the result is
// exactly symmetric.
Matrix outer_sum(const Matrix& x) {
    const Eigen::Index J = x.cols();
    Matrix acc = Matrix::Zero(J, J);
    std::span<double> out(acc.data(), static_cast<std::size_t>(J * J));
    for (Eigen::Index t = 0; t < x.rows(); ++t) simd::rank1_update(1.0, row_of(x, t), row_of(x, t), out);
    return acc;
}

void require_days(const CurveSeries& s, std::size_t n, std::string_view what) {
    if (s.days() < n) {
        throw InsufficientDataError(fmt::format("{} needs at least {} curves, got {}", what, n, s.days()));
    }
}

BasisSet eigen_core(const CovKernel& kernel, std::size_t max_k, BasisMethod method, bool allow_zero) {
    const Matrix& c = kernel.matrix;
    const Eigen::Index J = c.rows();
    if (c.cols() != J || static_cast<std::size_t>(J) != kernel.grid.size()) {
        throw ShapeError("covariance kernel must be J x J on its grid");
    }
    if (max_k > static_cast<std::size_t>(J)) {
        throw InputError(fmt::format("requested {} eigenfunctions from a {}-point grid", max_k, J));
    }
    const double scale = c.cwiseAbs().maxCoeff();
    if (!std::isfinite(scale)) throw NumericError("covariance kernel has non-finite entries");
    const double asym = (c - c.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10 * std::max(scale, 1.0)) {
        throw InputError(fmt::format("covariance kernel is not symmetric (max asymmetry {:.3g})", asym));
    }

    BasisSet out;
    out.grid = kernel.grid;
    out.method = method;
    if (scale == 0.0) {
        if (!allow_zero) throw DegenerateInputError("covariance kernel is identically zero");
        out.functions.resize(0, J);
        return out;
    }

    const auto w = kernel.grid.weights();
    Vector sqrt_w(J);
    for (Eigen::Index j = 0; j < J; ++j) sqrt_w(j) = std::sqrt(w[static_cast<std::size_t>(j)]);
    Matrix sym = sqrt_w.asDiagonal() * c * sqrt_w.asDiagonal();
    sym = 0.5 * (sym + sym.transpose()).eval();

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
    if (solver.info() != Eigen::Success) throw NumericError("eigendecomposition did not converge");
    const Eigen::VectorXd& vals = solver.eigenvalues();  // ascending
    const Eigen::MatrixXd& vecs = solver.eigenvectors();

    double total = 0.0;
    for (Eigen::Index i = 0; i < J; ++i) total += std::max(vals(i), 0.0);
    if (!(total > 0.0)) {
        if (!allow_zero) throw DegenerateInputError("covariance kernel has no positive eigenvalue");
        out.functions.resize(0, J);
        return out;
    }

    const auto k = static_cast<Eigen::Index>(max_k);
    out.functions.resize(k, J);
    for (Eigen::Index l = 0; l < k; ++l) {
        const Eigen::Index src = J - 1 - l;
        const double lambda = std::max(vals(src), 0.0);
        Eigen::VectorXd psi = vecs.col(src).cwiseQuotient(sqrt_w);
        double integral = 0.0;
        double abs_integral = 0.0;
        for (Eigen::Index j = 0; j < J; ++j) {
            integral += w[static_cast<std::size_t>(j)] * psi(j);
            abs_integral += w[static_cast<std::size_t>(j)] * std::fabs(psi(j));
        }
        bool flip = integral < 0.0;
        if (std::fabs(integral) <= 1e-10 * abs_integral) {
            Eigen::Index arg = 0;
            psi.cwiseAbs().maxCoeff(&arg);
            flip = psi(arg) < 0.0;
        }
        if (flip) psi = -psi;
        out.functions.row(l) = psi.transpose();
        out.eigenvalues.push_back(lambda);
        out.variation_explained.push_back(lambda / total);
    }
    return out;
}

}  // namespace

std::string_view to_string(BasisMethod method) noexcept {
    switch (method) {
        case BasisMethod::TFPCA: return "TFPCA";
        case BasisMethod::DFPCA: return "DFPCA";
        case BasisMethod::LFPCA: return "LFPCA";
        case BasisMethod::MFPCA_COMMON: return "MFPCA_COMMON";
        case BasisMethod::MFPCA_SPECIFIC: return "MFPCA_SPECIFIC";
    }
    return "TFPCA";
}

BasisMethod basis_method_from_string(std::string_view name) {
    for (auto m : {BasisMethod::TFPCA, BasisMethod::DFPCA, BasisMethod::LFPCA, BasisMethod::MFPCA_COMMON,
                   BasisMethod::MFPCA_SPECIFIC}) {
        if (to_string(m) == name) return m;
    }
    throw InputError(fmt::format("unknown basis method '{}'", name));
}

BasisSet BasisSet::truncated(std::size_t k) const {
    if (k > size()) throw InputError(fmt::format("cannot keep {} of {} basis functions", k, size()));
    BasisSet out;
    out.grid = grid;
    out.method = method;
    out.functions = functions.topRows(static_cast<Eigen::Index>(k));
    out.eigenvalues.assign(eigenvalues.begin(), eigenvalues.begin() + static_cast<std::ptrdiff_t>(k));
    out.variation_explained.assign(variation_explained.begin(),
                                   variation_explained.begin() + static_cast<std::ptrdiff_t>(k));
    return out;
}

CovKernel lag0_covariance(const CurveSeries& series) {
    require_days(series, 1, "lag-0 covariance");
    const Matrix x = centered(series);
    Matrix c = outer_sum(x);
    c /= static_cast<double>(series.days());
    return {series.grid, std::move(c), KernelNormalization::LAG0};
}

CovKernel bartlett_covariance(const CurveSeries& series, std::size_t bandwidth, KernelNormalization tag) {
    const std::size_t n = series.days();
    if (bandwidth >= n) {
        throw InputError(fmt::format("bandwidth {} must be smaller than the sample size {}", bandwidth, n));
    }
    if (bandwidth == 0) {
        CovKernel k = lag0_covariance(series);
        k.normalization = tag;
        return k;
    }
    const Matrix x = centered(series);
    const Eigen::Index J = x.cols();
    Matrix c = outer_sum(x);

    // sum_{l=1..h} w_l r_l = (1/N) sum_t x_t z_t^T with z_t = sum_l w_l x_{t+l}
    Matrix cross = Matrix::Zero(J, J);
    std::span<double> cross_span(cross.data(), static_cast<std::size_t>(J * J));
    std::vector<double> z(static_cast<std::size_t>(J));
    const double h = static_cast<double>(bandwidth);
    for (std::size_t t = 0; t + 1 < n; ++t) {
        std::fill(z.begin(), z.end(), 0.0);
        bool any = false;
        for (std::size_t l = 1; l < bandwidth && t + l < n; ++l) {
            simd::axpy(1.0 - static_cast<double>(l) / h, row_of(x, static_cast<Eigen::Index>(t + l)), z);
            any = true;
        }
        if (any) simd::rank1_update(1.0, row_of(x, static_cast<Eigen::Index>(t)), z, cross_span);
    }
    c += cross + cross.transpose();
    c /= static_cast<double>(n);
    return {series.grid, std::move(c), tag};
}

CovKernel raw_second_moment(const CurveSeries& series) {
    require_days(series, 1, "second-moment kernel");
    Matrix c = outer_sum(series.values);
    c /= static_cast<double>(series.days());
    return {series.grid, std::move(c), KernelNormalization::NONSTATIONARY_SUM};
}

BasisSet eigendecompose(const CovKernel& kernel, std::size_t max_k, BasisMethod method) {
    return eigen_core(kernel, max_k, method, false);
}

std::size_t eigenvalue_ratio(std::span<const double> eigenvalues, std::size_t l_bar) {
    if (l_bar < 1) throw InputError("eigenvalue ratio needs l_bar >= 1");
    if (eigenvalues.size() < l_bar + 1) {
        throw InputError(fmt::format("eigenvalue ratio with l_bar = {} needs {} eigenvalues, got {}", l_bar, l_bar + 1,
                                     eigenvalues.size()));
    }
    const double first = eigenvalues[0];
    if (!(first > 0.0)) throw DegenerateInputError("leading eigenvalue must be positive");
    const double floor = 1e-12 * first;
    auto at = [&](std::size_t i) { return std::max(eigenvalues[i], floor); };
    std::size_t best = 1;
    double best_ratio = at(1) / at(0);
    for (std::size_t l = 2; l <= l_bar; ++l) {
        const double r = at(l) / at(l - 1);
        if (r < best_ratio) {
            best_ratio = r;
            best = l;
        }
    }
    return best;
}

BasisSet select_dimension(const BasisSet& basis, std::size_t l_bar) {
    if (basis.size() <= 1) return basis;
    const std::size_t usable = std::min(l_bar, basis.size() - 1);
    return basis.truncated(eigenvalue_ratio(basis.eigenvalues, usable));
}

BasisSet tfpca(const CurveSeries& squared, std::size_t max_k) {
    require_days(squared, 2, "TFPCA");
    return eigendecompose(lag0_covariance(squared), max_k, BasisMethod::TFPCA);
}

BasisSet dfpca(const CurveSeries& squared, std::size_t max_k, std::optional<std::size_t> bandwidth) {
    require_days(squared, 10, "DFPCA");
    const std::size_t h = bandwidth.value_or(stats::cube_root_lag(squared.days()));
    return eigendecompose(bartlett_covariance(squared, h), max_k, BasisMethod::DFPCA);
}

BasisSet lfpca(const CurveSeries& squared, std::size_t max_k, bool stationary, std::optional<std::size_t> bandwidth) {
    require_days(squared, 50, "LFPCA");
    if (stationary) {
        // The memory normalisation rescales the kernel only, so it is left out.
        const std::size_t h = bandwidth.value_or(stats::cube_root_lag(squared.days()));
        return eigendecompose(bartlett_covariance(squared, h, KernelNormalization::UNNORMALIZED_LR), max_k,
                              BasisMethod::LFPCA);
    }
    return eigendecompose(raw_second_moment(squared), max_k, BasisMethod::LFPCA);
}

MultiLevelDecomposition multilevel_decompose(std::span<const CurveSeries> panels) {
    const std::size_t d = panels.size();
    if (d < 2) throw InputError("multi-level FPCA needs at least two panels");
    for (std::size_t j = 1; j < d; ++j) require_aligned(panels[0], panels[j], "multi-level FPCA");
    const auto n = static_cast<Eigen::Index>(panels[0].days());
    if (n < 1) throw InsufficientDataError("multi-level FPCA needs at least one day");
    const double dd = static_cast<double>(d);

    Matrix cross_mean = Matrix::Zero(n, panels[0].values.cols());
    for (const auto& p : panels) cross_mean += p.values;
    cross_mean /= dd;

    MultiLevelDecomposition out;
    out.mu_common = cross_mean.colwise().mean().transpose();
    Matrix uc = cross_mean.rowwise() - out.mu_common.transpose();
    for (const auto& p : panels) {
        Vector mu_j = p.values.colwise().mean().transpose() - out.mu_common;
        Matrix uj = p.values;
        uj.rowwise() -= out.mu_common.transpose();
        uj.rowwise() -= mu_j.transpose();
        uj -= uc;
        out.mu_specific.push_back(std::move(mu_j));
        out.u_specific.emplace_back(p.grid, p.dates, std::move(uj), CurveKind::GENERIC);
    }
    out.u_common = CurveSeries(panels[0].grid, panels[0].dates, std::move(uc), CurveKind::GENERIC);
    return out;
}

MfpcaResult mfpca(std::span<const CurveSeries> panels, std::size_t max_k, std::optional<std::size_t> bandwidth) {
    MfpcaResult out;
    out.decomposition = multilevel_decompose(panels);
    const std::size_t n = panels[0].days();
    if (n < 10) throw InsufficientDataError("multi-level FPCA needs at least 10 days");
    const std::size_t h = bandwidth.value_or(stats::cube_root_lag(n));
    const std::size_t want = std::min<std::size_t>(max_k + 1, panels[0].points());

    out.common = select_dimension(
        eigen_core(bartlett_covariance(out.decomposition.u_common, h), want, BasisMethod::MFPCA_COMMON, false), max_k);

    double data_scale = 0.0;
    for (const auto& p : panels) data_scale = std::max(data_scale, p.values.cwiseAbs().maxCoeff());
    for (const auto& u : out.decomposition.u_specific) {
        if (u.values.cwiseAbs().maxCoeff() <= 1e-12 * data_scale) {
            BasisSet empty;
            empty.grid = u.grid;
            empty.method = BasisMethod::MFPCA_SPECIFIC;
            empty.functions.resize(0, static_cast<Eigen::Index>(u.points()));
            out.specific.push_back(std::move(empty));
            continue;
        }
        auto full = eigen_core(bartlett_covariance(u, h), want, BasisMethod::MFPCA_SPECIFIC, true);
        out.specific.push_back(select_dimension(full, max_k));
    }
    return out;
}

BasisSet concatenate(const BasisSet& first, const BasisSet& second) {
    if (first.grid.size() != second.grid.size()) throw ShapeError("cannot concatenate bases on different grids");
    BasisSet out;
    out.grid = first.grid;
    out.method = first.method;
    out.functions.resize(first.functions.rows() + second.functions.rows(), static_cast<Eigen::Index>(first.grid.size()));
    out.functions << first.functions, second.functions;
    out.eigenvalues = first.eigenvalues;
    out.eigenvalues.insert(out.eigenvalues.end(), second.eigenvalues.begin(), second.eigenvalues.end());
    out.variation_explained = first.variation_explained;
    out.variation_explained.insert(out.variation_explained.end(), second.variation_explained.begin(),
                                   second.variation_explained.end());
    return out;
}

}  // namespace fxvol
