#include "fxvol/basis.hpp"
#include "fxvol/errors.hpp"
#include "fxvol/longmem.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace fxvol;

namespace {

// Cyclic Jacobi rotations on a dense symmetric matrix; returns eigenvalues
// (descending) and eigenvectors as columns.
std::pair<std::vector<double>, Matrix> jacobi(Matrix a) {
    const auto n = a.rows();
    Matrix v = Matrix::Identity(n, n);
    for (int sweep = 0; sweep < 100; ++sweep) {
        double off = 0.0;
        for (Eigen::Index p = 0; p < n; ++p)
            for (Eigen::Index q = p + 1; q < n; ++q) off += a(p, q) * a(p, q);
        if (off < 1e-30) break;
        for (Eigen::Index p = 0; p < n; ++p) {
            for (Eigen::Index q = p + 1; q < n; ++q) {
                if (std::abs(a(p, q)) < 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2 * a(p, q));
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1));
                const double c = 1 / std::sqrt(t * t + 1), s = t * c;
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = a(k, p), akq = a(k, q);
                    a(k, p) = c * akp - s * akq;
                    a(k, q) = s * akp + c * akq;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double apk = a(p, k), aqk = a(q, k);
                    a(p, k) = c * apk - s * aqk;
                    a(q, k) = s * apk + c * aqk;
                }
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    for (Eigen::Index i = 0; i < n; ++i) order[static_cast<std::size_t>(i)] = i;
    std::sort(order.begin(), order.end(), [&](auto x, auto y) { return a(x, x) > a(y, y); });
    std::vector<double> vals;
    Matrix vecs(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        vals.push_back(a(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(i)]));
        vecs.col(i) = v.col(order[static_cast<std::size_t>(i)]);
    }
    return {vals, vecs};
}

double inner(const IntradayGrid& g, std::span<const double> x, std::span<const double> y) {
    double s = 0.0;
    for (std::size_t j = 0; j < g.size(); ++j) s += g.weights()[j] * x[j] * y[j];
    return s;
}

// y_t = 5 + f1_t phi_1 + f2_t phi_2 + noise with factor variances 4 and 1.
CurveSeries two_factor_panel(std::size_t n, std::size_t J, std::uint64_t seed, double noise_sd, Matrix* phi = nullptr) {
    IntradayGrid g(J);
    Matrix f = fxtest::quadrature_orthonormal(g, 3);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    Matrix v(n, J);
    for (std::size_t t = 0; t < n; ++t) {
        const double a = 2 * z(rng), b = z(rng);
        for (std::size_t j = 0; j < J; ++j)
            v(t, j) = 5 + a * f(1, j) + b * f(2, j) + noise_sd * z(rng);
    }
    if (phi) *phi = f.bottomRows(2);
    return fxtest::panel(v, CurveKind::SQUARED);
}

}  // namespace

TEST_CASE("eigendecompose matches a Jacobi oracle on the symmetrised kernel") {
    const std::size_t J = 17;
    IntradayGrid g(J);
    Matrix x = fxtest::random_matrix(40, J, 8);
    CovKernel k{g, (x.transpose() * x) / 40.0, KernelNormalization::LAG0};
    auto basis = eigendecompose(k, 5);

    Matrix s(J, J);
    for (std::size_t i = 0; i < J; ++i)
        for (std::size_t j = 0; j < J; ++j)
            s(i, j) = std::sqrt(g.weights()[i]) * k.matrix(i, j) * std::sqrt(g.weights()[j]);
    auto [vals, vecs] = jacobi(s);
    for (std::size_t l = 0; l < 5; ++l) {
        CHECK(basis.eigenvalues[l] == doctest::Approx(vals[l]).epsilon(1e-10));
        Vector phi(J);
        for (std::size_t j = 0; j < J; ++j) phi(j) = vecs(j, l) / std::sqrt(g.weights()[j]);
        CHECK(std::abs(inner(g, basis.function(l), {phi.data(), J})) == doctest::Approx(1.0).epsilon(1e-8));
    }
    for (std::size_t l = 0; l < 5; ++l)
        for (std::size_t m = 0; m < 5; ++m)
            CHECK(inner(g, basis.function(l), basis.function(m)) == doctest::Approx(l == m ? 1.0 : 0.0).epsilon(1e-8));
}

TEST_CASE("degenerate and rank-one kernels") {
    const std::size_t J = 10;
    IntradayGrid g(J);
    Matrix inv_w = Matrix::Zero(J, J);
    for (std::size_t j = 0; j < J; ++j) inv_w(j, j) = 0.3 / g.weights()[j];
    auto flat = eigendecompose(CovKernel{g, inv_w, KernelNormalization::LAG0}, J);
    for (std::size_t l = 0; l < J; ++l) {
        CHECK(flat.eigenvalues[l] == doctest::Approx(0.3));
        CHECK(flat.variation_explained[l] == doctest::Approx(1.0 / J));
    }

    Matrix phi = fxtest::quadrature_orthonormal(g, 2).row(1);
    Matrix k = phi.transpose() * phi;
    auto r1 = eigendecompose(CovKernel{g, k, KernelNormalization::LAG0}, 2);
    CHECK(r1.eigenvalues[0] == doctest::Approx(1.0));
    CHECK(std::abs(r1.eigenvalues[1]) < 1e-12);
    CHECK(std::abs(inner(g, r1.function(0), {phi.data(), J})) == doctest::Approx(1.0));

    Matrix two(2, J);
    two.row(0) = 2 * phi;
    two.row(1) = -2 * phi;
    auto cov = lag0_covariance(fxtest::panel(two));
    auto b = eigendecompose(cov, 1);
    CHECK(b.eigenvalues[0] == doctest::Approx(4.0));

    CHECK_THROWS_AS((void)eigendecompose(CovKernel{g, Matrix::Zero(J, J), KernelNormalization::LAG0}, 2),
                    DegenerateInputError);
    Matrix asym = Matrix::Identity(J, J);
    asym(0, 1) = 1.0;
    CHECK_THROWS_AS((void)eigendecompose(CovKernel{g, asym, KernelNormalization::LAG0}, 2), InputError);
}

TEST_CASE("eigenvalue ratio") {
    std::vector<double> a{10, 5, 0.01, 0.009, 0.008};
    CHECK(eigenvalue_ratio(a, 4) == 2);
    std::vector<double> b{1, 1e-12, 1e-13};
    CHECK(eigenvalue_ratio(b, 2) == 1);
    std::vector<double> geo{0.5, 0.25, 0.125, 0.0625};
    CHECK(eigenvalue_ratio(geo, 3) == 1);
    CHECK_THROWS_AS((void)eigenvalue_ratio(a, 0), InputError);
}

TEST_CASE("TFPCA recovers a planted two-factor structure") {
    Matrix phi;
    auto sq = two_factor_panel(2000, 32, 5, 0.1, &phi);
    auto b = tfpca(sq, 4);
    CHECK(b.eigenvalues[0] == doctest::Approx(4.0).epsilon(0.1));
    CHECK(b.eigenvalues[1] == doctest::Approx(1.0).epsilon(0.1));
    for (std::size_t l = 0; l < 2; ++l) {
        Vector d = Eigen::Map<const Vector>(b.function(l).data(), 32);
        Vector p = phi.row(static_cast<Eigen::Index>(l)).transpose();
        const double err = std::min((d - p).cwiseAbs().maxCoeff(), (d + p).cwiseAbs().maxCoeff());
        CHECK(err < 0.1);
    }
    CHECK(select_dimension(b, 3).size() == 2);
    CHECK_THROWS_AS((void)tfpca(fxtest::panel(Matrix::Constant(20, 8, 3.0), CurveKind::SQUARED), 2),
                    DegenerateInputError);
}

TEST_CASE("DFPCA against TFPCA and under dependence") {
    auto sq = two_factor_panel(2000, 24, 9, 0.1);
    auto t = tfpca(sq, 2);
    auto d0 = dfpca(sq, 2, 0);
    CHECK((t.functions - d0.functions).cwiseAbs().maxCoeff() < 1e-12);
    auto bart = bartlett_covariance(sq, 0);
    CHECK((bart.matrix - lag0_covariance(sq).matrix).cwiseAbs().maxCoeff() == 0.0);
    // the leading function integrates to about zero here, so compare up to sign
    int close = 0;
    for (std::uint64_t seed = 30; seed < 40; ++seed) {
        auto p = two_factor_panel(2000, 24, seed, 0.1);
        auto a = tfpca(p, 1), b = dfpca(p, 1);
        close += std::min((a.functions - b.functions).cwiseAbs().maxCoeff(),
                          (a.functions + b.functions).cwiseAbs().maxCoeff()) < 0.15;
    }
    CHECK(close >= 9);

    IntradayGrid g(16);
    Matrix f = fxtest::quadrature_orthonormal(g, 2);
    std::mt19937_64 rng(2);
    std::normal_distribution<double> z;
    Matrix v(1500, 16);
    double s = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
        s = 0.8 * s + z(rng);
        v.row(i) = 3 * f.row(0) + s * f.row(1);
    }
    auto ar = fxtest::panel(v, CurveKind::SQUARED);
    CHECK(dfpca(ar, 1, 30).eigenvalues[0] > tfpca(ar, 1).eigenvalues[0]);
    CHECK_THROWS_AS((void)dfpca(ar, 1, 1500), InputError);
}

TEST_CASE("LFPCA branches") {
    auto sq = two_factor_panel(400, 16, 3, 0.1);
    auto st = lfpca(sq, 3, true, 7);
    auto d = dfpca(sq, 3, 7);
    CHECK(st.functions == d.functions);
    CHECK(st.eigenvalues == d.eigenvalues);

    IntradayGrid g(12);
    Vector fcurve(12);
    for (int j = 0; j < 12; ++j) fcurve(j) = 1.0 + g.points()[j] * g.points()[j];
    Matrix v = fcurve.transpose().replicate(50, 1);
    auto ns = lfpca(fxtest::panel(v, CurveKind::SQUARED), 1, false);
    const double nrm = std::sqrt(inner(g, {fcurve.data(), 12}, {fcurve.data(), 12}));
    for (int j = 0; j < 12; ++j) CHECK(ns.functions(0, j) == doctest::Approx(fcurve(j) / nrm));

    // long memory on one direction, white noise on another
    const std::size_t N = 3000, J = 16;
    IntradayGrid g2(J);
    Matrix f = fxtest::quadrature_orthonormal(g2, 3);
    auto lm = fractional_noise(N, 0.35, 21);
    std::mt19937_64 rng(22);
    std::normal_distribution<double> z;
    Matrix w(N, J);
    for (std::size_t t = 0; t < N; ++t) w.row(t) = 4 * f.row(0) + lm[t] * f.row(1) + z(rng) * f.row(2);
    auto lb = lfpca(fxtest::panel(w, CurveKind::SQUARED), 1, true);
    CHECK(std::abs(inner(g2, lb.function(0), {f.row(1).data(), J})) > 0.9);
}

TEST_CASE("multi-level decomposition") {
    Matrix a = fxtest::random_matrix(30, 8, 1).cwiseAbs();
    std::vector<CurveSeries> same{fxtest::panel(a, CurveKind::SQUARED), fxtest::panel(a, CurveKind::SQUARED),
                                  fxtest::panel(a, CurveKind::SQUARED)};
    auto d = multilevel_decompose(same);
    for (std::size_t j = 0; j < 3; ++j) {
        CHECK(d.mu_specific[j].cwiseAbs().maxCoeff() < 1e-12);
        CHECK(d.u_specific[j].values.cwiseAbs().maxCoeff() < 1e-12);
    }

    Vector c = Vector::LinSpaced(8, 0.5, 2.0);
    Matrix b = a.rowwise() + c.transpose();
    std::vector<CurveSeries> shifted{fxtest::panel(a, CurveKind::SQUARED), fxtest::panel(b, CurveKind::SQUARED)};
    auto s = multilevel_decompose(shifted);
    CHECK((s.mu_specific[0] + c / 2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s.mu_specific[1] - c / 2).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(s.u_specific[0].values.cwiseAbs().maxCoeff() < 1e-12);

    // y = mu_c + mu_j + U_c + U_j exactly
    std::vector<CurveSeries> rnd;
    for (std::uint64_t k = 0; k < 3; ++k) rnd.push_back(fxtest::panel(fxtest::random_matrix(25, 6, 40 + k).cwiseAbs(), CurveKind::SQUARED));
    auto r = multilevel_decompose(rnd);
    for (std::size_t j = 0; j < 3; ++j) {
        Matrix rebuilt = (r.u_common.values + r.u_specific[j].values).rowwise() +
                         (r.mu_common + r.mu_specific[j]).transpose();
        CHECK((rebuilt - rnd[j].values).cwiseAbs().maxCoeff() < 1e-12);
    }

    std::vector<CurveSeries> mis{fxtest::panel(a, CurveKind::SQUARED), fxtest::panel(a.topRows(20), CurveKind::SQUARED)};
    CHECK_THROWS_AS((void)multilevel_decompose(mis), AlignmentError);
}

TEST_CASE("MFPCA and concatenation") {
    std::vector<CurveSeries> panels;
    for (std::uint64_t k = 0; k < 2; ++k) panels.push_back(two_factor_panel(300, 16, 60 + k, 0.1));
    auto m = mfpca(panels, 3);
    REQUIRE(m.specific.size() == 2);
    CHECK(m.common.size() >= 1);
    auto both = concatenate(m.common, m.specific[0]);
    CHECK(both.size() == m.common.size() + m.specific[0].size());
    CHECK(both.functions.topRows(static_cast<Eigen::Index>(m.common.size())) == m.common.functions);
    CHECK(to_string(basis_method_from_string("LFPCA")) == "LFPCA");
    CHECK_THROWS_AS((void)basis_method_from_string("PCA"), InputError);
}
