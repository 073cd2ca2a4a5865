#pragma once

#include "fxvol/basis.hpp"
#include "fxvol/types.hpp"

#include <cmath>
#include <cstdint>
#include <random>

namespace fxtest {

using fxvol::Matrix;
using fxvol::Vector;

inline Matrix random_matrix(std::size_t rows, std::size_t cols, std::uint64_t seed, double scale = 1.0) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z(0.0, scale);
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.rows(); ++i)
        for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = z(rng);
    return m;
}

inline fxvol::CurveSeries panel(const Matrix& values, fxvol::CurveKind kind = fxvol::CurveKind::GENERIC) {
    return {fxvol::IntradayGrid(static_cast<std::size_t>(values.cols())),
            fxvol::synthetic_dates(static_cast<std::size_t>(values.rows())), values, kind};
}

// Functions orthonormal under the trapezoid rule: 1 and sqrt(2) cos(k pi u) are
// only approximately so on a grid, so orthonormalise explicitly.
inline Matrix quadrature_orthonormal(const fxvol::IntradayGrid& g, std::size_t k) {
    const auto J = static_cast<Eigen::Index>(g.size());
    Matrix f(static_cast<Eigen::Index>(k), J);
    for (Eigen::Index l = 0; l < f.rows(); ++l)
        for (Eigen::Index j = 0; j < J; ++j) f(l, j) = std::cos(static_cast<double>(l) * M_PI * g.points()[j]);
    const auto w = g.weights();
    for (Eigen::Index l = 0; l < f.rows(); ++l) {
        for (Eigen::Index m = 0; m < l; ++m) {
            double ip = 0.0;
            for (Eigen::Index j = 0; j < J; ++j) ip += w[j] * f(l, j) * f(m, j);
            f.row(l) -= ip * f.row(m);
        }
        double nn = 0.0;
        for (Eigen::Index j = 0; j < J; ++j) nn += w[j] * f(l, j) * f(l, j);
        f.row(l) /= std::sqrt(nn);
    }
    return f;
}

inline fxvol::BasisSet constant_basis(std::size_t J) {
    fxvol::BasisSet b;
    b.grid = fxvol::IntradayGrid(J);
    b.functions = Matrix::Ones(1, static_cast<Eigen::Index>(J));
    b.eigenvalues = {1.0};
    b.variation_explained = {1.0};
    return b;
}

}  // namespace fxtest
