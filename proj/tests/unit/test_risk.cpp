#include "fxvol/errors.hpp"
#include "fxvol/risk.hpp"
#include "fxvol/stats.hpp"

#include "support.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace fxvol;

namespace {

VaRCurve flat_var(std::size_t J, double v, std::string date) {
    return {0.01, Vector::Constant(static_cast<Eigen::Index>(J), v), std::move(date)};
}

ViolationSeries bernoulli(std::size_t T, std::size_t J, double p, std::mt19937_64& rng) {
    std::bernoulli_distribution b(p);
    ViolationSeries v;
    v.zeta = p;
    v.values.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(J));
    for (Eigen::Index t = 0; t < v.values.rows(); ++t)
        for (Eigen::Index j = 0; j < v.values.cols(); ++j) v.values(t, j) = b(rng) ? 1.0 : 0.0;
    v.dates = synthetic_dates(T);
    return v;
}

}  // namespace

TEST_CASE("bootstrap quantile curve equals a naive resampling oracle") {
    Matrix r = fxtest::random_matrix(80, 7, 12);
    auto res = fxtest::panel(r, CurveKind::RESIDUAL);
    const std::size_t B = 1000;
    const std::uint64_t seed = 99;
    auto q = residual_quantile_curve(res, 0.05, B, seed);

    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, 79);
    std::vector<std::size_t> draws(B);
    for (auto& d : draws) d = pick(rng);
    for (Eigen::Index j = 0; j < 7; ++j) {
        std::vector<double> col;
        for (auto d : draws) col.push_back(r(static_cast<Eigen::Index>(d), j));
        std::sort(col.begin(), col.end());
        const double h = 0.05 * (B - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const double expect = col[lo] + (h - static_cast<double>(lo)) * (col[lo + 1] - col[lo]);
        CHECK(q(j) == expect);
    }
    CHECK(residual_quantile_curve(res, 0.05, B, seed) == q);

    Matrix same = Vector::LinSpaced(7, -1, 1).transpose().replicate(60, 1);
    auto s = residual_quantile_curve(fxtest::panel(same, CurveKind::RESIDUAL), 0.01, 1000, 1);
    CHECK((s.transpose() - same.row(0)).cwiseAbs().maxCoeff() == 0.0);
    CHECK_THROWS_AS((void)residual_quantile_curve(res, 0.05, 999, 1), InputError);
}

TEST_CASE("bootstrap median of a symmetric panel") {
    Matrix r = fxtest::random_matrix(200, 5, 3);
    Matrix both(400, 5);
    both << r, -r;
    auto pool = fxtest::panel(both, CurveKind::RESIDUAL);
    auto q = residual_quantile_curve(pool, 0.5, 2000, 4);
    // bootstrap standard error from replicate seeds
    Vector sum = Vector::Zero(5), sq = Vector::Zero(5);
    for (std::uint64_t s = 100; s < 140; ++s) {
        auto r2 = residual_quantile_curve(pool, 0.5, 2000, s);
        sum += r2;
        sq += r2.cwiseAbs2();
    }
    Vector se = (sq / 40 - (sum / 40).cwiseAbs2()).cwiseSqrt();
    for (Eigen::Index j = 0; j < 5; ++j) CHECK(std::abs(q(j)) < 3 * se(j));
    auto lo = residual_quantile_curve(fxtest::panel(both, CurveKind::RESIDUAL), 0.05, 2000, 4);
    auto hi = residual_quantile_curve(fxtest::panel(-both, CurveKind::RESIDUAL), 0.95, 2000, 4);
    CHECK((lo + hi).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("VaR forecast") {
    std::vector<double> sigma{1.0, 2.0, 3.0}, eps{-0.5, -1.5, 0.0};
    auto v = var_forecast(sigma, eps, 0.01, "d");
    CHECK(v.curve(1) == -3.0);
    CHECK(v.curve(2) == 0.0);
    std::vector<double> unit(3, 1.0);
    CHECK(var_forecast(unit, eps, 0.01).curve == Eigen::Map<const Vector>(eps.data(), 3));
    std::vector<double> scaled{2.5, 5.0, 7.5};
    CHECK(var_forecast(scaled, eps, 0.01).curve.isApprox(2.5 * v.curve));
    std::vector<double> two(2, 1.0), zero{1.0, 0.0, 1.0};
    CHECK_THROWS_AS((void)var_forecast(two, eps, 0.01), ShapeError);
    CHECK_THROWS_AS((void)var_forecast(zero, eps, 0.01), DomainError);
}

TEST_CASE("violation indicators") {
    Matrix y(2, 4);
    y << -2, -2, -2, -2, 0, 0, -1.5, 0;
    auto s = fxtest::panel(y);
    std::vector<VaRCurve> var{flat_var(4, -1, s.dates[0]), flat_var(4, -1, s.dates[1])};
    auto v = violations(s, var, Side::LOWER);
    CHECK(v.values.row(0).sum() == 4.0);
    CHECK(v.values.row(1).sum() == 1.0);
    CHECK(v.values(1, 2) == 1.0);
    auto rates = exceedance_rates(v);
    CHECK(rates[1] == doctest::Approx(0.25));

    std::vector<VaRCurve> eq{flat_var(4, -2, s.dates[0]), flat_var(4, 0, s.dates[1])};
    auto none = violations(s, eq, Side::LOWER);
    CHECK(none.values.row(0).sum() == 0.0);
    CHECK(violations(s, eq, Side::UPPER).values.row(1).sum() == 0.0);

    // an increasing transform of both sides leaves the indicators alone
    Matrix ty = y.array().exp();
    std::vector<VaRCurve> tv{flat_var(4, std::exp(-1), s.dates[0]), flat_var(4, std::exp(-1), s.dates[1])};
    CHECK(violations(fxtest::panel(ty), tv, Side::LOWER).values == v.values);

    std::vector<VaRCurve> wrong{flat_var(4, -1, "x"), flat_var(4, -1, s.dates[1])};
    CHECK_THROWS_AS((void)violations(s, wrong, Side::LOWER), AlignmentError);
}

TEST_CASE("unbiasedness backtest") {
    std::mt19937_64 rng(17);
    int keep = 0;
    for (int r = 0; r < 100; ++r) keep += backtest_unbiasedness(bernoulli(800, 24, 0.01, rng)).pvalue >= 0.05;
    CHECK(keep >= 88);

    ViolationSeries zero;
    zero.zeta = 0.01;
    zero.values = Matrix::Zero(800, 24);
    zero.dates = synthetic_dates(800);
    CHECK(backtest_unbiasedness(zero).pvalue < 0.05);

    // p-values under the null are close to uniform at zeta = 0.5
    std::vector<double> p;
    for (int r = 0; r < 500; ++r) p.push_back(backtest_unbiasedness(bernoulli(200, 4, 0.5, rng)).pvalue);
    std::sort(p.begin(), p.end());
    double ks = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        ks = std::max(ks, std::abs(p[i] - static_cast<double>(i) / 500.0));
        ks = std::max(ks, std::abs(p[i] - static_cast<double>(i + 1) / 500.0));
    }
    CHECK(ks < 0.1);
    CHECK_THROWS_AS((void)backtest_unbiasedness(bernoulli(50, 4, 0.01, rng)), InsufficientDataError);
}

TEST_CASE("independence backtest") {
    std::mt19937_64 rng(23);
    std::vector<std::size_t> lags{1, 5, 10, 20};
    int keep = 0, power = 0;
    for (int r = 0; r < 100; ++r) {
        auto iid = backtest_independence(bernoulli(500, 24, 0.05, rng), lags);
        keep += iid[0].pvalue >= 0.05;
        auto v = bernoulli(500, 24, 0.01, rng);
        v.values.middleRows(200, 40).setConstant(1.0);
        power += backtest_independence(v, lags)[0].pvalue < 0.05;
    }
    CHECK(keep >= 88);
    CHECK(power >= 95);
    std::vector<std::size_t> bad{0, 1};
    CHECK_THROWS_AS((void)backtest_independence(bernoulli(500, 4, 0.05, rng), bad), InputError);
    ViolationSeries flat;
    flat.values = Matrix::Zero(100, 4);
    flat.dates = synthetic_dates(100);
    std::vector<std::size_t> one{1};
    CHECK_THROWS_AS((void)backtest_independence(flat, one), DegenerateInputError);
}
