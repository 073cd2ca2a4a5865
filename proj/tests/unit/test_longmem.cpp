#include "fxvol/errors.hpp"
#include "fxvol/longmem.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <complex>
#include <random>

using namespace fxvol;

namespace {

std::vector<double> white(std::size_t n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> z;
    std::vector<double> x(n);
    for (auto& v : x) v = z(rng);
    return x;
}

}  // namespace

TEST_CASE("periodogram matches a direct DFT") {
    auto x = white(200, 1);
    double mu = 0.0;
    for (double v : x) mu += v;
    mu /= 200;
    auto I = periodogram(x, 10);
    REQUIRE(I.size() == 10);
    for (std::size_t j = 1; j <= 10; ++j) {
        std::complex<double> s = 0.0;
        const double lam = 2 * M_PI * static_cast<double>(j) / 200.0;
        for (std::size_t t = 0; t < 200; ++t) s += (x[t] - mu) * std::polar(1.0, -lam * static_cast<double>(t));
        CHECK(I[j - 1] == doctest::Approx(std::norm(s) / (2 * M_PI * 200)).epsilon(1e-10));
    }
}

TEST_CASE("local Whittle minimiser agrees with a grid search") {
    auto x = fractional_noise(1000, 0.25, 7);
    auto est = local_whittle(x);
    const std::size_t m = static_cast<std::size_t>(std::floor(std::pow(1000.0, 0.65)));
    CHECK(est.bandwidth_m == m);
    auto I = periodogram(x, m);
    std::vector<double> lam;
    for (std::size_t j = 1; j <= m; ++j) lam.push_back(2 * M_PI * static_cast<double>(j) / 1000.0);
    double best = 1e300, arg = 0.0;
    for (double a = -0.49; a <= 1.49; a += 1e-4) {
        double g = 0.0, logs = 0.0;
        for (std::size_t j = 0; j < m; ++j) {
            g += std::pow(lam[j], 2 * a) * I[j];
            logs += std::log(lam[j]);
        }
        const double r = std::log(g / static_cast<double>(m)) - 2 * a * logs / static_cast<double>(m);
        if (r < best) best = r, arg = a;
    }
    CHECK(std::abs(est.a_hat - arg) < 2e-4);
    CHECK(est.objective_value <= best + 1e-9);
}

TEST_CASE("local Whittle on white noise and fractional noise") {
    int ok0 = 0, ok3 = 0;
    for (std::uint64_t r = 0; r < 20; ++r) {
        ok0 += std::abs(local_whittle(white(2000, 100 + r)).a_hat) < 0.1;
        const double a = local_whittle(fractional_noise(4000, 0.3, 200 + r)).a_hat;
        ok3 += a > 0.2 && a < 0.4;
    }
    CHECK(ok0 >= 17);
    CHECK(ok3 >= 17);
}

TEST_CASE("local Whittle errors") {
    std::vector<double> c(500, 1.0);
    CHECK_THROWS_AS((void)local_whittle(c), DegenerateInputError);
    auto x = white(500, 3);
    CHECK_THROWS_AS((void)local_whittle(x, 250), InputError);
}

TEST_CASE("fractional noise is deterministic and has the planted variance") {
    CHECK(fractional_noise(300, 0.2, 5) == fractional_noise(300, 0.2, 5));
    auto x = fractional_noise(20000, 0.0, 9);
    double s = 0.0;
    for (double v : x) s += v * v;
    CHECK(s / 20000 == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("KPSS stationarity check") {
    int st = 0, rw = 0;
    for (std::uint64_t r = 0; r < 40; ++r) {
        auto a = white(1000, 300 + r);
        st += kpss_level(a).stationary;
        double c = 0.0;
        for (auto& v : a) v = c += v;
        rw += !kpss_level(a).stationary;
    }
    CHECK(st >= 34);
    CHECK(rw >= 38);
    std::vector<double> flat(200, 2.0);
    CHECK_THROWS_AS((void)kpss_level(flat), DegenerateInputError);

    IntradayGrid g(8);
    Matrix v = fxtest::random_matrix(150, 8, 4).cwiseAbs();
    auto sq = fxtest::panel(v, CurveKind::SQUARED);
    std::vector<double> ones(8, 1.0);
    auto chk = score_stationarity_check(sq, ones);
    CHECK(chk.pvalue >= 0.01);
    CHECK(chk.pvalue <= 0.10);
}
