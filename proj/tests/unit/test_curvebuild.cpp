#include "fxvol/curvebuild.hpp"
#include "fxvol/errors.hpp"
#include "fxvol/io.hpp"
#include "fxvol/pipeline.hpp"

#include "support.hpp"

#include <doctest.h>

#include <cmath>
#include <sstream>

using namespace fxvol;

namespace {

QuotePanel make_panel(const Matrix& mid, double spread = 0.0) {
    QuotePanel p;
    p.grid = IntradayGrid(static_cast<std::size_t>(mid.cols()));
    p.dates = synthetic_dates(static_cast<std::size_t>(mid.rows()));
    p.mid = mid;
    p.bid = mid.array() - spread / 2;
    p.ask = mid.array() + spread / 2;
    return p;
}

IngestOptions three_slot_session() {
    IngestOptions o;
    o.session = SessionSpec{600, 720};  // 10:00, 11:00, 12:00
    return o;
}

}  // namespace

TEST_CASE("ingest two complete days onto a three-point grid") {
    std::istringstream csv(
        "date,time,bid,ask\n"
        "2020-01-02,10:00,1.0,1.2\n2020-01-02,11:00,1.1,1.3\n2020-01-02,12:00,1.2,1.4\n"
        "2020-01-03,10:00,2.0,2.2\n2020-01-03,11:00,2.1,2.3\n2020-01-03,12:00,2.2,2.4\n");
    auto r = ingest_quotes(csv, IntradayGrid(3), three_slot_session());
    REQUIRE(r.panel.days() == 2);
    CHECK(r.panel.dates[1] == "2020-01-03");
    CHECK(r.panel.mid(1, 2) == doctest::Approx(2.3));
    CHECK(r.panel.ask(0, 1) == 1.3);
    CHECK(r.report.dropped_dates.empty());
}

TEST_CASE("ingest drops sparse days and interpolates small gaps") {
    std::istringstream csv(
        "date,time,bid,ask\n"
        "2020-01-02,10:00,1.0,1.0\n2020-01-02,11:00,1.0,1.0\n2020-01-02,12:00,1.0,1.0\n"
        "2020-01-03,10:00,2.0,2.0\n"
        "2020-01-06,10:00,3.0,3.0\n2020-01-06,11:00,3.0,3.0\n2020-01-06,12:00,3.0,3.0\n");
    auto r = ingest_quotes(csv, IntradayGrid(3), three_slot_session());
    CHECK(r.panel.days() == 2);
    REQUIRE(r.report.dropped_dates.size() == 1);
    CHECK(r.report.dropped_dates[0] == "2020-01-03");

    std::istringstream gap(
        "date,time,bid,ask\n"
        "2020-01-02,10:00,1.0,1.0\n2020-01-02,12:00,3.0,3.0\n"
        "2020-01-03,10:00,1.0,1.0\n2020-01-03,11:00,1.0,1.0\n2020-01-03,12:00,1.0,1.0\n");
    IngestOptions o = three_slot_session();
    o.max_missing_share = 0.5;
    auto g = ingest_quotes(gap, IntradayGrid(3), o);
    CHECK(g.panel.mid(0, 1) == doctest::Approx(2.0));
    CHECK(g.report.interpolated_cells == 1);
}

TEST_CASE("ingest rejects malformed input") {
    std::istringstream crossed("date,time,bid,ask\n2020-01-02,10:00,1.2,1.0\n");
    CHECK_THROWS_AS((void)ingest_quotes(crossed, IntradayGrid(3), three_slot_session()), ParseError);
    std::istringstream bad("date,time,bid,ask\n2020-01-02,10:00,abc,1.0\n");
    try {
        (void)ingest_quotes(bad, IntradayGrid(3), three_slot_session());
        FAIL("expected a parse error");
    } catch (const ParseError& e) {
        CHECK(e.line() == 2);
    }
    std::istringstream one("date,time,bid,ask\n2020-01-02,10:00,1,1\n2020-01-02,11:00,1,1\n2020-01-02,12:00,1,1\n");
    CHECK_THROWS_AS((void)ingest_quotes(one, IntradayGrid(3), three_slot_session()), InsufficientDataError);
}

TEST_CASE("OCIDR from mid prices") {
    Matrix mid(2, 3);
    mid << 100, 100, 100, 100, 100, 100;
    CHECK(build_ocidr(make_panel(mid)).values.cwiseAbs().maxCoeff() == 0.0);

    mid << 0.5, 0.7, 1.0, 1.0, std::exp(0.02), 0.9;
    auto y = build_ocidr(make_panel(mid));
    REQUIRE(y.days() == 1);
    CHECK(y.values(0, 1) == doctest::Approx(2.0).epsilon(1e-12));
    CHECK(y.values(0, 2) == doctest::Approx(100 * std::log(0.9)));
    CHECK(y.dates[0] == make_panel(mid).dates[1]);

    mid(1, 0) = 0.0;
    CHECK_THROWS_AS((void)build_ocidr(make_panel(mid)), DomainError);
    CHECK_THROWS_AS((void)build_ocidr(make_panel(Matrix::Ones(1, 3))), InsufficientDataError);
}

TEST_CASE("OCIBAS differences the spread against the previous close") {
    QuotePanel p = make_panel(Matrix::Constant(2, 3, 10.0), 0.0);
    CHECK(build_ocibas(p).values.cwiseAbs().maxCoeff() == 0.0);
    p = make_panel(Matrix::Constant(2, 3, 10.0), 0.4);
    CHECK(build_ocibas(p).values.cwiseAbs().maxCoeff() < 1e-12);
    p.bid.row(0) << 9, 9, 9;
    p.ask.row(0) << 11, 11, 11;  // spread 2 at the close of day 1
    p.bid.row(1) << 8.5, 8.5, 8.5;
    p.ask.row(1) << 11.5, 11.5, 11.5;  // spread 3
    auto s = build_ocibas(p);
    CHECK(s.values.row(0).isApprox(Matrix::Ones(1, 3)));
}

TEST_CASE("demean against a column-mean oracle") {
    Matrix v = fxtest::random_matrix(37, 9, 3);
    auto s = fxtest::panel(v);
    auto d = demean(s);
    for (Eigen::Index j = 0; j < v.cols(); ++j) {
        double m = 0.0;
        for (Eigen::Index t = 0; t < v.rows(); ++t) m += v(t, j);
        m /= static_cast<double>(v.rows());
        CHECK(d.mean(j) == doctest::Approx(m).epsilon(1e-14));
        CHECK(d.series.values(5, j) == doctest::Approx(v(5, j) - m).epsilon(1e-14));
    }
    auto twice = demean(d.series);
    CHECK(twice.mean.cwiseAbs().maxCoeff() < 1e-12);
    std::vector<double> zeros(9, 0.0);
    CHECK(demean(s, std::span<const double>(zeros)).series.values == v);
    auto c = demean(fxtest::panel(Matrix::Constant(4, 3, 2.5)));
    CHECK(c.series.values.cwiseAbs().maxCoeff() == 0.0);
    CHECK(c.mean.isApprox(Vector::Constant(3, 2.5)));
    std::vector<double> wrong(4, 0.0);
    CHECK_THROWS_AS((void)demean(s, std::span<const double>(wrong)), ShapeError);
}

TEST_CASE("realised volatility") {
    Matrix mid(2, 3);
    const double r = 0.003;
    mid << 1, 1, 1, std::exp(r), std::exp(r), std::exp(r);
    CHECK(realised_vol(make_panel(mid))[0] == doctest::Approx(std::pow(100 * r, 2)));
    mid << 1, 1, 1, 1, 1, 1;
    CHECK(realised_vol(make_panel(mid))[0] == 0.0);
    mid << 1, 1, 1, 1, std::exp(0.01), 1;
    CHECK(realised_vol(make_panel(mid))[0] == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("square_series") {
    Matrix v(1, 3);
    v << 0, -2, 3;
    auto s = square_series(fxtest::panel(v, CurveKind::OCIDR));
    CHECK(s.kind == CurveKind::SQUARED);
    CHECK(s.values(0, 1) == 4.0);
    CHECK(s.values(0, 0) == 0.0);
    CHECK_THROWS_AS((void)square_series(fxtest::panel(v, CurveKind::VARIANCE)), InputError);
}

TEST_CASE("simulated quotes round-trip through ingest and OCIDR") {
    SimulateConfig sc;
    sc.assets = {"A"};
    sc.days = 60;
    sc.grid_J = 24;
    sc.seed = 4;
    auto sim = simulate_dataset(sc);
    std::stringstream csv;
    io::write_quotes(csv, sim[0].quotes, SessionSpec::full_day(sc.grid_J));
    auto r = ingest_quotes(csv, IntradayGrid(sc.grid_J));
    CHECK(r.report.dropped_dates.empty());
    auto y = build_ocidr(r.panel);
    REQUIRE(y.days() == sim[0].ocidr.days());
    CHECK(y.dates == sim[0].ocidr.dates);
    CHECK((y.values - sim[0].ocidr.values).cwiseAbs().maxCoeff() < 1e-8);
}
