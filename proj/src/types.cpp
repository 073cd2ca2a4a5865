#include "fxvol/types.hpp"

#include "fxvol/errors.hpp"

#include <fmt/format.h>

#include <chrono>
#include <cmath>

namespace fxvol {

IntradayGrid::IntradayGrid(std::size_t points) {
    if (points == 0) {
        throw ShapeError("intraday grid needs at least one point");
    }
    u_.resize(points);
    w_.resize(points);
    if (points == 1) {
        u_[0] = 1.0;
        w_[0] = 1.0;
        return;
    }
    const double step = 1.0 / static_cast<double>(points - 1);
    for (std::size_t j = 0; j < points; ++j) {
        u_[j] = static_cast<double>(j) * step;
        w_[j] = step;
    }
    u_.back() = 1.0;
    w_.front() = 0.5 * step;
    w_.back() = 0.5 * step;
}

double IntradayGrid::spacing() const noexcept {
    return u_.size() > 1 ? 1.0 / static_cast<double>(u_.size() - 1) : 1.0;
}

std::string_view to_string(CurveKind kind) noexcept {
    switch (kind) {
        case CurveKind::OCIDR: return "OCIDR";
        case CurveKind::OCIBAS: return "OCIBAS";
        case CurveKind::SQUARED: return "SQUARED";
        case CurveKind::VARIANCE: return "VARIANCE";
        case CurveKind::RESIDUAL: return "RESIDUAL";
        case CurveKind::GENERIC: return "GENERIC";
    }
    return "GENERIC";
}

CurveKind curve_kind_from_string(std::string_view name) {
    for (auto k : {CurveKind::OCIDR, CurveKind::OCIBAS, CurveKind::SQUARED, CurveKind::VARIANCE,
                   CurveKind::RESIDUAL, CurveKind::GENERIC}) {
        if (to_string(k) == name) return k;
    }
    throw InputError(fmt::format("unknown curve kind '{}'", name));
}

CurveSeries::CurveSeries(IntradayGrid g, std::vector<std::string> d, Matrix v, CurveKind k)
    : grid(std::move(g)), dates(std::move(d)), values(std::move(v)), kind(k) {
    if (static_cast<std::size_t>(values.rows()) != dates.size()) {
        throw ShapeError(fmt::format("curve series has {} rows but {} dates", values.rows(), dates.size()));
    }
    if (static_cast<std::size_t>(values.cols()) != grid.size()) {
        throw ShapeError(fmt::format("curve series has {} columns but grid has {} points", values.cols(),
                                     grid.size()));
    }
}

CurveSeries CurveSeries::slice(std::size_t first, std::size_t count) const {
    if (first + count > days()) {
        throw ShapeError(fmt::format("slice [{}, {}) exceeds {} days", first, first + count, days()));
    }
    std::vector<std::string> d(dates.begin() + static_cast<std::ptrdiff_t>(first),
                               dates.begin() + static_cast<std::ptrdiff_t>(first + count));
    Matrix v = values.middleRows(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(count));
    return CurveSeries(grid, std::move(d), std::move(v), kind);
}

void CurveSeries::validate() const {
    for (Eigen::Index t = 0; t < values.rows(); ++t) {
        for (Eigen::Index j = 0; j < values.cols(); ++j) {
            const double x = values(t, j);
            if (!std::isfinite(x)) {
                throw DomainError(fmt::format("{} curve has a non-finite value on day {} ({}), point {}",
                                              to_string(kind), t, dates[static_cast<std::size_t>(t)], j));
            }
            if (kind == CurveKind::VARIANCE && !(x > 0.0)) {
                throw DomainError(fmt::format("variance curve must be positive (day {}, point {})", t, j));
            }
            if (kind == CurveKind::SQUARED && x < 0.0) {
                throw DomainError(fmt::format("squared curve must be non-negative (day {}, point {})", t, j));
            }
        }
    }
}

std::vector<std::string> synthetic_dates(std::size_t n) {
    using namespace std::chrono;
    std::vector<std::string> out;
    out.reserve(n);
    sys_days day = sys_days{year{2001} / January / 1};  // a Monday
    while (out.size() < n) {
        const weekday wd{day};
        if (wd != Saturday && wd != Sunday) {
            const year_month_day ymd{day};
            out.push_back(fmt::format("{:04d}-{:02d}-{:02d}", static_cast<int>(ymd.year()),
                                      static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day())));
        }
        day += days{1};
    }
    return out;
}

void require_aligned(const CurveSeries& a, const CurveSeries& b, std::string_view context) {
    if (a.points() != b.points()) {
        throw AlignmentError(fmt::format("{}: grids differ ({} vs {} points)", context, a.points(), b.points()));
    }
    if (a.dates != b.dates) {
        throw AlignmentError(fmt::format("{}: dates differ", context));
    }
}

}  // namespace fxvol
