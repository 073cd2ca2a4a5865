#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol {

/// Row-major dense matrix. Panels store one day per row so a day's curve is a
/// contiguous span that the SIMD kernels can consume directly.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Uniform intraday grid on [0, 1] with trapezoid quadrature weights.
///
/// Points are u_j = j / (J - 1), j = 0..J-1, so the first point is the open and
/// the last point (u = 1) is the close. A single-point grid sits at u = 1 with
/// unit weight.
class IntradayGrid {
public:
    IntradayGrid() = default;
    explicit IntradayGrid(std::size_t points);

    [[nodiscard]] std::size_t size() const noexcept { return u_.size(); }
    [[nodiscard]] std::span<const double> points() const noexcept { return u_; }
    [[nodiscard]] std::span<const double> weights() const noexcept { return w_; }
    [[nodiscard]] double spacing() const noexcept;

    friend bool operator==(const IntradayGrid& a, const IntradayGrid& b) noexcept {
        return a.u_.size() == b.u_.size();
    }

private:
    std::vector<double> u_;
    std::vector<double> w_;
};

enum class CurveKind { OCIDR, OCIBAS, SQUARED, VARIANCE, RESIDUAL, GENERIC };

[[nodiscard]] std::string_view to_string(CurveKind kind) noexcept;
[[nodiscard]] CurveKind curve_kind_from_string(std::string_view name);

/// Dated panel of N curves on a common grid.
struct CurveSeries {
    IntradayGrid grid;
    std::vector<std::string> dates;
    Matrix values;
    CurveKind kind = CurveKind::GENERIC;

    CurveSeries() = default;
    CurveSeries(IntradayGrid g, std::vector<std::string> d, Matrix v, CurveKind k);

    [[nodiscard]] std::size_t days() const noexcept { return static_cast<std::size_t>(values.rows()); }
    [[nodiscard]] std::size_t points() const noexcept { return static_cast<std::size_t>(values.cols()); }
    [[nodiscard]] std::span<const double> row(std::size_t t) const noexcept {
        return {values.data() + t * points(), points()};
    }
    [[nodiscard]] std::span<double> row(std::size_t t) noexcept {
        return {values.data() + t * points(), points()};
    }

    /// Rows [first, first + count) as a new series with the same kind.
    [[nodiscard]] CurveSeries slice(std::size_t first, std::size_t count) const;

    /// Throws if the panel violates the finiteness or sign rules of its kind.
    void validate() const;
};

/// `n` consecutive weekday dates (ISO-8601) starting at 2001-01-01, for simulated data.
[[nodiscard]] std::vector<std::string> synthetic_dates(std::size_t n);

/// Throws AlignmentError unless both panels share dates and grid.
void require_aligned(const CurveSeries& a, const CurveSeries& b, std::string_view context);

}  // namespace fxvol
