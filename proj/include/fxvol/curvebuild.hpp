#pragma once

#include "fxvol/types.hpp"

#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fxvol {

/// Bid/ask/mid quotes of N trading days on a J-point intraday grid (days in rows).
struct QuotePanel {
    IntradayGrid grid;
    std::vector<std::string> dates;
    Matrix bid;
    Matrix ask;
    Matrix mid;

    [[nodiscard]] std::size_t days() const noexcept { return dates.size(); }
    void validate() const;
};

/// Clock times of the first and last grid slot, in minutes after midnight.
struct SessionSpec {
    int open_minute = 0;
    int close_minute = 1435;

    /// Evenly spaced 24-hour session: J slots of 1440/J minutes starting at midnight.
    [[nodiscard]] static SessionSpec full_day(std::size_t points);
};

struct IngestOptions {
    std::optional<SessionSpec> session;  // defaults to SessionSpec::full_day(J)
    double max_missing_share = 0.05;
    std::vector<std::string> exclude_dates;
};

struct DropReport {
    std::vector<std::string> dropped_dates;
    std::vector<double> missing_share;  // parallel to dropped_dates
    std::size_t interpolated_cells = 0;
    std::size_t ignored_rows = 0;       // outside the session window or on excluded dates
};

struct IngestResult {
    QuotePanel panel;
    DropReport report;
};

/// Parse `date,time,bid,ask[,mid]` quotes onto the grid.
///
/// Timestamps snap to the nearest slot and the last quote in a slot wins. Days
/// missing more than `max_missing_share` of their slots are dropped; the rest are
/// completed by linear interpolation within the day (nearest value at the edges).
[[nodiscard]] IngestResult ingest_quotes(std::istream& csv, const IntradayGrid& grid, const IngestOptions& options = {});

/// y_t(u) = 100 [ln P_t(u) - ln P_{t-1}(1)] from mid prices; N - 1 rows dated by day t.
[[nodiscard]] CurveSeries build_ocidr(const QuotePanel& panel);

/// IBAS_t(u) - IBAS_{t-1}(1) with IBAS = ask - bid; N - 1 rows.
[[nodiscard]] CurveSeries build_ocibas(const QuotePanel& panel);

struct Demeaned {
    CurveSeries series;
    Vector mean;
};

/// Subtract the pointwise sample mean, or `mean` verbatim when supplied.
[[nodiscard]] Demeaned demean(const CurveSeries& series, std::optional<std::span<const double>> mean = std::nullopt);

/// Daily realised variance in squared percent, including the overnight term.
/// Entry t - 1 belongs to day t (aligned with build_ocidr rows).
[[nodiscard]] std::vector<double> realised_vol(const QuotePanel& panel);

/// Pointwise square of an OCIDR or GENERIC series.
[[nodiscard]] CurveSeries square_series(const CurveSeries& series);

}  // namespace fxvol
