#include "fxvol/curvebuild.hpp"

#include "fxvol/errors.hpp"

#include <fmt/format.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <map>
#include <set>
#include <string_view>

namespace fxvol {
namespace {

std::vector<std::string_view> split_csv(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        while (!field.empty() && (field.front() == ' ' || field.front() == '\t')) field.remove_prefix(1);
        while (!field.empty() && (field.back() == ' ' || field.back() == '\t' || field.back() == '\r'))
            field.remove_suffix(1);
        out.push_back(field);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

bool is_iso_date(std::string_view s) {
    if (s.size() != 10 || s[4] != '-' || s[7] != '-') return false;
    for (std::size_t i : {0U, 1U, 2U, 3U, 5U, 6U, 8U, 9U}) {
        if (s[i] < '0' || s[i] > '9') return false;
    }
    const int month = (s[5] - '0') * 10 + (s[6] - '0');
    const int day = (s[8] - '0') * 10 + (s[9] - '0');
    return month >= 1 && month <= 12 && day >= 1 && day <= 31;
}

int parse_minute(std::string_view s, std::size_t line) {
    // HH:MM, optionally followed by :SS which is ignored
    if (s.size() < 5 || s[2] != ':') throw ParseError(fmt::format("bad time '{}', expected HH:MM", s), line);
    int hh = 0;
    int mm = 0;
    auto r1 = std::from_chars(s.data(), s.data() + 2, hh);
    auto r2 = std::from_chars(s.data() + 3, s.data() + 5, mm);
    if (r1.ec != std::errc{} || r2.ec != std::errc{} || hh > 23 || mm > 59) {
        throw ParseError(fmt::format("bad time '{}', expected HH:MM", s), line);
    }
    return hh * 60 + mm;
}

double parse_price(std::string_view s, std::string_view name, std::size_t line) {
    double v = 0.0;
    auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
        throw ParseError(fmt::format("bad {} price '{}'", name, s), line);
    }
    if (v < 0.0) throw ParseError(fmt::format("negative {} price {}", name, v), line);
    return v;
}

struct DayQuotes {
    std::vector<double> bid, ask, mid;
    std::vector<bool> seen;
    explicit DayQuotes(std::size_t j) : bid(j), ask(j), mid(j), seen(j, false) {}
};

void fill_gaps(std::vector<double>& v, const std::vector<bool>& seen) {
    const std::size_t n = v.size();
    std::size_t first = n;
    for (std::size_t j = 0; j < n; ++j) {
        if (seen[j]) {
            first = j;
            break;
        }
    }
    if (first == n) return;
    for (std::size_t j = 0; j < first; ++j) v[j] = v[first];
    std::size_t prev = first;
    for (std::size_t j = first + 1; j < n; ++j) {
        if (!seen[j]) continue;
        for (std::size_t k = prev + 1; k < j; ++k) {
            const double f = static_cast<double>(k - prev) / static_cast<double>(j - prev);
            v[k] = v[prev] + f * (v[j] - v[prev]);
        }
        prev = j;
    }
    for (std::size_t j = prev + 1; j < n; ++j) v[j] = v[prev];
}

void require_two_days(std::size_t n, std::string_view what) {
    if (n < 2) throw InsufficientDataError(fmt::format("{} needs at least two trading days, got {}", what, n));
}

}  // namespace

void QuotePanel::validate() const {
    const auto n = static_cast<Eigen::Index>(dates.size());
    const auto j = static_cast<Eigen::Index>(grid.size());
    for (const Matrix* m : {&bid, &ask, &mid}) {
        if (m->rows() != n || m->cols() != j) throw ShapeError("quote panel matrices do not match dates x grid");
    }
    for (std::size_t t = 1; t < dates.size(); ++t) {
        if (!(dates[t - 1] < dates[t])) throw InputError("quote panel dates must be strictly increasing");
    }
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index u = 0; u < j; ++u) {
            if (ask(t, u) < bid(t, u)) {
                throw InputError(fmt::format("crossed quote on {} at slot {}", dates[static_cast<std::size_t>(t)], u));
            }
            if (bid(t, u) < 0.0 || !std::isfinite(ask(t, u)) || !std::isfinite(mid(t, u))) {
                throw InputError("quote panel prices must be finite and non-negative");
            }
        }
    }
}

SessionSpec SessionSpec::full_day(std::size_t points) {
    if (points == 0) throw ShapeError("session needs at least one slot");
    const double step = 1440.0 / static_cast<double>(points);
    return {0, static_cast<int>(std::lround(step * static_cast<double>(points - 1)))};
}

IngestResult ingest_quotes(std::istream& csv, const IntradayGrid& grid, const IngestOptions& options) {
    const std::size_t J = grid.size();
    const SessionSpec session = options.session.value_or(SessionSpec::full_day(J));
    if (session.close_minute < session.open_minute || (J > 1 && session.close_minute == session.open_minute)) {
        throw ConfigError("session close must come after session open");
    }
    const double step = J > 1 ? static_cast<double>(session.close_minute - session.open_minute) / static_cast<double>(J - 1)
                              : 1.0;
    const std::set<std::string> excluded(options.exclude_dates.begin(), options.exclude_dates.end());

    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(csv, line)) throw ParseError("empty quote file", 1);
    ++line_no;
    const auto header = split_csv(line);
    const bool has_mid = header.size() == 5;
    if (header.size() < 4 || header.size() > 5 || header[0] != "date" || header[1] != "time" || header[2] != "bid" ||
        header[3] != "ask" || (has_mid && header[4] != "mid")) {
        throw ParseError("header must be date,time,bid,ask[,mid]", line_no);
    }

    IngestResult result;
    std::map<std::string, DayQuotes> days;
    while (std::getline(csv, line)) {
        ++line_no;
        if (line.empty() || line == "\r") continue;
        const auto f = split_csv(line);
        if (f.size() != header.size()) {
            throw ParseError(fmt::format("expected {} fields, got {}", header.size(), f.size()), line_no);
        }
        if (!is_iso_date(f[0])) throw ParseError(fmt::format("bad date '{}', expected YYYY-MM-DD", f[0]), line_no);
        const int minute = parse_minute(f[1], line_no);
        const double bid = parse_price(f[2], "bid", line_no);
        const double ask = parse_price(f[3], "ask", line_no);
        if (ask < bid) throw ParseError(fmt::format("crossed quote: ask {} below bid {}", ask, bid), line_no);
        const double mid = (has_mid && !f[4].empty()) ? parse_price(f[4], "mid", line_no) : 0.5 * (bid + ask);

        const std::string date(f[0]);
        const double pos = (static_cast<double>(minute - session.open_minute)) / step;
        const double slot_f = std::round(pos);
        if (excluded.count(date) != 0 || slot_f < 0.0 || slot_f > static_cast<double>(J - 1) ||
            std::fabs(pos - slot_f) > 0.5) {
            ++result.report.ignored_rows;
            continue;
        }
        const auto slot = static_cast<std::size_t>(slot_f);
        auto it = days.try_emplace(date, J).first;
        it->second.bid[slot] = bid;
        it->second.ask[slot] = ask;
        it->second.mid[slot] = mid;
        it->second.seen[slot] = true;
    }

    std::vector<std::pair<std::string, DayQuotes*>> kept;
    for (auto& [date, q] : days) {
        const auto present = static_cast<std::size_t>(std::count(q.seen.begin(), q.seen.end(), true));
        const double missing = 1.0 - static_cast<double>(present) / static_cast<double>(J);
        if (missing > options.max_missing_share) {
            result.report.dropped_dates.push_back(date);
            result.report.missing_share.push_back(missing);
            continue;
        }
        result.report.interpolated_cells += J - present;
        fill_gaps(q.bid, q.seen);
        fill_gaps(q.ask, q.seen);
        fill_gaps(q.mid, q.seen);
        kept.emplace_back(date, &q);
    }
    require_two_days(kept.size(), "quote ingestion");

    QuotePanel& p = result.panel;
    p.grid = grid;
    const auto n = static_cast<Eigen::Index>(kept.size());
    p.bid.resize(n, static_cast<Eigen::Index>(J));
    p.ask.resize(n, static_cast<Eigen::Index>(J));
    p.mid.resize(n, static_cast<Eigen::Index>(J));
    for (Eigen::Index t = 0; t < n; ++t) {
        const auto& [date, q] = kept[static_cast<std::size_t>(t)];
        p.dates.push_back(date);
        for (std::size_t u = 0; u < J; ++u) {
            const auto c = static_cast<Eigen::Index>(u);
            p.bid(t, c) = q->bid[u];
            p.ask(t, c) = q->ask[u];
            p.mid(t, c) = q->mid[u];
        }
    }
    p.validate();
    return result;
}

CurveSeries build_ocidr(const QuotePanel& panel) {
    require_two_days(panel.days(), "OCIDR");
    if ((panel.mid.array() <= 0.0).any()) throw DomainError("OCIDR needs strictly positive mid prices");
    const auto n = static_cast<Eigen::Index>(panel.days());
    const Eigen::Index J = panel.mid.cols();
    Matrix y(n - 1, J);
    for (Eigen::Index t = 1; t < n; ++t) {
        const double prev_close = std::log(panel.mid(t - 1, J - 1));
        for (Eigen::Index u = 0; u < J; ++u) y(t - 1, u) = (std::log(panel.mid(t, u)) - prev_close) * 100.0;
    }
    return CurveSeries(panel.grid, {panel.dates.begin() + 1, panel.dates.end()}, std::move(y), CurveKind::OCIDR);
}

CurveSeries build_ocibas(const QuotePanel& panel) {
    require_two_days(panel.days(), "OCIBAS");
    const auto n = static_cast<Eigen::Index>(panel.days());
    const Eigen::Index J = panel.mid.cols();
    const Matrix spread = panel.ask - panel.bid;
    Matrix x(n - 1, J);
    for (Eigen::Index t = 1; t < n; ++t) {
        for (Eigen::Index u = 0; u < J; ++u) x(t - 1, u) = spread(t, u) - spread(t - 1, J - 1);
    }
    return CurveSeries(panel.grid, {panel.dates.begin() + 1, panel.dates.end()}, std::move(x), CurveKind::OCIBAS);
}

Demeaned demean(const CurveSeries& series, std::optional<std::span<const double>> mean) {
    if (series.days() == 0) throw InsufficientDataError("demean needs at least one curve");
    const auto J = static_cast<Eigen::Index>(series.points());
    Vector c(J);
    if (mean) {
        if (static_cast<Eigen::Index>(mean->size()) != J) {
            throw ShapeError(fmt::format("mean curve has {} points, series has {}", mean->size(), J));
        }
        for (Eigen::Index j = 0; j < J; ++j) c(j) = (*mean)[static_cast<std::size_t>(j)];
    } else {
        c = series.values.colwise().mean().transpose();
    }
    Matrix centered = series.values.rowwise() - c.transpose();
    return {CurveSeries(series.grid, series.dates, std::move(centered), series.kind), c};
}

std::vector<double> realised_vol(const QuotePanel& panel) {
    require_two_days(panel.days(), "realised volatility");
    if ((panel.mid.array() <= 0.0).any()) throw DomainError("realised volatility needs strictly positive mid prices");
    const auto n = static_cast<Eigen::Index>(panel.days());
    const Eigen::Index J = panel.mid.cols();
    std::vector<double> rv;
    rv.reserve(static_cast<std::size_t>(n - 1));
    for (Eigen::Index t = 1; t < n; ++t) {
        const double overnight = 100.0 * (std::log(panel.mid(t, 0)) - std::log(panel.mid(t - 1, J - 1)));
        double s = overnight * overnight;
        for (Eigen::Index u = 1; u < J; ++u) {
            const double r = 100.0 * (std::log(panel.mid(t, u)) - std::log(panel.mid(t, u - 1)));
            s += r * r;
        }
        rv.push_back(s);
    }
    return rv;
}

CurveSeries square_series(const CurveSeries& series) {
    if (series.kind != CurveKind::OCIDR && series.kind != CurveKind::GENERIC) {
        throw InputError(fmt::format("cannot square a {} series", to_string(series.kind)));
    }
    Matrix sq = series.values.array().square().matrix();
    return CurveSeries(series.grid, series.dates, std::move(sq), CurveKind::SQUARED);
}

}  // namespace fxvol
