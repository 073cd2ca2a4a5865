#pragma once

#include "fxvol/basis.hpp"
#include "fxvol/curvebuild.hpp"
#include "fxvol/fgarch.hpp"
#include "fxvol/types.hpp"

#include <json.hpp>

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol::io {

using Json = nlohmann::json;

/// Shortest text that parses back to the same double.
[[nodiscard]] std::string format_double(double x);
[[nodiscard]] double parse_double(std::string_view s, std::size_t line = 0);

[[nodiscard]] std::vector<std::string_view> split_csv_line(std::string_view line);
void write_csv_row(std::ostream& out, std::span<const std::string> fields);

/// `date,u_0001,...,u_J`.
void write_curve_series(std::ostream& out, const CurveSeries& series);
[[nodiscard]] CurveSeries read_curve_series(std::istream& in, CurveKind kind = CurveKind::GENERIC);

/// `method,index,eigenvalue,share,u_0001,...,u_J`, one row per function.
void write_basis_set(std::ostream& out, const BasisSet& basis);
[[nodiscard]] BasisSet read_basis_set(std::istream& in);

/// `date,time,bid,ask,mid` on the slots of `session`.
void write_quotes(std::ostream& out, const QuotePanel& panel, const SessionSpec& session);

[[nodiscard]] Json to_json(const ModelSpec& spec);
[[nodiscard]] ModelSpec model_spec_from_json(const Json& j);
[[nodiscard]] Json to_json(const BasisSet& basis);
[[nodiscard]] BasisSet basis_from_json(const Json& j);
[[nodiscard]] Json to_json(const ProjectedParams& params);
[[nodiscard]] ProjectedParams params_from_json(const Json& j);

/// The fit with its basis, parameters and the filter state of its last day
/// (squared, variance and covariate scores); sigma2/residual panels are not stored.
[[nodiscard]] Json to_json(const FGarchFit& fit);
[[nodiscard]] FGarchFit fit_from_json(const Json& j);

[[nodiscard]] std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view content);

}  // namespace fxvol::io
