#include "fxvol/io.hpp"

#include "fxvol/errors.hpp"

#include <fmt/format.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace fxvol::io {
namespace {

std::string grid_column(std::size_t j) { return fmt::format("u_{:04d}", j + 1); }

bool next_line(std::istream& in, std::string& line, std::size_t& line_no) {
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) return true;
    }
    return false;
}

std::vector<double> json_vector(const Json& j) { return j.get<std::vector<double>>(); }

Json matrix_json(const Matrix& m) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        rows.push_back(std::vector<double>(m.row(r).begin(), m.row(r).end()));
    }
    return Json{{"rows", m.rows()}, {"cols", m.cols()}, {"data", rows}};
}

Matrix matrix_from_json(const Json& j) {
    const auto rows = j.at("rows").get<Eigen::Index>();
    const auto cols = j.at("cols").get<Eigen::Index>();
    Matrix m(rows, cols);
    const auto& data = j.at("data");
    if (static_cast<Eigen::Index>(data.size()) != rows) throw ParseError("matrix row count mismatch", 0);
    for (Eigen::Index r = 0; r < rows; ++r) {
        const auto v = json_vector(data.at(static_cast<std::size_t>(r)));
        if (static_cast<Eigen::Index>(v.size()) != cols) throw ParseError("matrix column count mismatch", 0);
        for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = v[static_cast<std::size_t>(c)];
    }
    return m;
}

Json vector_json(const Vector& v) { return std::vector<double>(v.begin(), v.end()); }

Vector vector_from_json(const Json& j) {
    const auto v = json_vector(j);
    return Eigen::Map<const Vector>(v.data(), static_cast<Eigen::Index>(v.size()));
}

Json last_row(const Matrix& m) {
    if (m.rows() == 0) return Json::array();
    const auto r = m.row(m.rows() - 1);
    return std::vector<double>(r.begin(), r.end());
}

Matrix row_matrix(const Json& j) {
    const auto v = json_vector(j);
    Matrix m(v.empty() ? 0 : 1, static_cast<Eigen::Index>(v.size()));
    for (std::size_t k = 0; k < v.size(); ++k) m(0, static_cast<Eigen::Index>(k)) = v[k];
    return m;
}

}  // namespace

std::string format_double(double x) {
    char buf[32];
    const auto r = std::to_chars(buf, buf + sizeof buf, x);
    return {buf, r.ptr};
}

double parse_double(std::string_view s, std::size_t line) {
    double v = 0.0;
    const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
    if (s.empty() || r.ec != std::errc{} || r.ptr != s.data() + s.size()) {
        throw ParseError(fmt::format("bad number '{}'", s), line);
    }
    return v;
}

std::vector<std::string_view> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

void write_csv_row(std::ostream& out, std::span<const std::string> fields) {
    for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i > 0) out << ',';
        out << fields[i];
    }
    out << '\n';
}

void write_curve_series(std::ostream& out, const CurveSeries& series) {
    out << "date";
    for (std::size_t j = 0; j < series.points(); ++j) out << ',' << grid_column(j);
    out << '\n';
    for (std::size_t t = 0; t < series.days(); ++t) {
        out << series.dates[t];
        for (double v : series.row(t)) out << ',' << format_double(v);
        out << '\n';
    }
}

CurveSeries read_curve_series(std::istream& in, CurveKind kind) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no)) throw ParseError("empty curve file", 0);
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "date") throw ParseError("curve header must start with 'date'", line_no);
    const std::size_t J = header.size() - 1;
    for (std::size_t j = 0; j < J; ++j) {
        if (header[j + 1] != grid_column(j)) {
            throw ParseError(fmt::format("expected column {}, found '{}'", grid_column(j), header[j + 1]), line_no);
        }
    }
    std::vector<std::string> dates;
    std::vector<double> values;
    while (next_line(in, line, line_no)) {
        const auto f = split_csv_line(line);
        if (f.size() != J + 1) throw ParseError(fmt::format("expected {} fields, found {}", J + 1, f.size()), line_no);
        dates.emplace_back(f[0]);
        for (std::size_t j = 0; j < J; ++j) values.push_back(parse_double(f[j + 1], line_no));
    }
    Matrix m = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(dates.size()),
                                        static_cast<Eigen::Index>(J));
    CurveSeries s(IntradayGrid(J), std::move(dates), std::move(m), kind);
    s.validate();
    return s;
}

void write_basis_set(std::ostream& out, const BasisSet& basis) {
    out << "method,index,eigenvalue,share";
    for (std::size_t j = 0; j < basis.grid.size(); ++j) out << ',' << grid_column(j);
    out << '\n';
    for (std::size_t l = 0; l < basis.size(); ++l) {
        out << to_string(basis.method) << ',' << l + 1 << ',' << format_double(basis.eigenvalues[l]) << ','
            << format_double(basis.variation_explained[l]);
        for (double v : basis.function(l)) out << ',' << format_double(v);
        out << '\n';
    }
}

BasisSet read_basis_set(std::istream& in) {
    std::string line;
    std::size_t line_no = 0;
    if (!next_line(in, line, line_no)) throw ParseError("empty basis file", 0);
    const auto header = split_csv_line(line);
    if (header.size() < 5 || header[0] != "method" || header[1] != "index" || header[2] != "eigenvalue" ||
        header[3] != "share") {
        throw ParseError("basis header must be method,index,eigenvalue,share,u_...", line_no);
    }
    const std::size_t J = header.size() - 4;
    BasisSet b;
    b.grid = IntradayGrid(J);
    std::vector<double> values;
    std::size_t rows = 0;
    while (next_line(in, line, line_no)) {
        const auto f = split_csv_line(line);
        if (f.size() != J + 4) throw ParseError(fmt::format("expected {} fields, found {}", J + 4, f.size()), line_no);
        const BasisMethod m = basis_method_from_string(f[0]);
        if (rows == 0) b.method = m;
        if (m != b.method) throw ParseError("mixed basis methods in one file", line_no);
        if (f[1] != std::to_string(rows + 1)) throw ParseError("basis rows must be indexed 1..K in order", line_no);
        b.eigenvalues.push_back(parse_double(f[2], line_no));
        b.variation_explained.push_back(parse_double(f[3], line_no));
        for (std::size_t j = 0; j < J; ++j) values.push_back(parse_double(f[j + 4], line_no));
        ++rows;
    }
    b.functions = Eigen::Map<const Matrix>(values.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(J));
    return b;
}

void write_quotes(std::ostream& out, const QuotePanel& panel, const SessionSpec& session) {
    const std::size_t J = panel.grid.size();
    const double step = J > 1 ? static_cast<double>(session.close_minute - session.open_minute) / static_cast<double>(J - 1)
                              : 0.0;
    out << "date,time,bid,ask,mid\n";
    for (std::size_t t = 0; t < panel.days(); ++t) {
        for (std::size_t j = 0; j < J; ++j) {
            const long minute = session.open_minute + std::lround(step * static_cast<double>(j));
            const auto r = static_cast<Eigen::Index>(t);
            const auto c = static_cast<Eigen::Index>(j);
            out << panel.dates[t] << ',' << fmt::format("{:02d}:{:02d}", minute / 60, minute % 60) << ','
                << format_double(panel.bid(r, c)) << ',' << format_double(panel.ask(r, c)) << ','
                << format_double(panel.mid(r, c)) << '\n';
        }
    }
}

Json to_json(const ModelSpec& spec) {
    return Json{{"kind", std::string(to_string(spec.kind))},
                {"basis_method", spec.basis_method},
                {"variance_floor", spec.variance_floor},
                {"starts", spec.starts},
                {"seed", spec.seed},
                {"max_iterations", spec.max_iterations},
                {"blocks", spec.blocks}};
}

ModelSpec model_spec_from_json(const Json& j) {
    ModelSpec s;
    s.kind = model_kind_from_string(j.at("kind").get<std::string>());
    s.basis_method = j.at("basis_method").get<std::string>();
    s.variance_floor = j.at("variance_floor").get<double>();
    s.starts = j.at("starts").get<std::size_t>();
    s.seed = j.at("seed").get<std::uint64_t>();
    s.max_iterations = j.at("max_iterations").get<std::size_t>();
    s.blocks = j.at("blocks").get<std::vector<std::size_t>>();
    return s;
}

Json to_json(const BasisSet& basis) {
    return Json{{"method", std::string(to_string(basis.method))},
                {"points", basis.grid.size()},
                {"eigenvalues", basis.eigenvalues},
                {"variation_explained", basis.variation_explained},
                {"functions", matrix_json(basis.functions)}};
}

BasisSet basis_from_json(const Json& j) {
    BasisSet b;
    b.method = basis_method_from_string(j.at("method").get<std::string>());
    b.grid = IntradayGrid(j.at("points").get<std::size_t>());
    b.eigenvalues = j.at("eigenvalues").get<std::vector<double>>();
    b.variation_explained = j.at("variation_explained").get<std::vector<double>>();
    b.functions = matrix_from_json(j.at("functions"));
    if (static_cast<std::size_t>(b.functions.cols()) != b.grid.size() || b.eigenvalues.size() != b.size()) {
        throw ShapeError("basis document is inconsistent");
    }
    return b;
}

Json to_json(const ProjectedParams& p) {
    return Json{{"D", vector_json(p.D)}, {"A", matrix_json(p.A)}, {"B", matrix_json(p.B)}, {"G", matrix_json(p.G)}};
}

ProjectedParams params_from_json(const Json& j) {
    ProjectedParams p;
    p.D = vector_from_json(j.at("D"));
    p.A = matrix_from_json(j.at("A"));
    p.B = matrix_from_json(j.at("B"));
    p.G = matrix_from_json(j.at("G"));
    const auto K = p.D.size();
    if (p.A.rows() != K || p.A.cols() != K || p.B.rows() != K || p.B.cols() != K ||
        (p.G.size() > 0 && (p.G.rows() != K || p.G.cols() != K))) {
        throw ShapeError("parameter document is inconsistent");
    }
    return p;
}

Json to_json(const FGarchFit& fit) {
    Json state{{"date", fit.sigma2.dates.empty() ? std::string{} : fit.sigma2.dates.back()},
               {"squared_scores", last_row(fit.squared_scores)},
               {"variance_scores", last_row(fit.variance_scores)},
               {"x_scores", last_row(fit.x_scores)}};
    return Json{{"spec", to_json(fit.spec)},
                {"basis", to_json(fit.basis)},
                {"params", to_json(fit.params)},
                {"mean_curve", vector_json(fit.mean_curve)},
                {"objective", fit.objective},
                {"loglik", fit.loglik},
                {"residual_scale", fit.residual_scale},
                {"converged", fit.converged},
                {"curve_positivity", fit.curve_positivity},
                {"floor_engagements", fit.floor_engagements},
                {"state", state}};
}

FGarchFit fit_from_json(const Json& j) {
    try {
        FGarchFit fit;
        fit.spec = model_spec_from_json(j.at("spec"));
        fit.basis = basis_from_json(j.at("basis"));
        fit.params = params_from_json(j.at("params"));
        fit.mean_curve = vector_from_json(j.at("mean_curve"));
        fit.objective = j.at("objective").get<double>();
        fit.loglik = j.at("loglik").get<double>();
        fit.residual_scale = j.at("residual_scale").get<double>();
        fit.converged = j.at("converged").get<bool>();
        fit.curve_positivity = j.at("curve_positivity").get<bool>();
        fit.floor_engagements = j.at("floor_engagements").get<std::size_t>();
        const auto& state = j.at("state");
        const auto date = state.at("date").get<std::string>();
        fit.squared_scores = row_matrix(state.at("squared_scores"));
        fit.variance_scores = row_matrix(state.at("variance_scores"));
        fit.x_scores = row_matrix(state.at("x_scores"));
        // a one-day placeholder panel keeps the date of the stored state
        if (!date.empty()) {
            fit.sigma2 = CurveSeries(fit.basis.grid, {date}, Matrix::Zero(1, static_cast<Eigen::Index>(fit.basis.grid.size())),
                                     CurveKind::VARIANCE);
        }
        if (fit.params.K() != fit.basis.size()) throw ShapeError("fit parameters do not match the basis size");
        return fit;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(fmt::format("malformed fit document: {}", e.what()), 0);
    }
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError(fmt::format("cannot open {}", path.string()));
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw InputError(fmt::format("cannot write {}", path.string()));
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw InputError(fmt::format("failed writing {}", path.string()));
}

}  // namespace fxvol::io
