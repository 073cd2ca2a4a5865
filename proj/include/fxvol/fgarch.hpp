#pragma once

#include "fxvol/basis.hpp"
#include "fxvol/types.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace fxvol {

enum class ModelKind { FGARCH11, FGARCHX };

[[nodiscard]] std::string_view to_string(ModelKind kind) noexcept;
[[nodiscard]] ModelKind model_kind_from_string(std::string_view name);

struct ModelSpec {
    ModelKind kind = ModelKind::FGARCH11;
    std::string basis_method = "TFPCA";  // TFPCA, DFPCA, LFPCA or MFPCA
    double variance_floor = 1e-8;
    std::size_t starts = 5;
    std::uint64_t seed = 0;
    std::size_t max_iterations = 400;
    // Block sizes of a concatenated basis (e.g. {K^c, K^j}); coefficients
    // linking different blocks are fixed at zero. Empty means one block.
    std::vector<std::size_t> blocks;
};

/// Coefficients of omega, alpha, beta (and gamma) in basis coordinates.
struct ProjectedParams {
    Vector D;
    Matrix A;
    Matrix B;
    Matrix G;  // 0 x 0 for FGARCH(1,1)

    [[nodiscard]] std::size_t K() const noexcept { return static_cast<std::size_t>(D.size()); }
    [[nodiscard]] bool has_x() const noexcept { return G.size() > 0; }
};

struct FGarchFit {
    ModelSpec spec;
    BasisSet basis;
    ProjectedParams params;
    Vector mean_curve;
    CurveSeries sigma2;     // VARIANCE, already multiplied by residual_scale
    CurveSeries residuals;  // RESIDUAL
    Matrix variance_scores; // N x K, <sigma~^2_t, psi_l> before rescaling
    Matrix squared_scores;  // N x K, <y~^2_t, psi_l>
    Matrix x_scores;        // N x K or empty
    double objective = 0.0;
    double loglik = 0.0;    // minus the averaged QMLE criterion
    double residual_scale = 1.0;
    bool converged = false;
    bool curve_positivity = false;  // whether the fit was constrained to positive curves
    std::size_t floor_engagements = 0;
    std::vector<std::vector<double>> objective_traces;  // accepted iterates, one trace per start
};

/// Quadrature inner products <curve, psi_l>.
[[nodiscard]] Vector project(std::span<const double> curve, const BasisSet& basis);

/// N x K scores of every row of `series`.
[[nodiscard]] Matrix project_series(const CurveSeries& series, const BasisSet& basis);

/// Gram matrix P_lk = <psi_l, psi_k>; the identity for an orthonormal basis.
[[nodiscard]] Matrix gram_matrix(const BasisSet& basis);

struct RecursionResult {
    Matrix coefficients;     // N x K: sigma~^2_t = sum_l c_{t,l} psi_l
    Matrix variance_scores;  // N x K: h_t = P c_t
    CurveSeries curves;      // floored reconstruction
    std::size_t floor_engagements = 0;
};

/// Score-space recursion c_t = D + A s_{t-1} + B h_{t-1} + G x_{t-1}, h_t = P c_t.
/// Initial values: s_{-1} = scores of omega, h_{-1} = scores of the unit curve, x_{-1} = 0.
[[nodiscard]] RecursionResult variance_recursion(const ProjectedParams& params, const BasisSet& basis,
                                                 const Matrix& squared_scores, const Matrix* x_scores,
                                                 double variance_floor = 1e-8);

/// sum_l c_l psi_l(u), multiplied by `scale`, floored pointwise; `engaged` counts floored points.
[[nodiscard]] Vector variance_curve(std::span<const double> coefficients, const BasisSet& basis, double scale,
                                    double variance_floor, std::size_t* engaged = nullptr);

/// Feasibility margins used by the QMLE criterion (see QmleProblem::margin).
[[nodiscard]] Vector positivity_margin(const Matrix& squared_scores);

/// The averaged QMLE criterion with a general Gram matrix; +inf when a variance
/// score falls to its margin or below.
[[nodiscard]] double qmle_objective(const ProjectedParams& params, const Matrix& gram, const Matrix& squared_scores,
                                    const Matrix* x_scores, const Vector& unit_scores);

/// Objective and gradient with respect to log-parameters over the free entries.
struct QmleProblem {
    QmleProblem(const BasisSet& basis, Matrix squared_scores, std::optional<Matrix> x_scores,
                std::vector<std::size_t> blocks);

    [[nodiscard]] std::size_t dimension() const noexcept { return free_.size(); }
    [[nodiscard]] ProjectedParams unpack(std::span<const double> eta) const;
    [[nodiscard]] std::vector<double> pack(const ProjectedParams& params) const;
    /// Returns the objective; fills `grad` (d/d eta) when non-empty and the point is feasible.
    double evaluate(std::span<const double> eta, std::span<double> grad) const;

    Matrix gram;
    Matrix s;
    std::optional<Matrix> x;
    Vector unit;
    // Variance scores at or below margin_l are infeasible. The margin is half the
    // most negative squared score of component l (or a tiny positive number), which
    // keeps s/h + ln h bounded below when a basis function changes sign.
    Vector margin;
    // When set, parameter points whose reconstructed curve sum_l c_{t,l} psi_l(u)
    // is not positive at every grid point are also infeasible.
    bool curve_positivity = false;
    Matrix psi;  // K x J basis values

private:
    enum class Block { D, A, B, G };
    struct Entry {
        Block block;
        Eigen::Index row;
        Eigen::Index col;
    };
    std::vector<Entry> free_;
    Eigen::Index K_ = 0;
};

/// Quasi-maximum-likelihood fit on demeaned curves (mean_curve records the mean removed upstream).
[[nodiscard]] FGarchFit qmle_fit(const ModelSpec& spec, const CurveSeries& demeaned, const BasisSet& basis,
                                 const CurveSeries* x = nullptr, std::span<const double> mean_curve = {});

/// Score-space coefficients of the next variance curve.
[[nodiscard]] Vector next_coefficients(const ProjectedParams& params, std::span<const double> squared_scores,
                                       std::span<const double> variance_scores, std::span<const double> x_scores);

/// One step of the recursion from the latest squared demeaned curve and variance scores.
[[nodiscard]] Vector forecast_one_step(const FGarchFit& fit, std::span<const double> latest_squared,
                                       std::span<const double> latest_variance_scores,
                                       std::span<const double> latest_x = {});

/// Filter state carried between refits: <sigma~^2, psi> of the next day.
[[nodiscard]] Vector next_variance_scores(const FGarchFit& fit, std::span<const double> latest_squared,
                                          std::span<const double> latest_variance_scores,
                                          std::span<const double> latest_x = {});

enum class ErrorModelKind { GAUSSIAN_OU, BOOTSTRAP };

struct ErrorModel {
    ErrorModelKind kind = ErrorModelKind::GAUSSIAN_OU;
    double correlation_length = 0.3;
    const CurveSeries* pool = nullptr;  // BOOTSTRAP source curves
};

struct SimulationOptions {
    std::size_t burn_in = 200;
    bool allow_unstable = false;
    double variance_floor = 1e-8;
    const CurveSeries* x = nullptr;  // covariate for FGARCH-X params, aligned with the output
    const Matrix* innovations = nullptr;  // (burn_in + n) x J unit-variance errors replacing fresh draws
};

/// y_t = sigma_t eps_t under the projected recursion; deterministic for a fixed seed.
[[nodiscard]] CurveSeries simulate(const ProjectedParams& params, const BasisSet& basis, const ErrorModel& errors,
                                   std::size_t n, std::uint64_t seed, const SimulationOptions& options = {});

/// Unit-variance error curves for `n` days.
[[nodiscard]] Matrix simulate_errors(const IntradayGrid& grid, const ErrorModel& errors, std::size_t n,
                                     std::uint64_t seed);

[[nodiscard]] double spectral_radius(const Matrix& m);

}  // namespace fxvol
