#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/features.hpp"
#include "core/smoothers.hpp"

namespace emsf::gam {

using smooth::Matrix;
using smooth::Vector;

struct SmoothTermSpec {
    std::string name;
    smooth::Kind kind = smooth::Kind::CRS;
    std::vector<std::string> covariates;  // 1, or 2 for a tensor
    std::vector<int> dims;                // per margin
    // Tensor only: the basis of each margin.
    std::vector<smooth::Kind> margin_kinds;
    int penalty_order = 2;                // difference order of P-spline margins
};

struct ModelSpec {
    std::vector<SmoothTermSpec> smooths;
    std::vector<std::string> linear;
    bool include_intercept = true;
    int max_tensor_dim = 400;

    // hour CRS-24, day P-spline-7, quarter CRS-4, day x hour tensor (P-spline
    // 7 x CRS 10) and the nine linear covariates.
    static ModelSpec standard(int tensor_day_dim = 7, int tensor_hour_dim = 10);

    // Each covariate in at most one one-dimensional term; tensor covariates
    // must be known frame columns; dims >= 3; tensors have two margins.
    void validate() const;
};

enum class BlockType { Intercept, Smooth, Linear };

struct TermBlock {
    std::string name;
    BlockType type = BlockType::Linear;
    Eigen::Index offset = 0;
    Eigen::Index size = 0;
};

// A penalty on the coefficient block starting at `offset`.
struct Penalty {
    Matrix matrix;
    Eigen::Index offset = 0;
    std::string term;
    double scale = 1.0;  // factor already applied to `matrix`
};

struct Standardization {
    std::string column;
    double mean = 0.0;
    double sd = 1.0;
};

// Everything needed to rebuild design rows for new covariate values.
struct DesignMapping {
    ModelSpec spec;
    std::vector<smooth::RealizedSmooth> smooths;  // basis matrices cleared
    std::vector<Standardization> standardization;
    std::vector<TermBlock> blocks;
    // Per block; empty means unconstrained. A tensor's coefficients are
    // restricted to beta = N gamma so that its component is orthogonal, on
    // the fitting rows, to the intercept and the main effects of its own
    // covariates.
    std::vector<Matrix> side;
    Eigen::Index total_columns = 0;

    Eigen::Index columns() const { return total_columns; }
    // Free coefficients after the side constraints.
    Eigen::Index free_columns() const;
    const TermBlock& block(const std::string& name) const;
};

struct Design {
    Matrix x;
    std::vector<Penalty> penalties;
    DesignMapping mapping;
};

// Columns [intercept | smooth blocks | linear block]; smooths are centered,
// linear columns standardized to mean 0 and sd 1.
Design build_design(const features::CovariateFrame& frame, const ModelSpec& spec);

struct RowBuildInfo {
    std::size_t clamped = 0;  // covariate values moved onto the basis span
};

// Design rows for new data through a stored mapping; values outside the
// basis span are clamped to it and counted.
Matrix design_rows(const DesignMapping& mapping, const features::CovariateFrame& frame,
                   RowBuildInfo* info = nullptr);

struct FitOptions {
    double pirls_tol = 1e-8;
    int max_pirls_iter = 200;
    int max_halvings = 30;
    double score_tol = 1e-7;
    double log_theta_lo = -4.605170185988091;  // log 0.01
    double log_theta_hi = 13.815510557964274;  // log 1e6
    double log_lambda_lo = -15.0;
    double log_lambda_hi = 25.0;
    int max_outer = 20;
    double outer_tol = 1e-3;
    int max_lambda_updates = 40;
    std::optional<double> fixed_theta;
    std::optional<std::vector<double>> fixed_log_lambda;
    // Warm starts (e.g. the previous refit of a rolling evaluation).
    std::optional<std::vector<double>> start_log_lambda;
    std::optional<double> start_log_theta;
    std::optional<Vector> start_beta;
};

struct PirlsResult {
    Vector beta;
    Vector mu;
    double deviance = 0.0;
    double penalized_deviance = 0.0;
    Vector edf;  // per column
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
    bool rank_deficient = false;
    double score_norm = 0.0;  // max |penalized score|
};

// Penalized IRLS for the log-link NB model at fixed smoothing parameters and
// dispersion. Each step solves the stacked system [sqrt(W) X; E] with a
// pivoted Householder QR (E^T E = sum lambda_j S_j), halving steps that raise
// the penalized deviance.
PirlsResult pirls(const Matrix& x, const std::vector<Penalty>& penalties, std::span<const double> lambda,
                  double theta, std::span<const double> y, const FitOptions& options = {},
                  const Vector* beta_start = nullptr);

// Penalized log likelihood l(beta) - 1/2 sum lambda_j beta^T S_j beta.
double penalized_loglik(const Matrix& x, const std::vector<Penalty>& penalties, std::span<const double> lambda,
                        double theta, std::span<const double> y, const Vector& beta);

struct SelectionResult {
    std::vector<double> lambda;
    double theta = 1.0;
    PirlsResult fit;
    double gcv = 0.0;
    int outer_rounds = 0;
};

// Alternates GCV minimization over log lambda (simplex on the working model
// of each IRLS step) and golden-section maximization of the NB likelihood
// over log theta, until both move less than outer_tol in log space.
SelectionResult select_lambda_theta(const Matrix& x, const std::vector<Penalty>& penalties,
                                    std::span<const double> y, const FitOptions& options = {});

struct TermEdf {
    std::string term;
    double edf = 0.0;
};

struct FittedModel {
    DesignMapping mapping;
    Vector beta;                  // full design length
    std::vector<double> lambda;   // one per penalty, in design order
    std::vector<std::string> penalty_terms;
    std::vector<double> penalty_scales;
    double theta = 1.0;
    std::vector<TermEdf> edf;
    double deviance = 0.0;
    double gcv = 0.0;
    bool converged = false;
    int iterations = 0;
    int outer_rounds = 0;
    bool rank_deficient = false;
    double score_norm = 0.0;
    std::size_t rows = 0;
};

FittedModel fit(const features::CovariateFrame& frame, const ModelSpec& spec, const FitOptions& options = {});

std::vector<double> predict_eta(const FittedModel& model, const features::CovariateFrame& frame,
                                RowBuildInfo* info = nullptr);
std::vector<double> predict(const FittedModel& model, const features::CovariateFrame& frame,
                            RowBuildInfo* info = nullptr);

// The fitted component of one term at explicit covariate values (one span per
// covariate of the term). Smooths are the centered f_k; linear terms are
// beta * standardized value. Values outside the basis span are an error.
std::vector<double> partial_effect(const FittedModel& model, const std::string& term,
                                   const std::vector<std::span<const double>>& covariates);

struct EffectGrid {
    std::vector<double> x1, x2;  // x2 empty for one-dimensional terms
    std::vector<double> effect;  // row-major over (x1, x2) for tensors
};

// Evenly spaced grid over the term's basis span (n2 ignored for 1-D terms).
EffectGrid effect_grid(const FittedModel& model, const std::string& term, int n1, int n2 = 0);

std::string save_model(const FittedModel& model);
FittedModel load_model(std::string_view content);

}  // namespace emsf::gam
