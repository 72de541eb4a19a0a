#pragma once

#include <Eigen/Dense>
#include <span>
#include <string>
#include <vector>

namespace emsf::smooth {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Kind { CRS, PSpline, Tensor };

std::string_view kind_name(Kind k);
Kind parse_kind(std::string_view name);

struct KnotVector {
    enum class Boundary { Natural, Clamped };
    // CRS: the knot locations themselves. P-spline: the full clamped knot
    // sequence including the repeated boundary knots.
    std::vector<double> knots;
    Boundary boundary = Boundary::Natural;

    double lo() const { return knots.front(); }
    double hi() const { return knots.back(); }
};

// One marginal basis: either a natural cubic regression spline parameterized
// by its values at the knots, or a clamped B-spline with a difference penalty.
class MarginBasis {
public:
    static MarginBasis crs(std::vector<double> knots);
    static MarginBasis bspline(double lo, double hi, int dim, int degree, int penalty_order);
    // Rebuilds a margin from stored knots (model files).
    static MarginBasis from_knots(Kind kind, std::vector<double> knots, int degree, int penalty_order);

    Kind kind() const { return kind_; }
    int dim() const { return dim_; }
    int degree() const { return degree_; }
    int penalty_order() const { return penalty_order_; }
    const KnotVector& knots() const { return knots_; }
    double lo() const;
    double hi() const;

    // Basis row at x; throws NumericError outside [lo, hi].
    void evaluate(double x, double* out) const;
    Vector evaluate(double x) const;
    Matrix evaluate(std::span<const double> xs) const;
    // Second derivatives at the knots as a linear map of the knot values (CRS).
    const Matrix& second_derivative_map() const { return f_; }
    const Matrix& penalty() const { return penalty_; }

private:
    Kind kind_ = Kind::CRS;
    int dim_ = 0;
    int degree_ = 3;
    int penalty_order_ = 2;
    KnotVector knots_;
    Matrix f_;
    Matrix penalty_;
};

// A realized smooth: the evaluated basis on the fitting rows, its penalty
// matrices and, once centered, the constraint transform Z such that the
// centered basis is (raw basis) * Z.
struct RealizedSmooth {
    Matrix basis;
    std::vector<Matrix> penalties;
    Matrix constraint;  // empty when unconstrained
    std::vector<MarginBasis> margins;

    Eigen::Index dim() const { return basis.cols(); }
    bool centered() const { return constraint.size() > 0; }
    // Raw (uncentered) row-wise basis for new covariate values, one span per
    // margin. Applies the constraint when present.
    Matrix evaluate(const std::vector<std::span<const double>>& covariates) const;
    void evaluate_row(const double* covariates, double* raw_scratch, double* out) const;
    Eigen::Index raw_dim() const;
};

// Knots at `dim` quantiles of the distinct values of x (linear interpolation
// between order statistics). Throws ConfigError naming `covariate` when there
// are fewer than `dim` distinct values.
std::vector<double> quantile_knots(std::span<const double> x, int dim, const std::string& covariate);

// Natural cubic regression spline: cardinal basis at quantile knots with the
// integrated squared second-derivative penalty.
RealizedSmooth crs_basis(std::span<const double> x, int dim, const std::string& covariate = "x");

// Clamped B-spline basis on evenly spaced knots spanning [min x, max x].
Matrix bspline_basis(std::span<const double> x, int dim, int degree = 3);
// The same basis paired with a difference penalty of the given order.
RealizedSmooth pspline_basis(std::span<const double> x, int dim, int penalty_order = 2, int degree = 3,
                             const std::string& covariate = "x");

// D^T D where D is the order-th difference matrix, (dim - order) x dim.
Matrix difference_matrix(int dim, int order);
Matrix difference_penalty(int dim, int order);

// Row-wise Kronecker product of two unconstrained margins with penalties
// S_a (x) I_b and I_a (x) S_b. Columns are ordered a-major.
RealizedSmooth tensor_product(const RealizedSmooth& a, const RealizedSmooth& b, int max_dim = 400);

// Sum-to-zero reparameterization: Z spans the orthogonal complement of the
// column-sum vector, basis -> basis Z, penalties -> Z^T S Z.
RealizedSmooth center_constraint(const RealizedSmooth& smooth);

// Debug dump: knots, the basis on a sample grid, and penalty entries.
std::string format_smooth_dump(const RealizedSmooth& smooth, int grid_points = 50);

}  // namespace emsf::smooth
