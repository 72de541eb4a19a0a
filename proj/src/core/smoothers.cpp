#include "core/smoothers.hpp"

#include <algorithm>
#include <cmath>

#include "core/error.hpp"
#include "core/text.hpp"

namespace emsf::smooth {

std::string_view kind_name(Kind k) {
    switch (k) {
        case Kind::CRS: return "crs";
        case Kind::PSpline: return "ps";
        case Kind::Tensor: return "te";
    }
    return "?";
}

Kind parse_kind(std::string_view name) {
    if (name == "crs" || name == "cr") return Kind::CRS;
    if (name == "ps") return Kind::PSpline;
    if (name == "te") return Kind::Tensor;
    throw ConfigError("unknown smooth kind '" + std::string(name) + "'");
}

namespace {

// Span index i with t[i] <= x < t[i+1], the last non-degenerate span for x == hi.
int find_span(const std::vector<double>& t, int degree, int dim, double x) {
    const int n = dim - 1;  // highest basis index
    if (x >= t[static_cast<std::size_t>(n + 1)]) return n;
    int lo = degree, hi = n + 1;
    while (hi - lo > 1) {
        const int mid = (lo + hi) / 2;
        if (x < t[static_cast<std::size_t>(mid)]) hi = mid; else lo = mid;
    }
    return lo;
}

}  // namespace

MarginBasis MarginBasis::crs(std::vector<double> knots) {
    const int k = static_cast<int>(knots.size());
    if (k < 3) throw ConfigError("cubic regression spline needs at least 3 knots");
    for (int j = 1; j < k; ++j) {
        if (!(knots[static_cast<std::size_t>(j)] > knots[static_cast<std::size_t>(j - 1)])) {
            throw ConfigError("knots must be strictly increasing");
        }
    }
    MarginBasis m;
    m.kind_ = Kind::CRS;
    m.dim_ = k;
    m.degree_ = 3;
    m.penalty_order_ = 2;
    m.knots_.knots = std::move(knots);
    m.knots_.boundary = KnotVector::Boundary::Natural;

    const auto& x = m.knots_.knots;
    std::vector<double> h(static_cast<std::size_t>(k - 1));
    for (int j = 0; j + 1 < k; ++j) h[static_cast<std::size_t>(j)] = x[static_cast<std::size_t>(j + 1)] - x[static_cast<std::size_t>(j)];
    // B delta = D beta relates interior second derivatives to knot values.
    Matrix D = Matrix::Zero(k - 2, k);
    Matrix B = Matrix::Zero(k - 2, k - 2);
    for (int i = 0; i < k - 2; ++i) {
        const double h0 = h[static_cast<std::size_t>(i)], h1 = h[static_cast<std::size_t>(i + 1)];
        D(i, i) = 1.0 / h0;
        D(i, i + 1) = -1.0 / h0 - 1.0 / h1;
        D(i, i + 2) = 1.0 / h1;
        B(i, i) = (h0 + h1) / 3.0;
        if (i + 1 < k - 2) {
            B(i, i + 1) = h1 / 6.0;
            B(i + 1, i) = h1 / 6.0;
        }
    }
    const Eigen::LDLT<Matrix> ldlt(B);
    const Matrix interior = ldlt.solve(D);
    m.f_ = Matrix::Zero(k, k);
    m.f_.middleRows(1, k - 2) = interior;
    m.penalty_ = D.transpose() * interior;
    m.penalty_ = 0.5 * (m.penalty_ + m.penalty_.transpose()).eval();
    return m;
}

MarginBasis MarginBasis::bspline(double lo, double hi, int dim, int degree, int penalty_order) {
    if (degree < 1 || degree > 15) throw ConfigError("B-spline degree must be in 1..15");
    if (dim < degree + 1) {
        throw ConfigError("B-spline basis dimension " + std::to_string(dim) + " below degree + 1");
    }
    if (!(hi > lo)) throw ConfigError("B-spline range is empty");
    const int interior = dim - degree - 1;
    std::vector<double> t;
    for (int i = 0; i <= degree; ++i) t.push_back(lo);
    for (int i = 1; i <= interior; ++i) t.push_back(lo + (hi - lo) * i / (interior + 1));
    for (int i = 0; i <= degree; ++i) t.push_back(hi);
    return from_knots(Kind::PSpline, std::move(t), degree, penalty_order);
}

MarginBasis MarginBasis::from_knots(Kind kind, std::vector<double> knots, int degree, int penalty_order) {
    if (kind == Kind::CRS) return crs(std::move(knots));
    if (kind != Kind::PSpline) throw ConfigError("margins must be crs or ps");
    MarginBasis m;
    m.kind_ = Kind::PSpline;
    m.degree_ = degree;
    m.dim_ = static_cast<int>(knots.size()) - degree - 1;
    m.penalty_order_ = penalty_order;
    if (m.dim_ < degree + 1) throw ConfigError("too few B-spline knots");
    if (penalty_order >= m.dim_ || penalty_order < 0) {
        throw ConfigError("difference order " + std::to_string(penalty_order) + " must be below dimension " +
                          std::to_string(m.dim_));
    }
    m.knots_.knots = std::move(knots);
    m.knots_.boundary = KnotVector::Boundary::Clamped;
    m.penalty_ = difference_penalty(m.dim_, penalty_order);
    return m;
}

double MarginBasis::lo() const { return knots_.lo(); }
double MarginBasis::hi() const { return knots_.hi(); }

void MarginBasis::evaluate(double x, double* out) const {
    const double lo_ = lo(), hi_ = hi();
    const double slack = 1e-12 * (hi_ - lo_);
    if (!(x >= lo_ - slack && x <= hi_ + slack)) {
        throw NumericError("value " + text::format_double(x) + " outside basis span [" + text::format_double(lo_) +
                           ", " + text::format_double(hi_) + "]");
    }
    x = std::clamp(x, lo_, hi_);
    std::fill(out, out + dim_, 0.0);
    const auto& t = knots_.knots;
    if (kind_ == Kind::CRS) {
        int j = 0;
        while (j + 2 < dim_ && x > t[static_cast<std::size_t>(j + 1)]) ++j;
        const double h = t[static_cast<std::size_t>(j + 1)] - t[static_cast<std::size_t>(j)];
        const double am = (t[static_cast<std::size_t>(j + 1)] - x) / h;
        const double ap = (x - t[static_cast<std::size_t>(j)]) / h;
        const double dm = t[static_cast<std::size_t>(j + 1)] - x;
        const double dp = x - t[static_cast<std::size_t>(j)];
        const double cm = (dm * dm * dm / h - h * dm) / 6.0;
        const double cp = (dp * dp * dp / h - h * dp) / 6.0;
        out[j] += am;
        out[j + 1] += ap;
        for (int c = 0; c < dim_; ++c) out[c] += cm * f_(j, c) + cp * f_(j + 1, c);
        return;
    }
    // Cox-de Boor triangular scheme for the degree + 1 non-zero functions.
    const int p = degree_;
    const int span = find_span(t, p, dim_, x);
    double left[16], right[16], n[16];
    n[0] = 1.0;
    for (int j = 1; j <= p; ++j) {
        left[j] = x - t[static_cast<std::size_t>(span + 1 - j)];
        right[j] = t[static_cast<std::size_t>(span + j)] - x;
        double saved = 0.0;
        for (int r = 0; r < j; ++r) {
            const double temp = n[r] / (right[r + 1] + left[j - r]);
            n[r] = saved + right[r + 1] * temp;
            saved = left[j - r] * temp;
        }
        n[j] = saved;
    }
    for (int j = 0; j <= p; ++j) out[span - p + j] = n[j];
}

Vector MarginBasis::evaluate(double x) const {
    Vector v(dim_);
    evaluate(x, v.data());
    return v;
}

Matrix MarginBasis::evaluate(std::span<const double> xs) const {
    Matrix out(static_cast<Eigen::Index>(xs.size()), dim_);
    Eigen::Matrix<double, 1, Eigen::Dynamic> row(dim_);
    for (std::size_t i = 0; i < xs.size(); ++i) {
        evaluate(xs[i], row.data());
        out.row(static_cast<Eigen::Index>(i)) = row;
    }
    return out;
}

Eigen::Index RealizedSmooth::raw_dim() const {
    Eigen::Index d = 1;
    for (const auto& m : margins) d *= m.dim();
    return d;
}

void RealizedSmooth::evaluate_row(const double* covariates, double* raw, double* out) const {
    if (margins.size() == 1) {
        margins[0].evaluate(covariates[0], raw);
    } else {
        const int da = margins[0].dim(), db = margins[1].dim();
        double a[64], b[64];
        margins[0].evaluate(covariates[0], a);
        margins[1].evaluate(covariates[1], b);
        for (int i = 0; i < da; ++i)
            for (int j = 0; j < db; ++j) raw[i * db + j] = a[i] * b[j];
    }
    const auto rd = raw_dim();
    if (!centered()) {
        std::copy(raw, raw + rd, out);
        return;
    }
    const Eigen::Map<const Eigen::RowVectorXd> r(raw, rd);
    Eigen::Map<Eigen::RowVectorXd> o(out, constraint.cols());
    o.noalias() = r * constraint;
}

Matrix RealizedSmooth::evaluate(const std::vector<std::span<const double>>& covariates) const {
    if (covariates.size() != margins.size()) throw ConfigError("covariate count does not match smooth margins");
    const std::size_t n = covariates.front().size();
    Matrix out(static_cast<Eigen::Index>(n), centered() ? constraint.cols() : raw_dim());
    std::vector<double> raw(static_cast<std::size_t>(raw_dim()));
    Eigen::RowVectorXd row(out.cols());
    double cov[2];
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < margins.size(); ++m) cov[m] = covariates[m][i];
        evaluate_row(cov, raw.data(), row.data());
        out.row(static_cast<Eigen::Index>(i)) = row;
    }
    return out;
}

std::vector<double> quantile_knots(std::span<const double> x, int dim, const std::string& covariate) {
    std::vector<double> u(x.begin(), x.end());
    std::sort(u.begin(), u.end());
    u.erase(std::unique(u.begin(), u.end()), u.end());
    if (static_cast<int>(u.size()) < dim) {
        throw ConfigError("covariate '" + covariate + "' has " + std::to_string(u.size()) +
                          " distinct values, fewer than basis dimension " + std::to_string(dim));
    }
    std::vector<double> knots(static_cast<std::size_t>(dim));
    const double n1 = static_cast<double>(u.size() - 1);
    for (int j = 0; j < dim; ++j) {
        const double pos = n1 * j / (dim - 1);
        const auto lo = static_cast<std::size_t>(std::floor(pos));
        const double frac = pos - static_cast<double>(lo);
        knots[static_cast<std::size_t>(j)] = lo + 1 < u.size() ? u[lo] + frac * (u[lo + 1] - u[lo]) : u[lo];
    }
    return knots;
}

RealizedSmooth crs_basis(std::span<const double> x, int dim, const std::string& covariate) {
    if (dim < 3) throw ConfigError("basis dimension for '" + covariate + "' must be >= 3");
    RealizedSmooth s;
    s.margins.push_back(MarginBasis::crs(quantile_knots(x, dim, covariate)));
    s.basis = s.margins[0].evaluate(x);
    s.penalties.push_back(s.margins[0].penalty());
    return s;
}

Matrix bspline_basis(std::span<const double> x, int dim, int degree) {
    if (x.empty()) throw ConfigError("B-spline basis needs data");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    return MarginBasis::bspline(*lo, *hi, dim, degree, 0).evaluate(x);
}

RealizedSmooth pspline_basis(std::span<const double> x, int dim, int penalty_order, int degree,
                             const std::string& covariate) {
    if (dim < 3) throw ConfigError("basis dimension for '" + covariate + "' must be >= 3");
    if (x.empty()) throw ConfigError("P-spline for '" + covariate + "' needs data");
    const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
    if (!(*hi > *lo)) throw ConfigError("covariate '" + covariate + "' is constant");
    RealizedSmooth s;
    s.margins.push_back(MarginBasis::bspline(*lo, *hi, dim, degree, penalty_order));
    s.basis = s.margins[0].evaluate(x);
    s.penalties.push_back(s.margins[0].penalty());
    return s;
}

Matrix difference_matrix(int dim, int order) {
    if (order < 0 || order >= dim) {
        throw ConfigError("difference order " + std::to_string(order) + " must be below dimension " +
                          std::to_string(dim));
    }
    Matrix d = Matrix::Identity(dim, dim);
    for (int k = 0; k < order; ++k) {
        d = (d.bottomRows(d.rows() - 1) - d.topRows(d.rows() - 1)).eval();
    }
    return d;
}

Matrix difference_penalty(int dim, int order) {
    const Matrix d = difference_matrix(dim, order);
    return d.transpose() * d;
}

RealizedSmooth tensor_product(const RealizedSmooth& a, const RealizedSmooth& b, int max_dim) {
    if (a.centered() || b.centered() || a.margins.size() != 1 || b.margins.size() != 1) {
        throw ConfigError("tensor product needs two unconstrained one-dimensional margins");
    }
    if (a.basis.rows() != b.basis.rows()) throw ConfigError("tensor margins realized on different rows");
    const Eigen::Index da = a.dim(), db = b.dim();
    if (da > 64 || db > 64) throw ConfigError("tensor margins are limited to 64 basis functions each");
    if (da * db > max_dim) {
        throw ConfigError("tensor dimension " + std::to_string(da * db) + " exceeds limit " + std::to_string(max_dim));
    }
    RealizedSmooth t;
    t.margins = {a.margins[0], b.margins[0]};
    const Eigen::Index n = a.basis.rows();
    t.basis.resize(n, da * db);
    for (Eigen::Index i = 0; i < da; ++i) {
        for (Eigen::Index j = 0; j < db; ++j) {
            t.basis.col(i * db + j) = a.basis.col(i).cwiseProduct(b.basis.col(j));
        }
    }
    const Matrix ia = Matrix::Identity(da, da), ib = Matrix::Identity(db, db);
    auto kron = [](const Matrix& x, const Matrix& y) {
        Matrix k(x.rows() * y.rows(), x.cols() * y.cols());
        for (Eigen::Index i = 0; i < x.rows(); ++i)
            for (Eigen::Index j = 0; j < x.cols(); ++j)
                k.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
        return k;
    };
    t.penalties.push_back(kron(a.penalties.at(0), ib));
    t.penalties.push_back(kron(ia, b.penalties.at(0)));
    return t;
}

RealizedSmooth center_constraint(const RealizedSmooth& smooth) {
    if (smooth.centered()) throw ConfigError("smooth is already centered");
    const Eigen::Index d = smooth.dim();
    const Vector c = smooth.basis.colwise().sum().transpose();
    // Householder reflection H with H c = -sign(c0) |c| e1; columns 2..d of H
    // are an orthonormal basis of the complement of c.
    Vector u = c;
    const double norm = c.norm();
    if (norm == 0.0) throw NumericError("cannot center a basis with zero column sums");
    u(0) += (c(0) >= 0.0 ? norm : -norm);
    const double beta = 2.0 / u.squaredNorm();
    Matrix h = Matrix::Identity(d, d) - beta * u * u.transpose();
    RealizedSmooth out;
    out.margins = smooth.margins;
    out.constraint = h.rightCols(d - 1);
    out.basis = smooth.basis * out.constraint;
    for (const auto& s : smooth.penalties) {
        Matrix p = out.constraint.transpose() * s * out.constraint;
        out.penalties.push_back(0.5 * (p + p.transpose()));
    }
    return out;
}

std::string format_smooth_dump(const RealizedSmooth& smooth, int grid_points) {
    std::string out = "section,margin,i,j,value\n";
    for (std::size_t m = 0; m < smooth.margins.size(); ++m) {
        const auto& k = smooth.margins[m].knots().knots;
        for (std::size_t i = 0; i < k.size(); ++i) {
            out += "knot," + std::to_string(m) + "," + std::to_string(i) + ",," + text::format_double(k[i]) + "\n";
        }
        const auto& mb = smooth.margins[m];
        for (int g = 0; g < grid_points; ++g) {
            const double x = mb.lo() + (mb.hi() - mb.lo()) * g / std::max(1, grid_points - 1);
            const Vector row = mb.evaluate(x);
            for (Eigen::Index c = 0; c < row.size(); ++c) {
                out += "basis," + std::to_string(m) + "," + text::format_double(x) + "," + std::to_string(c) + "," +
                       text::format_double(row(c)) + "\n";
            }
        }
    }
    for (std::size_t p = 0; p < smooth.penalties.size(); ++p) {
        const auto& s = smooth.penalties[p];
        for (Eigen::Index i = 0; i < s.rows(); ++i)
            for (Eigen::Index j = 0; j < s.cols(); ++j)
                out += "penalty" + std::to_string(p) + ",," + std::to_string(i) + "," + std::to_string(j) + "," +
                       text::format_double(s(i, j)) + "\n";
    }
    return out;
}

}  // namespace emsf::smooth
