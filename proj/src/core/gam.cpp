#include "core/gam.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "core/error.hpp"
#include "core/nb.hpp"
#include "core/optim.hpp"
#include "core/text.hpp"

namespace emsf::gam {

using Eigen::Index;
using features::CovariateFrame;

ModelSpec ModelSpec::standard(int tensor_day_dim, int tensor_hour_dim) {
    ModelSpec s;
    s.smooths.push_back({"hour", smooth::Kind::CRS, {"hour"}, {24}, {}, 2});
    s.smooths.push_back({"day", smooth::Kind::PSpline, {"day"}, {7}, {}, 2});
    s.smooths.push_back({"quarter", smooth::Kind::CRS, {"quarter"}, {4}, {}, 2});
    s.smooths.push_back({"day_hour",
                         smooth::Kind::Tensor,
                         {"day", "hour"},
                         {tensor_day_dim, tensor_hour_dim},
                         {smooth::Kind::PSpline, smooth::Kind::CRS},
                         2});
    s.linear = {"temperature",    "events_lag1",    "events_lag2", "events_lag3", "events_lagday1",
                "events_lagday2", "events_lagday7", "rt",          "flu"};
    return s;
}

namespace {

bool plain_name(const std::string& s) {
    if (s.empty()) return false;
    return std::all_of(s.begin(), s.end(), [](char c) { return c > ' ' && c != ','; });
}

void require_column(const std::string& c, const std::string& term) {
    if (!features::parse_column(c)) throw ConfigError("term '" + term + "' references unknown column '" + c + "'");
}

}  // namespace

void ModelSpec::validate() const {
    std::set<std::string> names, used;
    auto claim = [&](const std::string& col, const std::string& term) {
        if (!used.insert(col).second) throw ConfigError("column '" + col + "' appears in two terms (" + term + ")");
    };
    for (const auto& s : smooths) {
        if (!plain_name(s.name)) throw ConfigError("invalid term name '" + s.name + "'");
        if (!names.insert(s.name).second) throw ConfigError("duplicate term name '" + s.name + "'");
        if (s.kind == smooth::Kind::Tensor) {
            if (s.covariates.size() != 2 || s.dims.size() != 2 || s.margin_kinds.size() != 2) {
                throw ConfigError("tensor term '" + s.name + "' needs two covariates, dims and margin kinds");
            }
            if (s.covariates[0] == s.covariates[1]) throw ConfigError("tensor term '" + s.name + "' repeats a covariate");
            for (const auto k : s.margin_kinds) {
                if (k == smooth::Kind::Tensor) throw ConfigError("tensor margins must be crs or ps");
            }
        } else if (s.covariates.size() != 1 || s.dims.size() != 1) {
            throw ConfigError("term '" + s.name + "' needs one covariate and one dimension");
        }
        for (const auto& c : s.covariates) require_column(c, s.name);
        for (const int d : s.dims) {
            if (d < 3) throw ConfigError("basis dimension of '" + s.name + "' must be >= 3");
        }
        if (s.kind != smooth::Kind::Tensor) claim(s.covariates[0], s.name);
    }
    for (const auto& c : linear) {
        require_column(c, c);
        if (!names.insert(c).second) throw ConfigError("duplicate term name '" + c + "'");
        claim(c, c);
    }
}

Index DesignMapping::free_columns() const {
    Index n = total_columns;
    for (std::size_t b = 0; b < side.size() && b < blocks.size(); ++b) {
        if (side[b].size() > 0) n -= blocks[b].size - side[b].cols();
    }
    return n;
}

const TermBlock& DesignMapping::block(const std::string& name) const {
    for (const auto& b : blocks) {
        if (b.name == name) return b;
    }
    throw ConfigError("unknown term '" + name + "'");
}

namespace {

std::span<const double> column_of(const CovariateFrame& frame, const std::string& name) {
    const auto& c = frame.column(name);
    if (c.size() != frame.size()) throw ValidationError("frame column '" + name + "' has the wrong length");
    return c;
}

smooth::RealizedSmooth realize_margin(std::span<const double> x, smooth::Kind kind, int dim, int order,
                                      const std::string& cov) {
    if (kind == smooth::Kind::CRS) return smooth::crs_basis(x, dim, cov);
    return smooth::pspline_basis(x, dim, order, 3, cov);
}

smooth::RealizedSmooth realize(const CovariateFrame& frame, const SmoothTermSpec& s, int max_tensor_dim) {
    if (s.kind != smooth::Kind::Tensor) {
        return smooth::center_constraint(
            realize_margin(column_of(frame, s.covariates[0]), s.kind, s.dims[0], s.penalty_order, s.covariates[0]));
    }
    const auto a = realize_margin(column_of(frame, s.covariates[0]), s.margin_kinds[0], s.dims[0], s.penalty_order,
                                  s.covariates[0]);
    const auto b = realize_margin(column_of(frame, s.covariates[1]), s.margin_kinds[1], s.dims[1], s.penalty_order,
                                  s.covariates[1]);
    return smooth::center_constraint(smooth::tensor_product(a, b, max_tensor_dim));
}

// Null-space transform for each tensor: its component must be orthogonal on
// the fitting rows to every function of one covariate alone that the tensor
// can represent (its marginal bases), which removes the directions shared
// with the intercept and the main effects.
void side_constraints(const Matrix& x, const CovariateFrame& frame, DesignMapping& m) {
    const auto& spec = m.spec;
    m.side.assign(m.blocks.size(), Matrix());
    for (std::size_t t = 0; t < spec.smooths.size(); ++t) {
        const auto& st = spec.smooths[t];
        if (st.kind != smooth::Kind::Tensor) continue;
        const auto& rs = m.smooths[t];
        const Matrix ma = rs.margins[0].evaluate(column_of(frame, st.covariates[0]));
        const Matrix mb = rs.margins[1].evaluate(column_of(frame, st.covariates[1]));
        Matrix lower(x.rows(), ma.cols() + mb.cols());
        lower << ma, mb;
        std::size_t bi = 0;
        while (m.blocks[bi].name != st.name) ++bi;
        const auto& tb = m.blocks[bi];
        const Matrix c = lower.transpose() * x.middleCols(tb.offset, tb.size);
        const Eigen::JacobiSVD<Matrix> svd(c, Eigen::ComputeFullV);
        const auto& sv = svd.singularValues();
        const double tol = sv.size() > 0 ? sv(0) * 1e-9 : 0.0;
        Index rank = 0;
        while (rank < sv.size() && sv(rank) > tol) ++rank;
        if (rank == 0) continue;
        if (rank >= tb.size) throw ConfigError("tensor term '" + st.name + "' has no interaction left");
        m.side[bi] = svd.matrixV().rightCols(tb.size - rank);
    }
}

}  // namespace

Design build_design(const CovariateFrame& frame, const ModelSpec& spec) {
    spec.validate();
    const auto n = static_cast<Index>(frame.size());
    if (n == 0) throw ValidationError("empty covariate frame");
    if (frame.y.size() != frame.size()) throw ValidationError("frame response has the wrong length");

    Design d;
    d.mapping.spec = spec;
    std::vector<smooth::RealizedSmooth> realized;
    for (const auto& s : spec.smooths) realized.push_back(realize(frame, s, spec.max_tensor_dim));

    Index p = spec.include_intercept ? 1 : 0;
    for (const auto& r : realized) p += r.dim();
    p += static_cast<Index>(spec.linear.size());
    d.x.resize(n, p);

    Index off = 0;
    if (spec.include_intercept) {
        d.x.col(0).setOnes();
        d.mapping.blocks.push_back({"(intercept)", BlockType::Intercept, 0, 1});
        off = 1;
    }
    for (std::size_t k = 0; k < realized.size(); ++k) {
        auto& r = realized[k];
        const Index dim = r.dim();
        d.x.middleCols(off, dim) = r.basis;
        d.mapping.blocks.push_back({spec.smooths[k].name, BlockType::Smooth, off, dim});
        const Matrix xb = r.basis;
        const double xnorm = (xb.transpose() * xb).norm();
        for (const auto& s : r.penalties) {
            const double snorm = s.norm();
            const double scale = snorm > 0.0 ? xnorm / snorm : 1.0;
            d.penalties.push_back({scale * s, off, spec.smooths[k].name, scale});
        }
        r.basis.resize(0, 0);
        r.penalties.clear();
        d.mapping.smooths.push_back(std::move(r));
        off += dim;
    }
    for (const auto& c : spec.linear) {
        const auto v = column_of(frame, c);
        double mean = 0.0;
        for (const double x : v) {
            if (!std::isfinite(x)) throw ValidationError("non-finite value in column '" + c + "'");
            mean += x;
        }
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (const double x : v) ss += (x - mean) * (x - mean);
        const double sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
        if (!(sd > 1e-12 * std::max(1.0, std::fabs(mean)))) {
            throw ValidationError("linear block is rank-deficient: column '" + c + "' is constant");
        }
        for (Index i = 0; i < n; ++i) d.x(i, off) = (v[static_cast<std::size_t>(i)] - mean) / sd;
        d.mapping.standardization.push_back({c, mean, sd});
        d.mapping.blocks.push_back({c, BlockType::Linear, off, 1});
        ++off;
    }
    if (!spec.linear.empty()) {
        const Index lin0 = p - static_cast<Index>(spec.linear.size());
        Matrix xl(n, p - lin0 + (spec.include_intercept ? 1 : 0));
        xl.leftCols(p - lin0) = d.x.rightCols(p - lin0);
        if (spec.include_intercept) xl.rightCols(1).setOnes();
        Eigen::ColPivHouseholderQR<Matrix> qr(xl);
        qr.setThreshold(1e-9);
        if (qr.rank() < xl.cols()) {
            const auto& perm = qr.colsPermutation().indices();
            Index bad = perm(qr.rank());
            if (bad >= p - lin0) bad = perm(qr.rank() - 1);
            throw ValidationError("linear block is rank-deficient at column '" +
                                  spec.linear[static_cast<std::size_t>(bad)] + "'");
        }
    }

    d.mapping.total_columns = p;
    side_constraints(d.x, frame, d.mapping);
    return d;
}

Matrix design_rows(const DesignMapping& m, const CovariateFrame& frame, RowBuildInfo* info) {
    const auto n = static_cast<Index>(frame.size());
    const Index p = m.columns();
    Matrix out = Matrix::Zero(n, p);
    std::size_t clamped = 0;
    const auto& spec = m.spec;
    Index off = 0;
    if (spec.include_intercept) {
        out.col(0).setOnes();
        off = 1;
    }
    for (std::size_t k = 0; k < m.smooths.size(); ++k) {
        const auto& s = m.smooths[k];
        const auto& st = spec.smooths[k];
        std::vector<std::span<const double>> cols;
        for (const auto& c : st.covariates) cols.push_back(column_of(frame, c));
        std::vector<double> raw(static_cast<std::size_t>(s.raw_dim()));
        const Index dim = s.constraint.cols();
        Eigen::RowVectorXd row(dim);
        double cov[2];
        for (Index i = 0; i < n; ++i) {
            for (std::size_t c = 0; c < cols.size(); ++c) {
                double v = cols[c][static_cast<std::size_t>(i)];
                const double lo = s.margins[c].lo(), hi = s.margins[c].hi();
                if (!std::isfinite(v)) throw ValidationError("non-finite value in column '" + st.covariates[c] + "'");
                if (v < lo || v > hi) {
                    v = std::clamp(v, lo, hi);
                    ++clamped;
                }
                cov[c] = v;
            }
            s.evaluate_row(cov, raw.data(), row.data());
            out.block(i, off, 1, dim) = row;
        }
        off += dim;
    }
    for (const auto& st : m.standardization) {
        const auto v = column_of(frame, st.column);
        for (Index i = 0; i < n; ++i) out(i, off) = (v[static_cast<std::size_t>(i)] - st.mean) / st.sd;
        ++off;
    }
    if (off != p) throw ValidationError("model mapping does not match its coefficient count");
    if (info != nullptr) info->clamped = clamped;
    return out;
}

namespace {

Matrix total_penalty(const std::vector<Penalty>& pens, std::span<const double> lambda, Index p) {
    Matrix s = Matrix::Zero(p, p);
    for (std::size_t j = 0; j < pens.size(); ++j) {
        const auto& pj = pens[j];
        const Index k = pj.matrix.rows();
        s.block(pj.offset, pj.offset, k, k) += lambda[j] * pj.matrix;
    }
    return s;
}

// E with E^T E = S for a symmetric positive semi-definite S.
Matrix penalty_root(const Matrix& s) {
    const Index p = s.rows();
    if (p == 0 || s.isZero(0.0)) return Matrix(0, p);
    const Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    const Vector& ev = es.eigenvalues();
    const double tol = ev.cwiseAbs().maxCoeff() * 1e-14;
    std::vector<Index> keep;
    for (Index i = 0; i < p; ++i) {
        if (ev(i) > tol) keep.push_back(i);
    }
    Matrix e(static_cast<Index>(keep.size()), p);
    for (std::size_t r = 0; r < keep.size(); ++r) {
        e.row(static_cast<Index>(r)) = std::sqrt(ev(keep[r])) * es.eigenvectors().col(keep[r]).transpose();
    }
    return e;
}

struct WorkingModel {
    Matrix r;       // p x p upper triangular factor of sqrt(W) X
    Vector f;       // leading part of Q^T sqrt(W) z
    double rss0 = 0.0;  // part of ||sqrt(W) z||^2 outside the column space
};

WorkingModel working_model(const Matrix& x, const Vector& w, const Vector& z) {
    const Index n = x.rows(), p = x.cols();
    Matrix a(n, p + 1);
    const Vector sw = w.cwiseSqrt();
    a.leftCols(p) = sw.asDiagonal() * x;
    a.col(p) = sw.cwiseProduct(z);
    Eigen::HouseholderQR<Eigen::Ref<Matrix>> qr(a);
    WorkingModel wm;
    const Index k = std::min(n, p + 1);
    Matrix rext = Matrix::Zero(p + 1, p + 1);
    rext.topRows(k) = a.topRows(k).triangularView<Eigen::Upper>();
    wm.r = rext.topLeftCorner(p, p);
    wm.f = rext.col(p).head(p);
    wm.rss0 = rext(p, p) * rext(p, p);
    return wm;
}

struct PenalizedSolve {
    Vector beta;
    bool rank_deficient = false;
    double jitter = 0.0;
};

PenalizedSolve solve_penalized(const WorkingModel& wm, const Matrix& e) {
    const Index p = wm.r.cols();
    Matrix a(p + e.rows(), p);
    a.topRows(p) = wm.r;
    if (e.rows() > 0) a.bottomRows(e.rows()) = e;
    Vector b = Vector::Zero(a.rows());
    b.head(p) = wm.f;
    PenalizedSolve out;
    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    if (qr.rank() < p) {
        out.rank_deficient = true;
        out.jitter = 1e-10 * a.squaredNorm();
        Matrix aj(a.rows() + p, p);
        aj.topRows(a.rows()) = a;
        aj.bottomRows(p) = std::sqrt(out.jitter) * Matrix::Identity(p, p);
        Vector bj = Vector::Zero(aj.rows());
        bj.head(p) = wm.f;
        qr.compute(aj);
        out.beta = qr.solve(bj);
        return out;
    }
    out.beta = qr.solve(b);
    return out;
}

struct Evaluation {
    Vector eta, mu;
    double deviance = 0.0;
    double penalized = 0.0;
    bool finite = true;
};

Evaluation evaluate(const Matrix& x, const Matrix& s, double theta, std::span<const double> y, const Vector& beta) {
    Evaluation ev;
    ev.eta = x * beta;
    ev.mu = ev.eta.array().exp();
    double dev = 0.0;
    for (Index i = 0; i < ev.mu.size(); ++i) {
        const double mu = ev.mu(i);
        if (!std::isfinite(mu) || !(mu > 0.0)) {
            ev.finite = false;
            break;
        }
        dev += nb::unit_deviance(y[static_cast<std::size_t>(i)], mu, theta);
    }
    ev.deviance = dev;
    ev.penalized = ev.finite ? dev + beta.dot(s * beta) : std::numeric_limits<double>::infinity();
    if (!std::isfinite(ev.penalized)) ev.finite = false;
    return ev;
}

void irls_weights(const Vector& eta, const Vector& mu, std::span<const double> y, double theta, Vector& w,
                  Vector& z) {
    const Index n = eta.size();
    w.resize(n);
    z.resize(n);
    for (Index i = 0; i < n; ++i) {
        const double m = mu(i);
        w(i) = m / (1.0 + m / theta);
        z(i) = eta(i) + (y[static_cast<std::size_t>(i)] - m) / m;
    }
}

Vector penalized_score(const Matrix& x, const Matrix& s, double theta, std::span<const double> y, const Vector& mu,
                       const Vector& beta) {
    Vector r(mu.size());
    for (Index i = 0; i < mu.size(); ++i) r(i) = (y[static_cast<std::size_t>(i)] - mu(i)) / (1.0 + mu(i) / theta);
    return x.transpose() * r - s * beta;
}

Vector column_edf(const Matrix& r, const Matrix& s) {
    const Index p = r.cols();
    const Matrix g = r.transpose() * r;
    Matrix h = g + s;
    Eigen::LDLT<Matrix> ldlt(h);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) {
        h += 1e-10 * h.trace() * Matrix::Identity(p, p);
        ldlt.compute(h);
    }
    const Matrix f = ldlt.solve(g);
    return f.diagonal();
}

void check_lengths(const Matrix& x, const std::vector<Penalty>& pens, std::span<const double> lambda,
                   std::span<const double> y) {
    if (static_cast<std::size_t>(x.rows()) != y.size()) throw ConfigError("design and response differ in length");
    if (lambda.size() != pens.size()) throw ConfigError("need one smoothing parameter per penalty");
    for (std::size_t j = 0; j < pens.size(); ++j) {
        const auto& pj = pens[j];
        if (pj.matrix.rows() != pj.matrix.cols() || pj.offset < 0 || pj.offset + pj.matrix.rows() > x.cols()) {
            throw ConfigError("penalty '" + pj.term + "' does not fit the design");
        }
        if (!(lambda[j] >= 0.0) || !std::isfinite(lambda[j])) throw ConfigError("smoothing parameters must be >= 0");
    }
    if (x.rows() <= x.cols()) {
        throw ValidationError("design has " + std::to_string(x.rows()) + " rows for " + std::to_string(x.cols()) +
                              " coefficients");
    }
}

}  // namespace

double penalized_loglik(const Matrix& x, const std::vector<Penalty>& penalties, std::span<const double> lambda,
                        double theta, std::span<const double> y, const Vector& beta) {
    check_lengths(x, penalties, lambda, y);
    const Matrix s = total_penalty(penalties, lambda, x.cols());
    const Vector eta = x * beta;
    long double ll = 0.0L;
    for (Index i = 0; i < eta.size(); ++i) ll += nb::log_pmf(y[static_cast<std::size_t>(i)], std::exp(eta(i)), theta);
    return static_cast<double>(ll - 0.5L * beta.dot(s * beta));
}

PirlsResult pirls(const Matrix& x, const std::vector<Penalty>& penalties, std::span<const double> lambda, double theta,
                  std::span<const double> y, const FitOptions& opt, const Vector* beta_start) {
    check_lengths(x, penalties, lambda, y);
    if (!(theta > 0.0) || !std::isfinite(theta)) throw ConfigError("theta must be finite and positive");
    if (!(opt.pirls_tol > 0.0) || !(opt.score_tol > 0.0)) throw ConfigError("tolerances must be positive");
    for (const double v : y) {
        if (!(v >= 0.0) || v != std::floor(v) || !std::isfinite(v)) {
            throw ValidationError("response must be a non-negative integer");
        }
    }
    const Index p = x.cols();
    const Matrix s = total_penalty(penalties, lambda, p);
    const Matrix e = penalty_root(s);

    PirlsResult res;
    Vector beta = Vector::Zero(p);
    Evaluation cur;
    bool have_beta = false;
    Vector w, z;
    if (beta_start != nullptr && beta_start->size() == p) {
        beta = *beta_start;
        cur = evaluate(x, s, theta, y, beta);
        have_beta = cur.finite;
    }
    if (!have_beta) {
        cur.eta.resize(static_cast<Index>(y.size()));
        cur.mu.resize(cur.eta.size());
        for (Index i = 0; i < cur.eta.size(); ++i) {
            cur.mu(i) = y[static_cast<std::size_t>(i)] + 0.1;
            cur.eta(i) = std::log(cur.mu(i));
        }
        cur.penalized = std::numeric_limits<double>::infinity();
    }

    WorkingModel wm;
    for (int it = 1; it <= opt.max_pirls_iter; ++it) {
        res.iterations = it;
        irls_weights(cur.eta, cur.mu, y, theta, w, z);
        wm = working_model(x, w, z);
        const auto sol = solve_penalized(wm, e);
        res.rank_deficient = res.rank_deficient || sol.rank_deficient;
        Vector next = sol.beta;
        Evaluation ev = evaluate(x, s, theta, y, next);
        int halvings = 0;
        while (have_beta && !(ev.finite && ev.penalized <= cur.penalized) && halvings < opt.max_halvings) {
            next = 0.5 * (next + beta);
            ev = evaluate(x, s, theta, y, next);
            ++halvings;
        }
        if (have_beta && !(ev.finite && ev.penalized <= cur.penalized)) {
            // No descent left: accept the current point if it is stationary.
            if (std::fabs(ev.penalized - cur.penalized) <= opt.pirls_tol * (std::fabs(cur.penalized) + 0.1) ||
                !ev.finite) {
                const Vector g = penalized_score(x, s, theta, y, cur.mu, beta);
                res.score_norm = g.cwiseAbs().maxCoeff();
                if (std::fabs(ev.penalized - cur.penalized) <= opt.pirls_tol * (std::fabs(cur.penalized) + 0.1)) {
                    res.converged = true;
                    break;
                }
            }
            res.trace.push_back(cur.penalized);
            throw ConvergenceError("PIRLS step halving failed to reduce the penalized deviance", res.trace);
        }
        if (!ev.finite) {
            res.trace.push_back(ev.penalized);
            throw ConvergenceError("PIRLS produced non-finite fitted values", res.trace);
        }
        const double change = std::fabs(cur.penalized - ev.penalized);
        const bool small = have_beta && change <= opt.pirls_tol * (std::fabs(ev.penalized) + 0.1);
        beta = next;
        cur = std::move(ev);
        have_beta = true;
        res.trace.push_back(cur.penalized);
        if (small) {
            const Vector g = penalized_score(x, s, theta, y, cur.mu, beta);
            res.score_norm = g.cwiseAbs().maxCoeff();
            if (res.score_norm < opt.score_tol * std::max(1.0, std::sqrt(static_cast<double>(x.rows())) * 1e-2) ||
                change == 0.0) {
                res.converged = true;
                break;
            }
        }
    }
    if (!res.converged) {
        throw ConvergenceError("PIRLS did not converge in " + std::to_string(opt.max_pirls_iter) + " iterations",
                               res.trace);
    }
    // Fisher scoring converges only linearly under the log link, so near the
    // optimum the deviance change drops below its rounding floor before the
    // score is small. Polish with steps judged by the score instead.
    {
        Vector g = penalized_score(x, s, theta, y, cur.mu, beta);
        double gnorm = g.cwiseAbs().maxCoeff();
        for (int k = 0; k < 8 && gnorm > 1e-10; ++k) {
            irls_weights(cur.eta, cur.mu, y, theta, w, z);
            wm = working_model(x, w, z);
            const Vector next = solve_penalized(wm, e).beta;
            Evaluation ev = evaluate(x, s, theta, y, next);
            if (!ev.finite || ev.penalized > cur.penalized + 1e-12 * (std::fabs(cur.penalized) + 1.0)) break;
            const Vector g2 = penalized_score(x, s, theta, y, ev.mu, next);
            const double n2 = g2.cwiseAbs().maxCoeff();
            if (!(n2 < gnorm)) break;
            beta = next;
            cur = std::move(ev);
            g = g2;
            gnorm = n2;
        }
        res.score_norm = gnorm;
    }
    // Refresh the factor at the final weights for the edf.
    irls_weights(cur.eta, cur.mu, y, theta, w, z);
    wm = working_model(x, w, z);
    res.edf = column_edf(wm.r, s);
    res.beta = beta;
    res.mu = cur.mu;
    res.deviance = cur.deviance;
    res.penalized_deviance = cur.penalized;
    return res;
}

namespace {

// Working-model GCV n RSS / (n - tr A)^2 for the current IRLS weights; all
// algebra is on the p x p factor.
class WorkingGcv {
public:
    WorkingGcv(const WorkingModel& wm, const std::vector<Penalty>& pens, double n)
        : wm_(wm), pens_(pens), n_(n), g_(wm.r.transpose() * wm.r), b_(wm.r.transpose() * wm.f) {}

    double operator()(const std::vector<double>& rho, Vector* beta = nullptr) const {
        const Index p = g_.rows();
        Matrix h = g_;
        for (std::size_t j = 0; j < pens_.size(); ++j) {
            const auto& pj = pens_[j];
            const Index k = pj.matrix.rows();
            h.block(pj.offset, pj.offset, k, k) += std::exp(rho[j]) * pj.matrix;
        }
        Eigen::LLT<Matrix> llt(h);
        if (llt.info() != Eigen::Success) {
            h += 1e-10 * h.trace() * Matrix::Identity(p, p);
            llt.compute(h);
            if (llt.info() != Eigen::Success) return std::numeric_limits<double>::infinity();
        }
        const Vector bt = llt.solve(b_);
        const Matrix m = llt.matrixL().solve(wm_.r.transpose());
        const double tr = m.squaredNorm();
        const double rss = (wm_.f - wm_.r * bt).squaredNorm() + wm_.rss0;
        if (beta != nullptr) *beta = bt;
        const double denom = n_ - tr;
        if (!(denom > 0.0)) return std::numeric_limits<double>::infinity();
        return n_ * rss / (denom * denom);
    }

private:
    const WorkingModel& wm_;
    const std::vector<Penalty>& pens_;
    double n_;
    Matrix g_;
    Vector b_;
};

std::vector<double> clamp_rho(const std::vector<double>& rho, const FitOptions& opt) {
    std::vector<double> out(rho);
    for (auto& v : out) v = std::clamp(v, opt.log_lambda_lo, opt.log_lambda_hi);
    return out;
}

double moment_theta(std::span<const double> y, const FitOptions& opt) {
    double m = 0.0;
    for (const double v : y) m += v;
    m /= static_cast<double>(y.size());
    double v2 = 0.0;
    for (const double v : y) v2 += (v - m) * (v - m);
    v2 /= std::max<double>(1.0, static_cast<double>(y.size()) - 1.0);
    double theta = v2 > m ? m * m / (v2 - m) : std::exp(opt.log_theta_hi);
    return std::clamp(theta, std::exp(opt.log_theta_lo), std::exp(opt.log_theta_hi));
}

double best_log_theta(std::span<const double> y, const Vector& mu, const FitOptions& opt) {
    auto neg = [&](double lt) {
        const double th = std::exp(lt);
        double s = 0.0;
        for (Index i = 0; i < mu.size(); ++i) s += nb::log_pmf(y[static_cast<std::size_t>(i)], mu(i), th);
        return -s;
    };
    return optim::golden_section(neg, opt.log_theta_lo, opt.log_theta_hi, 1e-5).x;
}

std::string lambda_text(const std::vector<double>& lambda) {
    std::string s;
    for (const double l : lambda) s += (s.empty() ? "" : ",") + text::format_double(l);
    return s;
}

PirlsResult pirls_at(const Matrix& x, const std::vector<Penalty>& pens, const std::vector<double>& rho, double theta,
                     std::span<const double> y, const FitOptions& opt, const Vector* start) {
    std::vector<double> lambda(rho.size());
    for (std::size_t j = 0; j < rho.size(); ++j) lambda[j] = std::exp(rho[j]);
    try {
        return pirls(x, pens, lambda, theta, y, opt, start);
    } catch (const ConvergenceError& e) {
        throw ConvergenceError(std::string(e.what()) + " at lambda " + lambda_text(lambda) + ", theta " +
                                   text::format_double(theta),
                               e.trace());
    }
}

}  // namespace

SelectionResult select_lambda_theta(const Matrix& x, const std::vector<Penalty>& pens, std::span<const double> y,
                                    const FitOptions& opt) {
    const std::size_t m = pens.size();
    std::vector<double> rho(m, 0.0);
    if (opt.fixed_log_lambda) {
        if (opt.fixed_log_lambda->size() != m) throw ConfigError("fixed smoothing parameters do not match penalties");
        rho = *opt.fixed_log_lambda;
    } else if (opt.start_log_lambda && opt.start_log_lambda->size() == m) {
        rho = clamp_rho(*opt.start_log_lambda, opt);
    }
    double log_theta = opt.fixed_theta ? std::log(*opt.fixed_theta)
                       : opt.start_log_theta ? std::clamp(*opt.start_log_theta, opt.log_theta_lo, opt.log_theta_hi)
                                             : std::log(moment_theta(y, opt));
    if (opt.fixed_theta && !(*opt.fixed_theta > 0.0)) throw ConfigError("theta must be positive");

    SelectionResult out;
    const double n = static_cast<double>(y.size());
    PirlsResult fit = pirls_at(x, pens, rho, std::exp(log_theta), y, opt, opt.start_beta ? &*opt.start_beta : nullptr);
    double gcv = 0.0;
    Vector w, z;
    for (int round = 1; round <= opt.max_outer; ++round) {
        out.outer_rounds = round;
        const std::vector<double> rho_prev = rho;
        const double lt_prev = log_theta;
        const double theta = std::exp(log_theta);

        if (m > 0 && !opt.fixed_log_lambda) {
            // Performance iteration: re-select lambda on each working model.
            const Matrix s0 = total_penalty(pens, std::vector<double>(m, 0.0), x.cols());
            Vector beta = fit.beta;
            Vector eta = x * beta;
            Vector mu = eta.array().exp();
            double last_dev = fit.deviance;
            for (int it = 0; it < opt.max_lambda_updates; ++it) {
                irls_weights(eta, mu, y, theta, w, z);
                const WorkingModel wm = working_model(x, w, z);
                const WorkingGcv crit(wm, pens, n);
                optim::NelderMeadOptions nm;
                nm.initial_step = it == 0 && round == 1 ? 2.0 : 0.5;
                nm.f_tol = 1e-9;
                nm.x_tol = 1e-3;
                nm.max_evaluations = 600;
                const auto r = optim::nelder_mead(
                    [&](const std::vector<double>& v) { return crit(clamp_rho(v, opt)); }, rho, nm);
                const std::vector<double> next = clamp_rho(r.x, opt);
                Vector bn;
                gcv = crit(next, &bn);
                Vector en = x * bn;
                Vector mn = en.array().exp();
                double dev = 0.0;
                bool ok = true;
                for (Index i = 0; i < mn.size() && ok; ++i) {
                    ok = std::isfinite(mn(i)) && mn(i) > 0.0;
                    if (ok) dev += nb::unit_deviance(y[static_cast<std::size_t>(i)], mn(i), theta);
                }
                if (!ok || !std::isfinite(dev)) break;
                double drho = 0.0;
                for (std::size_t j = 0; j < m; ++j) drho = std::max(drho, std::fabs(next[j] - rho[j]));
                rho = next;
                beta = bn;
                eta = en;
                mu = mn;
                const bool settled = drho < opt.outer_tol && std::fabs(dev - last_dev) <= 1e-7 * (std::fabs(dev) + 0.1);
                last_dev = dev;
                if (settled) break;
            }
            fit = pirls_at(x, pens, rho, theta, y, opt, &beta);
        }
        if (!opt.fixed_theta) log_theta = best_log_theta(y, fit.mu, opt);

        double delta = std::fabs(log_theta - lt_prev);
        for (std::size_t j = 0; j < m; ++j) delta = std::max(delta, std::fabs(rho[j] - rho_prev[j]));
        if (log_theta != lt_prev || m == 0 || opt.fixed_log_lambda) {
            fit = pirls_at(x, pens, rho, std::exp(log_theta), y, opt, &fit.beta);
        }
        if (delta < opt.outer_tol || (opt.fixed_theta && (opt.fixed_log_lambda || m == 0))) break;
    }
    out.lambda.resize(m);
    for (std::size_t j = 0; j < m; ++j) out.lambda[j] = std::exp(rho[j]);
    out.theta = std::exp(log_theta);
    out.gcv = gcv;
    out.fit = std::move(fit);
    return out;
}

namespace {

// The design in free coordinates: constrained blocks become X_B N with
// penalties N^T S N.
struct Reduced {
    Matrix x;
    std::vector<Penalty> penalties;
    std::vector<Index> offsets;  // free offset of each block
};

Reduced reduce(const Design& d) {
    const auto& m = d.mapping;
    Reduced r;
    r.x.resize(d.x.rows(), m.free_columns());
    Index off = 0;
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& blk = m.blocks[b];
        r.offsets.push_back(off);
        const bool side = b < m.side.size() && m.side[b].size() > 0;
        const Index k = side ? m.side[b].cols() : blk.size;
        if (side) {
            r.x.middleCols(off, k) = d.x.middleCols(blk.offset, blk.size) * m.side[b];
        } else {
            r.x.middleCols(off, k) = d.x.middleCols(blk.offset, blk.size);
        }
        off += k;
    }
    for (const auto& pen : d.penalties) {
        std::size_t b = 0;
        while (m.blocks[b].offset != pen.offset || m.blocks[b].type != BlockType::Smooth) ++b;
        Penalty q = pen;
        q.offset = r.offsets[b];
        if (b < m.side.size() && m.side[b].size() > 0) {
            const Matrix& n = m.side[b];
            const Matrix t = n.transpose() * pen.matrix * n;
            q.matrix = 0.5 * (t + t.transpose());
        }
        r.penalties.push_back(std::move(q));
    }
    return r;
}

// Maps between full-design and free coefficients.
Vector expand(const DesignMapping& m, const Reduced& r, const Vector& gamma) {
    Vector beta = Vector::Zero(m.columns());
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& blk = m.blocks[b];
        if (b < m.side.size() && m.side[b].size() > 0) {
            beta.segment(blk.offset, blk.size) = m.side[b] * gamma.segment(r.offsets[b], m.side[b].cols());
        } else {
            beta.segment(blk.offset, blk.size) = gamma.segment(r.offsets[b], blk.size);
        }
    }
    return beta;
}

Vector contract(const DesignMapping& m, const Reduced& r, const Vector& beta) {
    Vector gamma(r.x.cols());
    for (std::size_t b = 0; b < m.blocks.size(); ++b) {
        const auto& blk = m.blocks[b];
        if (b < m.side.size() && m.side[b].size() > 0) {
            gamma.segment(r.offsets[b], m.side[b].cols()) = m.side[b].transpose() * beta.segment(blk.offset, blk.size);
        } else {
            gamma.segment(r.offsets[b], blk.size) = beta.segment(blk.offset, blk.size);
        }
    }
    return gamma;
}

}  // namespace

FittedModel fit(const CovariateFrame& frame, const ModelSpec& spec, const FitOptions& options) {
    const Design d = build_design(frame, spec);
    const Reduced r = reduce(d);
    FitOptions opt = options;
    if (opt.start_beta) {
        // Warm starts come in full-design coordinates.
        if (opt.start_beta->size() == d.x.cols()) {
            opt.start_beta = contract(d.mapping, r, *opt.start_beta);
        } else {
            opt.start_beta.reset();
        }
    }
    const auto sel = select_lambda_theta(r.x, r.penalties, frame.y, opt);

    FittedModel m;
    m.mapping = d.mapping;
    m.beta = expand(d.mapping, r, sel.fit.beta);
    m.lambda = sel.lambda;
    for (const auto& p : d.penalties) {
        m.penalty_terms.push_back(p.term);
        m.penalty_scales.push_back(p.scale);
    }
    m.theta = sel.theta;
    for (std::size_t b = 0; b < m.mapping.blocks.size(); ++b) {
        const auto& blk = m.mapping.blocks[b];
        const Index k = m.mapping.side[b].size() > 0 ? m.mapping.side[b].cols() : blk.size;
        m.edf.push_back({blk.name, sel.fit.edf.segment(r.offsets[b], k).sum()});
    }
    m.deviance = sel.fit.deviance;
    m.gcv = sel.gcv;
    m.converged = sel.fit.converged;
    m.iterations = sel.fit.iterations;
    m.outer_rounds = sel.outer_rounds;
    m.rank_deficient = sel.fit.rank_deficient;
    m.score_norm = sel.fit.score_norm;
    m.rows = frame.size();
    return m;
}

std::vector<double> predict_eta(const FittedModel& model, const CovariateFrame& frame, RowBuildInfo* info) {
    const Matrix x = design_rows(model.mapping, frame, info);
    const Vector eta = x * model.beta;
    return {eta.data(), eta.data() + eta.size()};
}

std::vector<double> predict(const FittedModel& model, const CovariateFrame& frame, RowBuildInfo* info) {
    auto eta = predict_eta(model, frame, info);
    for (auto& v : eta) {
        v = std::exp(v);
        if (!(v > 0.0) || !std::isfinite(v)) throw NumericError("prediction overflow");
    }
    return eta;
}

std::vector<double> partial_effect(const FittedModel& model, const std::string& term,
                                   const std::vector<std::span<const double>>& covariates) {
    const auto& m = model.mapping;
    const auto& b = m.block(term);
    if (b.type == BlockType::Intercept) throw ConfigError("the intercept has no partial effect");
    if (covariates.empty()) throw ConfigError("partial effect needs covariate values");
    const std::size_t n = covariates.front().size();
    for (const auto& c : covariates) {
        if (c.size() != n) throw ConfigError("covariate grids differ in length");
    }
    std::vector<double> out(n, 0.0);
    if (b.type == BlockType::Linear) {
        if (covariates.size() != 1) throw ConfigError("linear term takes one covariate");
        for (const auto& st : m.standardization) {
            if (st.column != term) continue;
            for (std::size_t i = 0; i < n; ++i) out[i] = model.beta(b.offset) * (covariates[0][i] - st.mean) / st.sd;
        }
        return out;
    }
    std::size_t k = 0;
    while (m.spec.smooths[k].name != term) ++k;
    const auto& s = m.smooths[k];
    const Matrix basis = s.evaluate(covariates);
    const Vector f = basis * model.beta.segment(b.offset, b.size);
    for (std::size_t i = 0; i < n; ++i) out[i] = f(static_cast<Index>(i));
    return out;
}

EffectGrid effect_grid(const FittedModel& model, const std::string& term, int n1, int n2) {
    const auto& m = model.mapping;
    const auto& b = m.block(term);
    if (n1 < 2) throw ConfigError("effect grid needs at least two points");
    auto grid = [](double lo, double hi, int k) {
        std::vector<double> g(static_cast<std::size_t>(k));
        for (int i = 0; i < k; ++i) g[static_cast<std::size_t>(i)] = i + 1 == k ? hi : lo + (hi - lo) * i / (k - 1);
        return g;
    };
    EffectGrid out;
    if (b.type == BlockType::Linear) {
        for (const auto& st : m.standardization) {
            if (st.column == term) out.x1 = grid(st.mean - 2.0 * st.sd, st.mean + 2.0 * st.sd, n1);
        }
        out.effect = partial_effect(model, term, {out.x1});
        return out;
    }
    if (b.type != BlockType::Smooth) throw ConfigError("the intercept has no partial effect");
    std::size_t k = 0;
    while (m.spec.smooths[k].name != term) ++k;
    const auto& s = m.smooths[k];
    out.x1 = grid(s.margins[0].lo(), s.margins[0].hi(), n1);
    if (s.margins.size() == 1) {
        out.effect = partial_effect(model, term, {out.x1});
        return out;
    }
    if (n2 < 2) throw ConfigError("tensor effect grid needs at least two points per margin");
    out.x2 = grid(s.margins[1].lo(), s.margins[1].hi(), n2);
    std::vector<double> a, c;
    for (const double u : out.x1) {
        for (const double v : out.x2) {
            a.push_back(u);
            c.push_back(v);
        }
    }
    out.effect = partial_effect(model, term, {a, c});
    return out;
}

namespace {

constexpr std::string_view kMagic = "emsf-nbgam-model";

std::string block_type_name(BlockType t) {
    switch (t) {
        case BlockType::Intercept: return "intercept";
        case BlockType::Smooth: return "smooth";
        case BlockType::Linear: return "linear";
    }
    return "?";
}

void put_doubles(std::string& out, const double* v, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        out += ' ';
        out += text::format_double(v[i]);
    }
}

std::string join(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += (s.empty() ? "" : ",") + x;
    return s;
}

}  // namespace

std::string save_model(const FittedModel& model) {
    const auto& m = model.mapping;
    std::string out(kMagic);
    out += " 1\n";
    out += "intercept " + std::to_string(m.spec.include_intercept ? 1 : 0) + "\n";
    out += "max_tensor_dim " + std::to_string(m.spec.max_tensor_dim) + "\n";
    out += "rows " + std::to_string(model.rows) + "\n";
    out += "theta " + text::format_double(model.theta) + "\n";
    out += "deviance " + text::format_double(model.deviance) + "\n";
    out += "gcv " + text::format_double(model.gcv) + "\n";
    out += "score_norm " + text::format_double(model.score_norm) + "\n";
    out += "converged " + std::to_string(model.converged ? 1 : 0) + "\n";
    out += "iterations " + std::to_string(model.iterations) + "\n";
    out += "outer_rounds " + std::to_string(model.outer_rounds) + "\n";
    out += "rank_deficient " + std::to_string(model.rank_deficient ? 1 : 0) + "\n";
    for (std::size_t k = 0; k < m.spec.smooths.size(); ++k) {
        const auto& st = m.spec.smooths[k];
        const auto& s = m.smooths[k];
        std::vector<std::string> dims, kinds;
        for (const int d : st.dims) dims.push_back(std::to_string(d));
        for (const auto kk : st.margin_kinds) kinds.emplace_back(smooth::kind_name(kk));
        out += "smooth " + st.name + " " + std::string(smooth::kind_name(st.kind)) + " " + join(st.covariates) + " " +
               join(dims) + " " + std::to_string(st.penalty_order) + " " + (kinds.empty() ? "-" : join(kinds)) + " " +
               std::to_string(s.margins.size()) + "\n";
        for (const auto& mg : s.margins) {
            const auto& kn = mg.knots().knots;
            out += "margin " + std::string(smooth::kind_name(mg.kind())) + " " + std::to_string(mg.degree()) + " " +
                   std::to_string(mg.penalty_order()) + " " + std::to_string(kn.size());
            put_doubles(out, kn.data(), kn.size());
            out += "\n";
        }
        out += "constraint " + std::to_string(s.constraint.rows()) + " " + std::to_string(s.constraint.cols());
        for (Index i = 0; i < s.constraint.rows(); ++i)
            for (Index j = 0; j < s.constraint.cols(); ++j) put_doubles(out, &s.constraint(i, j), 1);
        out += "\n";
    }
    for (const auto& st : m.standardization) {
        out += "linear " + st.column + " " + text::format_double(st.mean) + " " + text::format_double(st.sd) + "\n";
    }
    for (const auto& b : m.blocks) {
        out += "block " + b.name + " " + block_type_name(b.type) + " " + std::to_string(b.offset) + " " +
               std::to_string(b.size) + "\n";
    }
    for (std::size_t j = 0; j < model.lambda.size(); ++j) {
        out += "penalty " + model.penalty_terms[j] + " " + text::format_double(model.penalty_scales[j]) + " " +
               text::format_double(model.lambda[j]) + "\n";
    }
    for (const auto& e : model.edf) out += "edf " + e.term + " " + text::format_double(e.edf) + "\n";
    for (std::size_t b = 0; b < m.side.size(); ++b) {
        const auto& n = m.side[b];
        if (n.size() == 0) continue;
        out += "side " + m.blocks[b].name + " " + std::to_string(n.rows()) + " " + std::to_string(n.cols());
        for (Index i = 0; i < n.rows(); ++i)
            for (Index j = 0; j < n.cols(); ++j) put_doubles(out, &n(i, j), 1);
        out += "\n";
    }
    out += "beta " + std::to_string(model.beta.size());
    put_doubles(out, model.beta.data(), static_cast<std::size_t>(model.beta.size()));
    out += "\nend\n";
    return out;
}

namespace {

class ModelReader {
public:
    explicit ModelReader(std::string_view content) : rest_(content) {}

    bool next() {
        while (!rest_.empty()) {
            const auto nl = rest_.find('\n');
            const auto line = rest_.substr(0, nl);
            rest_ = nl == std::string_view::npos ? std::string_view{} : rest_.substr(nl + 1);
            ++line_;
            tokens_.clear();
            std::size_t i = 0;
            while (i < line.size()) {
                while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
                const std::size_t j = i;
                while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
                if (i > j) tokens_.push_back(line.substr(j, i - j));
            }
            if (!tokens_.empty()) return true;
        }
        return false;
    }
    std::string_view key() const { return tokens_.front(); }
    std::size_t size() const { return tokens_.size(); }
    std::string_view at(std::size_t i) const {
        if (i >= tokens_.size()) fail("missing field");
        return tokens_[i];
    }
    double num(std::size_t i) const {
        try {
            return text::parse_double(at(i));
        } catch (const ParseError&) {
            fail("bad number '" + std::string(at(i)) + "'");
        }
    }
    long long integer(std::size_t i) const {
        try {
            return text::parse_int(at(i));
        } catch (const ParseError&) {
            fail("bad integer '" + std::string(at(i)) + "'");
        }
    }
    void expect(std::string_view k) {
        if (!next() || key() != k) fail("expected '" + std::string(k) + "'");
    }
    [[noreturn]] void fail(const std::string& what) const { throw ParseError("model", line_, what); }

private:
    std::string_view rest_;
    std::vector<std::string_view> tokens_;
    std::size_t line_ = 0;
};

std::vector<std::string> split_list(std::string_view s) {
    std::vector<std::string> out;
    for (const auto f : text::split(s, ',')) out.emplace_back(f);
    return out;
}

BlockType parse_block_type(const ModelReader& r, std::string_view s) {
    if (s == "intercept") return BlockType::Intercept;
    if (s == "smooth") return BlockType::Smooth;
    if (s == "linear") return BlockType::Linear;
    r.fail("unknown block type '" + std::string(s) + "'");
}

}  // namespace

FittedModel load_model(std::string_view content) {
    ModelReader r(content);
    if (!r.next() || r.key() != kMagic) r.fail("not a model file");
    if (r.at(1) != "1") r.fail("unsupported model version '" + std::string(r.at(1)) + "'");
    FittedModel model;
    auto& m = model.mapping;
    m.spec.linear.clear();
    std::vector<std::pair<std::string, Matrix>> sides;
    bool ended = false;
    try {
        while (r.next()) {
            const auto k = r.key();
            if (k == "intercept") {
                m.spec.include_intercept = r.integer(1) != 0;
            } else if (k == "max_tensor_dim") {
                m.spec.max_tensor_dim = static_cast<int>(r.integer(1));
            } else if (k == "rows") {
                model.rows = static_cast<std::size_t>(r.integer(1));
            } else if (k == "theta") {
                model.theta = r.num(1);
            } else if (k == "deviance") {
                model.deviance = r.num(1);
            } else if (k == "gcv") {
                model.gcv = r.num(1);
            } else if (k == "score_norm") {
                model.score_norm = r.num(1);
            } else if (k == "converged") {
                model.converged = r.integer(1) != 0;
            } else if (k == "iterations") {
                model.iterations = static_cast<int>(r.integer(1));
            } else if (k == "outer_rounds") {
                model.outer_rounds = static_cast<int>(r.integer(1));
            } else if (k == "rank_deficient") {
                model.rank_deficient = r.integer(1) != 0;
            } else if (k == "smooth") {
                SmoothTermSpec st;
                st.name = std::string(r.at(1));
                st.kind = smooth::parse_kind(r.at(2));
                st.covariates = split_list(r.at(3));
                for (const auto& d : split_list(r.at(4))) st.dims.push_back(static_cast<int>(text::parse_int(d)));
                st.penalty_order = static_cast<int>(r.integer(5));
                if (r.at(6) != "-") {
                    for (const auto& kk : split_list(r.at(6))) st.margin_kinds.push_back(smooth::parse_kind(kk));
                }
                const auto margins = r.integer(7);
                if (margins < 1 || margins > 2) r.fail("smooth needs one or two margins");
                smooth::RealizedSmooth s;
                for (long long g = 0; g < margins; ++g) {
                    r.expect("margin");
                    const auto kind = smooth::parse_kind(r.at(1));
                    const int degree = static_cast<int>(r.integer(2));
                    const int order = static_cast<int>(r.integer(3));
                    const auto count = static_cast<std::size_t>(r.integer(4));
                    if (r.size() != count + 5) r.fail("knot count mismatch");
                    std::vector<double> knots;
                    for (std::size_t i = 0; i < count; ++i) knots.push_back(r.num(5 + i));
                    s.margins.push_back(smooth::MarginBasis::from_knots(kind, std::move(knots), degree, order));
                }
                r.expect("constraint");
                const auto rows = r.integer(1), cols = r.integer(2);
                if (rows < 0 || cols < 0 || r.size() != static_cast<std::size_t>(rows * cols + 3)) {
                    r.fail("constraint size mismatch");
                }
                s.constraint.resize(rows, cols);
                for (Index i = 0; i < rows; ++i)
                    for (Index j = 0; j < cols; ++j) s.constraint(i, j) = r.num(static_cast<std::size_t>(3 + i * cols + j));
                if (s.centered() && s.constraint.rows() != s.raw_dim()) r.fail("constraint does not match margins");
                m.spec.smooths.push_back(std::move(st));
                m.smooths.push_back(std::move(s));
            } else if (k == "linear") {
                m.standardization.push_back({std::string(r.at(1)), r.num(2), r.num(3)});
                m.spec.linear.emplace_back(r.at(1));
            } else if (k == "block") {
                m.blocks.push_back({std::string(r.at(1)), parse_block_type(r, r.at(2)), static_cast<Index>(r.integer(3)),
                                    static_cast<Index>(r.integer(4))});
            } else if (k == "penalty") {
                model.penalty_terms.emplace_back(r.at(1));
                model.penalty_scales.push_back(r.num(2));
                model.lambda.push_back(r.num(3));
            } else if (k == "edf") {
                model.edf.push_back({std::string(r.at(1)), r.num(2)});
            } else if (k == "side") {
                const std::string name(r.at(1));
                const auto rows = r.integer(2), cols = r.integer(3);
                if (rows < 1 || cols < 1 || cols > rows || r.size() != static_cast<std::size_t>(rows * cols + 4)) {
                    r.fail("side constraint size mismatch");
                }
                Matrix n(rows, cols);
                for (Index i = 0; i < rows; ++i)
                    for (Index j = 0; j < cols; ++j) n(i, j) = r.num(static_cast<std::size_t>(4 + i * cols + j));
                sides.emplace_back(name, std::move(n));
            } else if (k == "beta") {
                const auto n = static_cast<std::size_t>(r.integer(1));
                if (r.size() != n + 2) r.fail("coefficient count mismatch");
                model.beta.resize(static_cast<Index>(n));
                for (std::size_t i = 0; i < n; ++i) model.beta(static_cast<Index>(i)) = r.num(2 + i);
            } else if (k == "end") {
                ended = true;
                break;
            } else {
                r.fail("unknown record '" + std::string(k) + "'");
            }
        }
    } catch (const ParseError&) {
        throw;
    } catch (const Error& e) {
        r.fail(e.what());
    }
    if (!ended) throw ParseError("model file is truncated");
    try {
        m.spec.validate();
    } catch (const ConfigError& e) {
        throw ParseError(std::string("model file holds an invalid term list: ") + e.what());
    }
    m.total_columns = model.beta.size();
    m.side.assign(m.blocks.size(), Matrix());
    for (auto& [name, n] : sides) {
        std::size_t b = 0;
        while (b < m.blocks.size() && m.blocks[b].name != name) ++b;
        if (b == m.blocks.size() || m.blocks[b].size != n.rows()) throw ParseError("side constraint for unknown block");
        m.side[b] = std::move(n);
    }
    Index expect = m.spec.include_intercept ? 1 : 0;
    for (const auto& s : m.smooths) expect += s.centered() ? s.constraint.cols() : s.raw_dim();
    expect += static_cast<Index>(m.standardization.size());
    if (expect != model.beta.size()) throw ParseError("model terms do not match the coefficient count");
    if (!(model.theta > 0.0)) throw ParseError("model theta must be positive");
    return model;
}

}  // namespace emsf::gam
