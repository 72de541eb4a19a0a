#pragma once

// Seeded penalized NB regression problems shared by the unit and acceptance
// tests.

#include <cmath>
#include <span>
#include <vector>

#include "core/gam.hpp"
#include "core/nb.hpp"
#include "core/rng.hpp"
#include "core/smoothers.hpp"
#include "core/synth.hpp"

namespace toy {

using emsf::smooth::Matrix;
using emsf::smooth::Vector;

struct Problem {
    Matrix x;
    std::vector<emsf::gam::Penalty> penalties;
    std::vector<double> y;
};

// Intercept plus `smooths` centered CRS blocks whose widths add up to `cols`.
inline Problem make_problem(std::uint64_t seed, int rows, int cols, int smooths, double theta = 5.0) {
    emsf::Rng rng(seed);
    const int free = cols - 1;
    std::vector<int> widths(static_cast<std::size_t>(smooths), free / smooths);
    for (int i = 0; i < free % smooths; ++i) ++widths[static_cast<std::size_t>(i)];

    std::vector<emsf::smooth::RealizedSmooth> blocks;
    std::vector<std::vector<double>> xs;
    for (int j = 0; j < smooths; ++j) {
        std::vector<double> v;
        for (int i = 0; i < rows; ++i) v.push_back(rng.uniform() * 10.0);
        blocks.push_back(emsf::smooth::center_constraint(emsf::smooth::crs_basis(v, widths[static_cast<std::size_t>(j)] + 1)));
        xs.push_back(std::move(v));
    }
    Problem p;
    p.x.resize(rows, cols);
    p.x.col(0).setOnes();
    Eigen::Index off = 1;
    for (std::size_t j = 0; j < blocks.size(); ++j) {
        const auto& b = blocks[j];
        p.x.middleCols(off, b.dim()) = b.basis;
        emsf::gam::Penalty pen;
        pen.matrix = b.penalties.front();
        pen.offset = off;
        pen.term = "s" + std::to_string(j);
        p.penalties.push_back(pen);
        off += b.dim();
    }
    for (int i = 0; i < rows; ++i) {
        double eta = 1.5;
        for (std::size_t j = 0; j < xs.size(); ++j) eta += 0.4 * std::sin(xs[j][static_cast<std::size_t>(i)] * (0.5 + 0.3 * static_cast<double>(j)));
        p.y.push_back(static_cast<double>(rng.negative_binomial(std::exp(eta), theta)));
    }
    return p;
}

// Problem `k` of the seeded family: rows in 200..2000, columns in 10..120.
inline Problem family(int k) {
    const int rows = 200 + (1800 * k) / 19;
    const int cols = 10 + (110 * ((k * 7) % 20)) / 19;
    const int smooths = 1 + k % 4;
    return make_problem(1000 + static_cast<std::uint64_t>(k), rows, cols, smooths);
}

// Max |finite-difference gradient| of the penalized log-likelihood: central
// differences at h and h/2 combined by Richardson extrapolation.
inline double fd_gradient_max(const Problem& p, std::span<const double> lambda, double theta, const Vector& beta) {
    auto f = [&](const Vector& b) { return emsf::gam::penalized_loglik(p.x, p.penalties, lambda, theta, p.y, b); };
    auto central = [&](Eigen::Index j, double h) {
        Vector b1 = beta, b2 = beta;
        b1[j] += h;
        b2[j] -= h;
        return (f(b1) - f(b2)) / (2 * h);
    };
    double worst = 0.0;
    for (Eigen::Index j = 0; j < beta.size(); ++j) {
        const double h = 1e-3 * std::max(1.0, std::fabs(beta[j]));
        const double g = (4 * central(j, h / 2) - central(j, h)) / 3;
        worst = std::max(worst, std::fabs(g));
    }
    return worst;
}

// Penalized Poisson fit by damped Newton iterations.
inline Vector poisson_fit(const Problem& p, std::span<const double> lambda) {
    const Eigen::Index k = p.x.cols();
    Matrix s = Matrix::Zero(k, k);
    for (std::size_t j = 0; j < p.penalties.size(); ++j) {
        const auto& pen = p.penalties[j];
        const auto m = pen.matrix.rows();
        s.block(pen.offset, pen.offset, m, m) += lambda[j] * pen.matrix;
    }
    const Eigen::Map<const Vector> y(p.y.data(), static_cast<Eigen::Index>(p.y.size()));
    Vector beta = Vector::Zero(k);
    beta[0] = std::log(std::max(y.mean(), 1e-3));
    auto objective = [&](const Vector& b) {
        const Vector eta = p.x * b;
        return (y.array() * eta.array() - eta.array().exp()).sum() - 0.5 * b.dot(s * b);
    };
    for (int it = 0; it < 200; ++it) {
        const Vector mu = (p.x * beta).array().exp();
        const Vector grad = p.x.transpose() * (y - mu) - s * beta;
        const Matrix hess = p.x.transpose() * mu.asDiagonal() * p.x + s;
        const Vector step = hess.ldlt().solve(grad);
        double t = 1.0;
        const double f0 = objective(beta);
        while (objective(beta + t * step) < f0 && t > 1e-10) t *= 0.5;
        beta += t * step;
        if (step.cwiseAbs().maxCoeff() * t < 1e-13) break;
    }
    return beta;
}

}  // namespace toy
