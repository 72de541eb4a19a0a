#include <doctest.h>

#include <cmath>

#include "core/error.hpp"
#include "core/rng.hpp"
#include "core/smoothers.hpp"

using namespace emsf;
using smooth::Matrix;
using smooth::Vector;

TEST_CASE("B-splines form a partition of unity") {
    for (const int dim : {4, 7, 12}) {
        const auto m = smooth::MarginBasis::bspline(-2.0, 5.0, dim, 3, 2);
        CHECK(m.dim() == dim);
        double worst = 0;
        for (int i = 0; i <= 10000; ++i) {
            const double x = -2.0 + 7.0 * i / 10000.0;
            const Vector b = m.evaluate(x);
            worst = std::max(worst, std::fabs(b.sum() - 1.0));
            CHECK(b.minCoeff() >= -1e-15);
        }
        CHECK(worst < 1e-12);
    }
}

TEST_CASE("cubic regression spline is cardinal at its knots") {
    const std::vector<double> knots{0.0, 1.0, 2.5, 4.0, 7.0, 8.0};
    const auto m = smooth::MarginBasis::crs(knots);
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const Vector b = m.evaluate(knots[k]);
        for (Eigen::Index j = 0; j < b.size(); ++j) {
            CHECK(std::fabs(b[j] - (j == static_cast<Eigen::Index>(k) ? 1.0 : 0.0)) < 1e-9);
        }
    }
    // Natural spline through linear data reproduces the line at any x.
    Vector line(static_cast<Eigen::Index>(knots.size()));
    for (std::size_t k = 0; k < knots.size(); ++k) line[static_cast<Eigen::Index>(k)] = 3.0 - 0.5 * knots[k];
    for (double x = 0.0; x <= 8.0; x += 0.37) CHECK(m.evaluate(x).dot(line) == doctest::Approx(3.0 - 0.5 * x));
    CHECK((m.penalty() * line).norm() < 1e-10);
    CHECK_THROWS_AS(m.evaluate(8.5), NumericError);
}

TEST_CASE("difference penalty annihilates affine vectors") {
    const int dim = 10;
    const Matrix s = smooth::difference_penalty(dim, 2);
    Vector v(dim), c = Vector::Ones(dim);
    for (int i = 0; i < dim; ++i) v[i] = 0.7 * i - 3.0;
    CHECK((s * v).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((s * c).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(smooth::difference_matrix(dim, 2).rows() == dim - 2);
    // Positive semidefinite with a two-dimensional null space.
    Eigen::SelfAdjointEigenSolver<Matrix> es(s);
    CHECK(es.eigenvalues().minCoeff() > -1e-10);
    int zeros = 0;
    for (int i = 0; i < dim; ++i) zeros += std::fabs(es.eigenvalues()[i]) < 1e-10;
    CHECK(zeros == 2);
}

TEST_CASE("quantile knots and insufficient distinct values") {
    std::vector<double> x;
    for (int i = 0; i < 100; ++i) x.push_back(i % 24);
    const auto k = smooth::quantile_knots(x, 5, "hour");
    CHECK(k.front() == 0.0);
    CHECK(k.back() == 23.0);
    std::vector<double> few{1, 2, 1, 2};
    CHECK_THROWS_AS(smooth::quantile_knots(few, 3, "day"), ConfigError);
}

TEST_CASE("centering constraint gives zero column sums") {
    Rng rng(3);
    std::vector<double> x;
    for (int i = 0; i < 500; ++i) x.push_back(rng.uniform() * 10);
    const auto raw = smooth::crs_basis(x, 8);
    const auto c = smooth::center_constraint(raw);
    CHECK(c.dim() == 7);
    CHECK(c.basis.colwise().sum().cwiseAbs().maxCoeff() < 1e-9);
    CHECK(c.penalties[0].rows() == 7);
    // Rebuilding rows through the stored transform matches the fitting basis.
    const double* xp = x.data() + 17;
    const Matrix row = c.evaluate({std::span<const double>(xp, 1)});
    CHECK((row.row(0) - c.basis.row(17)).norm() < 1e-12);
}

TEST_CASE("tensor product has kronecker structure") {
    Rng rng(4);
    std::vector<double> a, b;
    for (int i = 0; i < 300; ++i) {
        a.push_back(1 + (i % 7));
        b.push_back(rng.uniform() * 23);
    }
    const auto ma = smooth::pspline_basis(a, 5);
    const auto mb = smooth::crs_basis(b, 6);
    const auto t = smooth::tensor_product(ma, mb);
    CHECK(t.dim() == 30);
    CHECK(t.penalties.size() == 2);
    for (int r = 0; r < 300; r += 37) {
        for (int i = 0; i < 5; ++i) {
            for (int j = 0; j < 6; ++j) CHECK(t.basis(r, i * 6 + j) == doctest::Approx(ma.basis(r, i) * mb.basis(r, j)));
        }
    }
    CHECK_THROWS(smooth::tensor_product(ma, mb, 20));
    CHECK(smooth::bspline_basis(a, 5).rows() == 300);
}
