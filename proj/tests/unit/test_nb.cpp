#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "core/error.hpp"
#include "core/nb.hpp"

using namespace emsf;

namespace {

bool rel_close(double a, double b, double tol) { return std::fabs(a - b) <= tol * std::fabs(b); }

}  // namespace

TEST_CASE("log pmf matches high-precision references") {
    // Computed with mpmath at 50 digits.
    CHECK(rel_close(nb::log_pmf(3, 2.5, 1.7), -2.053503671937083907848122, 1e-12));
    CHECK(rel_close(nb::log_pmf(0, 1, 1e8), -0.9999999950000000333333331, 1e-12));
    CHECK(rel_close(nb::log_pmf(17, 12.25, 4.5), -3.340157498796547294676229, 1e-12));
}

TEST_CASE("pmf sums to one and has the NB2 variance") {
    for (const double theta : {0.5, 3.0, 40.0}) {
        const double mu = 6.0;
        double s = 0, m = 0, v = 0;
        for (int y = 0; y < 2000; ++y) {
            const double p = std::exp(nb::log_pmf(y, mu, theta));
            s += p;
            m += y * p;
            v += y * y * p;
        }
        v -= m * m;
        CHECK(s == doctest::Approx(1.0).epsilon(1e-10));
        CHECK(m == doctest::Approx(mu).epsilon(1e-8));
        CHECK(v == doctest::Approx(nb::variance(mu, theta)).epsilon(1e-6));
    }
}

TEST_CASE("large theta approaches the Poisson") {
    const double mu = 4.2;
    for (int y = 0; y < 15; ++y) {
        const double pois = y * std::log(mu) - mu - std::lgamma(y + 1.0);
        CHECK(std::fabs(nb::log_pmf(y, mu, 1e10) - pois) < 1e-8);
    }
}

TEST_CASE("deviance is zero at the data and positive elsewhere") {
    const std::vector<double> y{0, 1, 5, 12};
    CHECK(nb::deviance(y, std::vector<double>{1e-300, 1, 5, 12}, 2.0) == doctest::Approx(0.0));
    for (const double yy : {0.0, 3.0, 20.0}) {
        CHECK(nb::unit_deviance(yy, 7.0, 2.5) > 0.0);
        CHECK(std::fabs(nb::unit_deviance(yy, yy > 0 ? yy : 1e-300, 2.5)) < 1e-12);
    }
    // Deviance equals twice the log-likelihood gap to the saturated model.
    const std::vector<double> mu{2, 2, 4, 9};
    std::vector<double> sat{1e-300, 1, 5, 12};
    const double d = nb::deviance(y, mu, 3.0);
    const double gap = 2 * (nb::loglik(y, sat, 3.0) - nb::loglik(y, mu, 3.0));
    CHECK(d == doctest::Approx(gap).epsilon(1e-9));
}

TEST_CASE("invalid inputs are rejected") {
    const std::vector<double> y{1, 2}, mu{1, 2}, bad{1, -1};
    CHECK_THROWS_AS(nb::check_inputs(y, mu, -1.0), NumericError);
    CHECK_THROWS_AS(nb::check_inputs(y, bad, 1.0), NumericError);
    const std::vector<double> nan{1, std::numeric_limits<double>::quiet_NaN()};
    CHECK_THROWS_AS(nb::check_inputs(nan, mu, 1.0), NumericError);
}
