#include <doctest.h>

#include <cmath>

#include "../common/toy.hpp"
#include "core/error.hpp"
#include "core/features.hpp"
#include "core/gam.hpp"
#include "core/rng.hpp"

using namespace emsf;
using features::Column;

namespace {

features::CovariateFrame small_frame(std::uint64_t seed, int days) {
    Rng rng(seed);
    features::CovariateFrame f;
    const auto h0 = cal::first_hour(cal::day_from_civil(2020, 1, 6));
    for (int t = 0; t < days * 24; ++t) {
        const auto ts = h0 + t;
        const auto c = features::calendar_of(ts);
        std::array<double, features::kColumnCount> row{};
        row[static_cast<std::size_t>(Column::hour)] = c.hour;
        row[static_cast<std::size_t>(Column::day)] = c.day;
        row[static_cast<std::size_t>(Column::quarter)] = c.quarter;
        const double temp = 10 + 5 * std::sin(t / 100.0) + rng.normal();
        row[static_cast<std::size_t>(Column::temperature)] = temp;
        const double eta = 2.0 + 0.5 * std::sin(2 * M_PI * (c.hour - 7.5) / 24) + (c.day >= 6 ? -0.1 : 0.05) - 0.01 * temp;
        f.push_row(ts, row, static_cast<double>(rng.negative_binomial(std::exp(eta), 8.0)));
    }
    return f;
}

gam::ModelSpec small_spec() {
    gam::ModelSpec s;
    s.smooths.push_back({"hour", smooth::Kind::CRS, {"hour"}, {8}, {}, 2});
    s.smooths.push_back({"day", smooth::Kind::PSpline, {"day"}, {5}, {}, 2});
    s.linear = {"temperature"};
    return s;
}

}  // namespace

TEST_CASE("converged PIRLS solution has a vanishing gradient") {
    for (const int k : {0, 5, 11}) {
        const auto p = toy::family(k);
        const std::vector<double> lambda(p.penalties.size(), 3.0);
        const auto r = gam::pirls(p.x, p.penalties, lambda, 5.0, p.y);
        CHECK(r.converged);
        CHECK(toy::fd_gradient_max(p, lambda, 5.0, r.beta) < 1e-5);
        for (std::size_t i = 1; i < r.trace.size(); ++i) CHECK(r.trace[i] <= r.trace[i - 1] * (1 + 1e-12));
        CHECK(r.mu.minCoeff() > 0.0);
    }
}

TEST_CASE("large theta reproduces an independent penalized Poisson fit") {
    const auto p = toy::make_problem(77, 800, 25, 2);
    const std::vector<double> lambda{2.0, 0.5};
    gam::FitOptions o;
    o.pirls_tol = 1e-12;
    const auto nbfit = gam::pirls(p.x, p.penalties, lambda, 1e8, p.y, o);
    const auto pois = toy::poisson_fit(p, lambda);
    CHECK((nbfit.beta - pois).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("adding an unpenalized column cannot worsen the penalized fit") {
    const auto p = toy::make_problem(8, 600, 16, 1);
    auto q = p;
    q.x.conservativeResize(Eigen::NoChange, p.x.cols() + 1);
    Rng rng(2);
    for (Eigen::Index i = 0; i < q.x.rows(); ++i) q.x(i, p.x.cols()) = rng.normal();
    const std::vector<double> lambda{1.0};
    const auto a = gam::pirls(p.x, p.penalties, lambda, 4.0, p.y);
    const auto b = gam::pirls(q.x, q.penalties, lambda, 4.0, q.y);
    CHECK(b.penalized_deviance <= a.penalized_deviance + 1e-8);
}

TEST_CASE("smoothing selection converges and keeps the gradient small") {
    const auto p = toy::family(3);
    const auto s = gam::select_lambda_theta(p.x, p.penalties, p.y);
    CHECK(s.fit.converged);
    CHECK(s.theta > 1.0);
    CHECK(s.theta < 50.0);
    CHECK(toy::fd_gradient_max(p, s.lambda, s.theta, s.fit.beta) < 1e-5);
}

TEST_CASE("model fits, predicts positively and round trips through text") {
    const auto frame = small_frame(12, 60);
    const auto m = gam::fit(frame, small_spec());
    CHECK(m.converged);
    CHECK(m.rows == frame.size());
    const auto mu = gam::predict(m, frame);
    for (const double v : mu) CHECK(v > 0.0);

    const auto text = gam::save_model(m);
    const auto back = gam::load_model(text);
    CHECK(gam::save_model(back) == text);
    const auto mu2 = gam::predict(back, frame);
    REQUIRE(mu2.size() == mu.size());
    bool identical = true;
    for (std::size_t i = 0; i < mu.size(); ++i) identical = identical && mu[i] == mu2[i];
    CHECK(identical);

    // The hour effect follows the generating sinusoid.
    const auto g = gam::effect_grid(m, "hour", 24);
    REQUIRE(g.effect.size() == 24);
    double sum = 0;
    for (const double v : g.effect) sum += v;
    CHECK(std::fabs(sum / 24) < 0.1);
    const auto peak = std::max_element(g.effect.begin(), g.effect.end()) - g.effect.begin();
    CHECK(std::fabs(g.x1[static_cast<std::size_t>(peak)] - 13.5) < 3.0);
}

TEST_CASE("design rows for new data match the fitting design") {
    const auto frame = small_frame(3, 30);
    const auto d = gam::build_design(frame, small_spec());
    const auto rows = gam::design_rows(d.mapping, frame);
    CHECK((rows - d.x).cwiseAbs().maxCoeff() < 1e-10);
    CHECK(d.x.col(0).minCoeff() == 1.0);
}

TEST_CASE("model specifications are validated") {
    const auto frame = small_frame(1, 20);
    auto dup = small_spec();
    dup.smooths.push_back({"hour2", smooth::Kind::PSpline, {"hour"}, {6}, {}, 2});
    CHECK_THROWS_AS(dup.validate(), ConfigError);
    auto tiny = small_spec();
    tiny.smooths[0].dims = {2};
    CHECK_THROWS_AS(tiny.validate(), ConfigError);
    auto unknown = small_spec();
    unknown.linear.push_back("humidity");
    CHECK_THROWS_AS(gam::fit(frame, unknown), ConfigError);
    CHECK_NOTHROW(gam::ModelSpec::standard().validate());
    CHECK_THROWS(gam::load_model("not a model"));

    auto bad = frame;
    bad.y[5] = -1;
    CHECK_THROWS(gam::fit(bad, small_spec()));
}
