#include <doctest.h>

#include <cmath>
#include <numeric>

#include "../common/synth_inputs.hpp"
#include "core/error.hpp"
#include "core/forecaster.hpp"
#include "core/gam.hpp"
#include "core/rng.hpp"

using namespace emsf;
using features::Column;

namespace {

gam::ModelSpec short_spec() {
    gam::ModelSpec s;
    s.smooths.push_back({"hour", smooth::Kind::CRS, {"hour"}, {8}, {}, 2});
    s.smooths.push_back({"day", smooth::Kind::PSpline, {"day"}, {5}, {}, 2});
    s.linear = {"temperature", "events_lag1", "events_lagday1"};
    return s;
}

const run::Dataset& short_data() {
    static const run::Dataset d = toy::synth_dataset(21, 80);
    return d;
}

}  // namespace

TEST_CASE("relative MAE hand cases") {
    CHECK(forecast::compute_mae(std::vector<double>{110, 95}, std::vector<double>{100, 100}).mae_pct == 7.5);
    CHECK(std::fabs(forecast::compute_mae(std::vector<double>{104.53}, std::vector<double>{100}).mae_pct - 4.53) <
          1e-12);
    const auto z = forecast::compute_mae(std::vector<double>{5, 7, 9}, std::vector<double>{0, 7, 10});
    CHECK(z.n == 2);
    CHECK(z.excluded == 1);
    CHECK(z.mae_pct == doctest::Approx(5.0));
    CHECK_THROWS_AS(forecast::compute_mae(std::vector<double>{1, 2}, std::vector<double>{0, 0}), ValidationError);
    CHECK_THROWS(forecast::compute_mae(std::vector<double>{1, 2}, std::vector<double>{1}));
}

TEST_CASE("relative MAE matches brute force and is scale equivariant") {
    Rng rng(99);
    std::vector<double> p, o;
    for (int i = 0; i < 1000; ++i) {
        p.push_back(50 + 100 * rng.uniform());
        o.push_back(50 + 100 * rng.uniform());
    }
    double brute = 0;
    for (std::size_t i = 0; i < p.size(); ++i) brute += std::fabs(p[i] - o[i]) / o[i];
    brute = 100 * brute / static_cast<double>(p.size());
    const auto m = forecast::compute_mae(p, o);
    CHECK(std::fabs(m.mae_pct - brute) < 1e-12);
    CHECK(forecast::compute_mae(o, o).mae_pct == 0.0);

    auto ps = p, os = o;
    for (auto& v : ps) v *= 3.7;
    for (auto& v : os) v *= 3.7;
    CHECK(forecast::compute_mae(ps, os).mae_pct == doctest::Approx(m.mae_pct).epsilon(1e-12));
}

TEST_CASE("one day ahead rows use only observed values") {
    const auto& d = short_data();
    const auto inputs = d.inputs();
    const auto origin = d.events.start / 24 + 40;
    forecast::ExogenousOverride ov;
    ov.temperature[origin + 1] = d.temperature.at(origin + 1).value();
    const std::vector<double> junk(24, 1e6);
    const auto fut = forecast::future_rows(inputs, origin, 1, junk, &ov);
    const auto full = features::assemble_frame(inputs, origin + 1).frame;
    REQUIRE(fut.size() == 24);
    const std::size_t off = full.size() - 24;
    for (std::size_t i = 0; i < 24; ++i) {
        CHECK(fut.timestamps[i] == full.timestamps[off + i]);
        for (std::size_t c = 0; c < features::kColumnCount; ++c) CHECK(fut.columns[c][i] == full.columns[c][off + i]);
    }
}

TEST_CASE("later horizons feed predicted means into the lags") {
    const auto& d = short_data();
    const auto inputs = d.inputs();
    const auto origin = d.events.start / 24 + 40;
    std::vector<double> pred(48);
    for (std::size_t i = 0; i < pred.size(); ++i) pred[i] = 10.0 + 0.25 * static_cast<double>(i);
    const auto fut = forecast::future_rows(inputs, origin, 2, pred);
    REQUIRE(fut.size() == 48);
    const double day1 = std::accumulate(pred.begin(), pred.begin() + 24, 0.0);
    for (std::size_t i = 24; i < 48; ++i) {
        CHECK(fut[Column::events_lagday1][i] == doctest::Approx(day1).epsilon(1e-14));
        CHECK(fut[Column::events_lag1][i] == pred[i - 24]);
        CHECK(fut[Column::temperature][i] == d.temperature.at(origin).value());
    }
    // Rt and flu are held at their origin-day values.
    if (d.rt && d.rt->at(origin)) CHECK(fut[Column::rt][47] == *d.rt->at(origin));
    CHECK(fut[Column::rt][47] == fut[Column::rt][24]);
}

TEST_CASE("constant mean process forecasts its mean") {
    const double intercept = std::log(6.0), theta = 10.0;
    const auto d = toy::synth_dataset(5, 120, synth::GroundTruth::constant(intercept, theta));
    const auto inputs = d.inputs();
    const auto origin = d.events.end() / 24 - 8;
    const auto model = gam::fit(features::assemble_frame(inputs, origin).frame, short_spec());
    const auto mu = forecast::forecast_horizon(model, inputs, origin, 7);
    const double total = std::accumulate(mu.begin(), mu.end(), 0.0);
    const double truth = 24 * 6.0;
    // Standard error of one day's total.
    const double se = std::sqrt(24 * (6.0 + 36.0 / theta));
    CHECK(std::fabs(total - truth) < 3 * se);
    CHECK(forecast::forecast_path(model, inputs, origin, 7).size() == 7 * 24);
}

TEST_CASE("rolling evaluation plans, reports and is deterministic") {
    const auto& d = short_data();
    forecast::RollingPlan plan;
    plan.horizons = {1, 2};
    plan.min_history_days = 60;
    plan.refit_every = 5;
    const auto origins = forecast::plan_origins(d.events, plan);
    REQUIRE_FALSE(origins.empty());
    CHECK(origins.front() == d.events.start / 24 + 59);
    CHECK(origins.back() == d.events.end() / 24 - 2);

    const auto inputs = d.inputs();
    gam::FitOptions fo;
    const auto a = forecast::rolling_evaluate(inputs, short_spec(), plan, fo);
    CHECK(a.origins == origins);
    CHECK(a.rows.size() == (origins.size() - a.skipped.size()) * 2);
    CHECK(a.fits == (origins.size() + 4) / 5);
    const auto daily = data::daily_totals(d.events);
    for (const auto& r : a.rows) {
        CHECK(r.predicted > 0);
        CHECK(r.observed == daily.totals[static_cast<std::size_t>(r.origin + r.horizon - daily.start)]);
    }
    const auto b = forecast::rolling_evaluate(inputs, short_spec(), plan, fo);
    CHECK(forecast::format_report(a) == forecast::format_report(b));
    CHECK(forecast::format_mae(a) == forecast::format_mae(b));
    auto threaded = plan;
    threaded.threads = 3;
    const auto c = forecast::rolling_evaluate(inputs, short_spec(), threaded, fo);
    CHECK(forecast::format_report(a) == forecast::format_report(c));

    const auto header = forecast::format_report(a).substr(0, forecast::format_report(a).find('\n'));
    CHECK(header == "origin,horizon_days,predicted,observed,rel_error_pct");
    CHECK(forecast::errors_svg(a).find("<svg") != std::string::npos);

    plan.min_history_days = 400;
    CHECK_THROWS_AS(forecast::plan_origins(d.events, plan), ValidationError);
}

TEST_CASE("temperature overrides parse") {
    const auto ov = forecast::parse_temperature_override("date,temperature\n2020-01-02,4.5\n2020-01-03,-1\n");
    CHECK(ov.temperature.size() == 2);
    CHECK(ov.temperature.at(cal::parse_day("2020-01-03")) == -1.0);
    CHECK_THROWS(forecast::parse_temperature_override("day,temp\n"));
}
