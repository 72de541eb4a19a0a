#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "core/data_model.hpp"
#include "core/features.hpp"
#include "core/rng.hpp"
#include "core/synth.hpp"

using namespace emsf;

namespace {

data::EventSeries random_events(cal::DayStamp day0, int days, std::uint64_t seed) {
    Rng rng(seed);
    data::EventSeries e;
    e.start = cal::first_hour(day0);
    for (int i = 0; i < days * 24; ++i) e.counts.push_back(static_cast<std::int64_t>(rng.poisson(8.0)));
    return e;
}

data::DailySeries flat_temperature(cal::DayStamp day0, int days) {
    data::DailySeries t;
    t.start = day0;
    for (int d = 0; d < days; ++d) t.values.push_back(10.0 + 0.1 * d);
    t.missing.assign(t.values.size(), 0);
    return t;
}

}  // namespace

TEST_CASE("calendar features") {
    const auto h = cal::parse_hour("2020-05-09T13");
    const auto c = features::calendar_of(h);
    CHECK(c.hour == 13);
    CHECK(c.day == 6);
    CHECK(c.quarter == 2);
}

TEST_CASE("lag columns read the right hours and days") {
    const auto day0 = cal::day_from_civil(2020, 1, 6);
    const auto e = random_events(day0, 20, 3);
    const auto lags = features::event_lags(e);
    REQUIRE(lags.size() > 0);
    CHECK(lags.first == cal::first_hour(day0 + 7));
    CHECK(lags.excluded == 7 * 24);
    auto y = [&](cal::HourStamp t) { return static_cast<double>(e.counts[static_cast<std::size_t>(t - e.start)]); };
    auto total = [&](cal::DayStamp d) {
        double s = 0;
        for (int h = 0; h < 24; ++h) s += y(cal::first_hour(d) + h);
        return s;
    };
    for (std::size_t i = 0; i < lags.size(); i += 13) {
        const auto t = lags.first + static_cast<cal::HourStamp>(i);
        CHECK(lags.lag1[i] == y(t - 24));
        CHECK(lags.lag2[i] == y(t - 25));
        CHECK(lags.lag3[i] == y(t - 26));
        CHECK(lags.lagday1[i] == total(cal::day_of(t) - 1));
        CHECK(lags.lagday2[i] == total(cal::day_of(t) - 2));
        CHECK(lags.lagday7[i] == total(cal::day_of(t) - 7));
    }
}

TEST_CASE("discretized gamma is a distribution with the right mean") {
    const auto si = features::discretized_gamma(6.6, 4.9);
    CHECK(si.weights.size() == 30);
    const double sum = std::accumulate(si.weights.begin(), si.weights.end(), 0.0);
    CHECK(std::fabs(sum - 1.0) < 1e-12);
    double mean = 0;
    for (std::size_t s = 0; s < si.weights.size(); ++s) {
        CHECK(si.weights[s] >= 0.0);
        mean += static_cast<double>(s + 1) * si.weights[s];
    }
    CHECK(std::fabs(mean - 6.6) < 0.3);
    CHECK(features::point_mass(4).weights == std::vector<double>{0, 0, 0, 1});
}

TEST_CASE("incidence from cumulative totals clamps corrections") {
    const std::vector<std::int64_t> tot{3, 5, 4, 10};
    CHECK(features::incidence_from_cumulative(tot) == std::vector<double>{3, 2, 0, 6});
}

TEST_CASE("constant incidence has Rt 1") {
    const std::vector<double> inc(120, 40.0);
    const auto rt = features::compute_rt(inc, 0);
    for (std::size_t d = 40; d < inc.size(); ++d) {
        REQUIRE(rt.defined[d]);
        CHECK(std::fabs(rt.rt[d] - 1.0) < 0.01);
    }
    CHECK_FALSE(rt.defined[0]);
}

TEST_CASE("Rt is invariant to scaling incidence") {
    Rng rng(5);
    std::vector<double> inc;
    for (int d = 0; d < 150; ++d) inc.push_back(50.0 + 30.0 * std::sin(d / 9.0) + static_cast<double>(rng.poisson(10)));
    std::vector<double> scaled = inc;
    for (auto& v : scaled) v *= 7.25;
    const auto a = features::compute_rt(inc, 0);
    const auto b = features::compute_rt(scaled, 0);
    for (std::size_t d = 0; d < inc.size(); ++d) {
        CHECK(a.defined[d] == b.defined[d]);
        if (a.defined[d]) CHECK(a.rt[d] == doctest::Approx(b.rt[d]).epsilon(1e-12));
    }
}

TEST_CASE("renewal process R is recovered") {
    const auto si = features::discretized_gamma(6.6, 4.9);
    const std::vector<double> r(140, 1.3);
    Rng rng(2024);
    const auto inc = synth::simulate_renewal(r, si, 20.0, 14, 0.0, rng);
    const auto rt = features::compute_rt(inc, 0, {si, 7, 12.0});
    double s = 0;
    int n = 0;
    for (std::size_t d = 60; d < 140; ++d) {
        REQUIRE(rt.defined[d]);
        s += rt.rt[d];
        ++n;
    }
    CHECK(std::fabs(s / n - 1.3) < 0.05);
}

TEST_CASE("frame assembly does not depend on input row order") {
    const auto day0 = cal::day_from_civil(2020, 2, 3);
    const auto e = random_events(day0, 15, 9);
    std::vector<std::string> lines;
    for (std::size_t i = 0; i < e.counts.size(); ++i) {
        lines.push_back("Plain," + cal::format_hour(e.start + static_cast<cal::HourStamp>(i)) + "," +
                        std::to_string(e.counts[i]));
    }
    std::mt19937 shuffle_rng(1);
    std::shuffle(lines.begin(), lines.end(), shuffle_rng);
    std::string csv = "region,timestamp,count\n";
    for (const auto& l : lines) csv += l + "\n";
    const auto shuffled = data::ingest_events(csv, data::RegionId::Plain);
    REQUIRE(shuffled.counts == e.counts);

    const auto temp = flat_temperature(day0, 15);
    const auto a = features::assemble_frame({&e, &temp, nullptr, nullptr});
    const auto b = features::assemble_frame({&shuffled, &temp, nullptr, nullptr});
    CHECK(a.frame.size() == 8 * 24);
    CHECK(features::format_frame(a.frame) == features::format_frame(b.frame));
    CHECK(a.dropped_history == 7 * 24);
    for (std::size_t i = 0; i < a.frame.size(); ++i) {
        CHECK(a.frame[features::Column::rt][i] == 0.0);
        CHECK(a.frame[features::Column::temperature][i] == temp.at(cal::day_of(a.frame.timestamps[i])).value());
    }
    const auto cut = features::assemble_frame({&e, &temp, nullptr, nullptr}, day0 + 9);
    CHECK(cut.frame.size() == 3 * 24);
}

TEST_CASE("rt and flu come from the previous day") {
    const auto day0 = cal::day_from_civil(2020, 2, 3);
    const auto e = random_events(day0, 12, 4);
    const auto temp = flat_temperature(day0, 12);
    features::RtSeries rt;
    rt.start = day0 + 8;
    rt.rt = {1.5, 0.5, 1.1, 1.2};
    rt.defined = {1, 1, 1, 1};
    rt.credible = {1, 1, 1, 1};
    data::DailySeries flu = flat_temperature(day0 + 9, 2);
    const auto r = features::assemble_frame({&e, &temp, &rt, &flu});
    for (std::size_t i = 0; i < r.frame.size(); ++i) {
        const auto d = cal::day_of(r.frame.timestamps[i]);
        const double expected_rt = d - 1 < rt.start ? 0.0 : rt.at(d - 1).value();
        CHECK(r.frame[features::Column::rt][i] == expected_rt);
        const auto f = flu.at(d - 1);
        CHECK(r.frame[features::Column::flu][i] == (f ? *f : 0.0));
    }
}
