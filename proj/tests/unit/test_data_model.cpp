#include <doctest.h>

#include <cmath>

#include "core/data_model.hpp"
#include "core/error.hpp"
#include "core/text.hpp"

using namespace emsf;

namespace {

data::Region plain_region() {
    data::Region r;
    r.id = data::RegionId::Plain;
    r.provinces = {{"PV", 0.6}, {"CR", 0.4}};
    return r;
}

std::string weather_csv(const std::vector<std::string>& rows) {
    std::string s = "station,province,timestamp,temp_c,rain_mm,snow_mm\n";
    for (const auto& r : rows) s += r + "\n";
    return s;
}

}  // namespace

TEST_CASE("events are zero filled, summed and sorted") {
    const std::string csv =
        "region,timestamp,count\n"
        "Plain,2020-01-01T03,5\n"
        "Plain,2020-01-01T00,2\n"
        "Alps,2020-01-01T01,9\n"
        "Plain,2020-01-01T03,1\n";
    const auto e = data::ingest_events(csv, data::RegionId::Plain);
    CHECK(e.start == cal::parse_hour("2020-01-01T00"));
    REQUIRE(e.counts.size() == 4);
    CHECK(e.counts == std::vector<std::int64_t>{2, 0, 0, 6});
    // The gap-free law.
    CHECK(static_cast<std::int64_t>(e.counts.size()) == e.end() - e.start + 1);
    CHECK_THROWS_AS(data::ingest_events(csv), ParseError);
}

TEST_CASE("event parse errors carry the line") {
    const std::string csv = "region,timestamp,count\nPlain,2020-01-01T00,2\nPlain,2020-01-01T01,-1\n";
    try {
        data::ingest_events(csv, data::RegionId::Plain, "ev.csv");
        FAIL("expected an error");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("ev.csv:3") != std::string::npos);
    } catch (const ValidationError& e) {
        CHECK(std::string(e.what()).find("3") != std::string::npos);
    }
    CHECK_THROWS(data::ingest_events("region,time,count\n", data::RegionId::Plain));
}

TEST_CASE("daily totals cover complete days only") {
    data::EventSeries e;
    e.start = cal::first_hour(100) + 5;
    e.counts.assign(24 * 3, 1);
    const auto d = data::daily_totals(e);
    CHECK(d.start == 101);
    REQUIRE(d.totals.size() == 2);
    CHECK(d.totals[0] == 24.0);
}

TEST_CASE("region weights parse and validate") {
    const std::string ok = "[Plain]\nprovince,weight\nPV,0.6\nCR,0.4\n[Alps]\nprovince,weight\nSO,1\n";
    const auto t = data::parse_region_weights(ok);
    CHECK(t.find(data::RegionId::Plain).weight_of("PV") == 0.6);
    CHECK(t.find(data::RegionId::Plain).weight_of("SO") == 0.0);
    CHECK(data::parse_region_weights(data::format_region_weights(t)).regions.size() == 2);
    CHECK_THROWS(data::parse_region_weights("[Plain]\nprovince,weight\nPV,0.6\n"));
    CHECK_THROWS(data::parse_region_weights("[Plain]\nprovince,weight\nPV,1\n[Alps]\nprovince,weight\nPV,1\n"));
}

TEST_CASE("short temperature gaps are interpolated, long ones flag the day") {
    std::vector<std::string> rows;
    for (int h = 0; h < 48; ++h) {
        const std::string ts = cal::format_hour(cal::first_hour(cal::day_from_civil(2020, 1, 1)) + h);
        const bool short_gap = h >= 5 && h <= 7;
        const bool long_gap = h >= 30 && h <= 38;
        const std::string temp = short_gap || long_gap ? "" : text::format_double(static_cast<double>(h));
        rows.push_back("S1,PV," + ts + "," + temp + ",0,0");
    }
    const auto st = data::ingest_weather(weather_csv(rows));
    REQUIRE(st.size() == 1);
    CHECK(st[0].temp_missing[6] == 1);
    data::Region r;
    r.provinces = {{"PV", 1.0}};
    const auto daily = data::aggregate_weather(st, r);
    REQUIRE(daily.size() == 2);
    // The interpolated day is the mean of 0..23.
    CHECK(daily.at(daily.start).value() == doctest::Approx(11.5).epsilon(1e-12));
    CHECK_FALSE(daily.at(daily.start + 1).has_value());
}

TEST_CASE("aggregation is invariant to splitting a station") {
    data::WeatherSeries a;
    a.station_id = "A";
    a.province = "PV";
    a.start = cal::first_hour(500);
    data::WeatherSeries b = a;
    b.station_id = "B";
    b.province = "CR";
    for (int h = 0; h < 48; ++h) {
        a.temp_c.push_back(10.0 + std::sin(h));
        b.temp_c.push_back(5.0 + std::cos(h));
    }
    for (auto* s : {&a, &b}) {
        s->rain_mm.assign(48, 0.0);
        s->snow_mm.assign(48, 0.0);
        s->temp_missing.assign(48, 0);
        s->rain_missing.assign(48, 0);
        s->snow_missing.assign(48, 0);
    }
    b.temp_missing[3] = 1;
    const auto one = data::aggregate_weighted({{&a, 0.7}, {&b, 0.3}});
    const auto split = data::aggregate_weighted({{&a, 0.25}, {&a, 0.45}, {&b, 0.3}});
    REQUIRE(one.size() == split.size());
    for (std::size_t i = 0; i < one.size(); ++i) CHECK(one.values[i] == doctest::Approx(split.values[i]).epsilon(1e-14));
}

TEST_CASE("region aggregation uses province shares split across stations") {
    const auto d0 = cal::first_hour(cal::day_from_civil(2020, 1, 1));
    std::vector<std::string> rows;
    for (int h = 0; h < 24; ++h) {
        const auto ts = cal::format_hour(d0 + h);
        rows.push_back("P1,PV," + ts + ",10,0,0");
        rows.push_back("P2,PV," + ts + ",20,0,0");
        rows.push_back("C1,CR," + ts + ",0,,");
    }
    const auto d = data::aggregate_weather(data::ingest_weather(weather_csv(rows)), plain_region());
    // 0.3 * 10 + 0.3 * 20 + 0.4 * 0
    CHECK(d.values[0] == doctest::Approx(9.0).epsilon(1e-12));
}

TEST_CASE("flu interpolation passes through weekly midpoints") {
    std::string csv = "year,week,incidence\n";
    const std::vector<std::pair<int, int>> weeks{{2019, 50}, {2019, 51}, {2019, 52}, {2020, 1}, {2020, 2}, {2020, 3}};
    const std::vector<double> inc{0.5, 1.25, 3.0, 4.5, 2.0, 1.0};
    for (std::size_t i = 0; i < weeks.size(); ++i) {
        csv += std::to_string(weeks[i].first) + "," + std::to_string(weeks[i].second) + "," +
               text::format_double(inc[i]) + "\n";
    }
    const auto flu = data::ingest_flu(csv);
    const auto d = data::interpolate_flu(flu);
    for (std::size_t i = 0; i < weeks.size(); ++i) {
        CHECK(d.at(data::iso_week_midpoint(weeks[i].first, weeks[i].second)).value() == inc[i]);
    }
    const auto mid = data::iso_week_midpoint(2019, 50);
    CHECK(d.at(mid + 1).value() == doctest::Approx(0.5 + 0.75 / 7.0).epsilon(1e-12));
    CHECK(d.at(mid - 2).value() == 0.5);
    CHECK_THROWS(data::ingest_flu("year,week,incidence\n2019,50,1\n2019,52,1\n"));
}

TEST_CASE("covid cumulative totals") {
    const std::string csv =
        "date,province,total_positive\n"
        "2020-03-01,PV,1\n2020-03-01,CR,2\n2020-03-02,PV,4\n2020-03-02,CR,2\n";
    const auto c = data::ingest_covid(csv);
    CHECK(c.days() == 2);
    CHECK(c.regional_totals() == std::vector<std::int64_t>{3, 6});
    CHECK_THROWS(data::ingest_covid("date,province,total_positive\n2020-03-01,PV,-1\n"));
    CHECK_THROWS(data::ingest_covid("date,province,total_positive\n2020-03-01,PV,1\n2020-03-02,CR,1\n"));
}

TEST_CASE("alignment finds the common span") {
    data::EventSeries e;
    e.start = cal::first_hour(10);
    e.counts.assign(24 * 10, 1);
    data::DailySeries t;
    t.start = 12;
    t.values.assign(20, 1.0);
    t.missing.assign(20, 0);
    t.missing[3] = 1;
    const auto a = data::validate_alignment({data::coverage_of(e), data::coverage_of(t, "temperature")});
    CHECK(a.common.first == cal::first_hour(12));
    CHECK(a.common.last == e.end());
    CHECK_FALSE(data::format_alignment(a).empty());
    data::DailySeries late;
    late.start = 100;
    late.values.assign(3, 1.0);
    late.missing.assign(3, 0);
    CHECK_THROWS_AS(data::validate_alignment({data::coverage_of(e), data::coverage_of(late, "t")}), ValidationError);
}
