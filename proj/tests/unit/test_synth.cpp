#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "core/data_model.hpp"
#include "core/synth.hpp"
#include "core/text.hpp"

using namespace emsf;

namespace {

synth::SynthConfig cfg(std::uint64_t seed, int days) {
    synth::SynthConfig c;
    c.seed = seed;
    c.days = days;
    return c;
}

}  // namespace

TEST_CASE("generation is deterministic in the seed") {
    const auto a = synth::generate(cfg(3, 60));
    const auto b = synth::generate(cfg(3, 60));
    const auto c = synth::generate(cfg(4, 60));
    CHECK(a.events.counts == b.events.counts);
    CHECK(data::format_weather(a.weather) == data::format_weather(b.weather));
    CHECK(a.events.counts != c.events.counts);
    CHECK(a.events.counts.size() == 60 * 24);
    CHECK(a.eta.size() == a.events.counts.size());
}

TEST_CASE("truth effects are centered and shaped") {
    const auto t = synth::GroundTruth::standard();
    double s = 0;
    for (int h = 0; h < 24; ++h) s += t.hour_effect(h);
    CHECK(std::fabs(s) < 1e-12);
    CHECK(t.hour_effect(13.5) == doctest::Approx(t.hour_amplitude));
    CHECK(t.hour_effect(3) < 0);
    const auto k = synth::GroundTruth::constant(2.0, 7.0);
    CHECK(k.hour_effect(10) == 0.0);
    CHECK(k.day_effect(1) == 0.0);
    CHECK(k.theta == 7.0);
}

TEST_CASE("constant truth produces the intended mean and dispersion") {
    auto c = cfg(8, 200);
    c.truth = synth::GroundTruth::constant(std::log(5.0), 10.0);
    const auto d = synth::generate(c);
    double m = 0, v = 0;
    for (const auto y : d.events.counts) m += static_cast<double>(y);
    m /= static_cast<double>(d.events.counts.size());
    for (const auto y : d.events.counts) v += (static_cast<double>(y) - m) * (static_cast<double>(y) - m);
    v /= static_cast<double>(d.events.counts.size() - 1);
    CHECK(std::fabs(m - 5.0) < 0.15);
    CHECK(std::fabs(v - 7.5) < 0.6);
}

TEST_CASE("written files parse back to the same data") {
    const auto d = synth::generate(cfg(6, 400));
    const auto dir = std::filesystem::temp_directory_path() / "emsf_synth_roundtrip";
    std::filesystem::create_directories(dir);
    synth::write_dataset(d, dir.string());
    auto read = [&](const char* name) { return text::read_file((dir / name).string()); };

    const auto ev = data::ingest_events(read("events.csv"), d.events.region);
    CHECK(ev.start == d.events.start);
    CHECK(ev.counts == d.events.counts);
    CHECK(data::format_weather(data::ingest_weather(read("weather.csv"))) == data::format_weather(d.weather));
    // Provinces come back sorted, so compare canonical forms.
    CHECK(data::format_covid(data::ingest_covid(read("covid.csv"))) ==
          data::format_covid(data::ingest_covid(data::format_covid(d.covid))));
    CHECK(data::ingest_covid(read("covid.csv")).regional_totals() == d.covid.regional_totals());
    CHECK(data::format_flu(data::ingest_flu(read("flu.csv"))) == data::format_flu(d.flu));
    CHECK(data::format_region_weights(data::parse_region_weights(read("regions.txt"))) ==
          data::format_region_weights(d.regions));
    std::filesystem::remove_all(dir);
}

TEST_CASE("default regions are valid and disjoint") {
    const auto t = synth::default_regions();
    CHECK(t.regions.size() == 4);
    for (const auto& r : t.regions) CHECK_NOTHROW(data::validate_region(r));
}
