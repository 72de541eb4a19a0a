#include "core/synth.hpp"

#include <cmath>
#include <filesystem>
#include <limits>
#include <numbers>

#include "core/error.hpp"
#include "core/text.hpp"

namespace emsf::synth {

using cal::DayStamp;
using cal::HourStamp;
using features::Column;

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

// Stream constants keep the four simulated components independent.
constexpr std::uint64_t kWeatherStream = 0x57454154ULL;
constexpr std::uint64_t kEpidemicStream = 0x45504944ULL;
constexpr std::uint64_t kFluStream = 0x464c5553ULL;
constexpr std::uint64_t kCountStream = 0x434f554eULL;

Rng stream(std::uint64_t seed, std::uint64_t k) { return Rng(seed ^ (k * 0x9E3779B97F4A7C15ULL)); }

// Two-decimal values, exactly as they read back from the CSV files.
double csv_round(double v) { return text::parse_double(text::format_fixed(v, 2)); }

double at(const std::array<double, features::kColumnCount>& row, Column c) {
    return row[static_cast<std::size_t>(c)];
}

}  // namespace

GroundTruth GroundTruth::constant(double intercept, double theta) {
    GroundTruth t;
    t.intercept = intercept;
    t.hour_amplitude = 0.0;
    t.day_effects.fill(0.0);
    t.quarter_effects.fill(0.0);
    t.interaction = 0.0;
    t.temperature = t.lag1 = t.lag2 = t.lag3 = 0.0;
    t.lagday1 = t.lagday2 = t.lagday7 = 0.0;
    t.rt = t.flu = 0.0;
    t.theta = theta;
    return t;
}

double GroundTruth::hour_effect(double h) const { return hour_amplitude * std::sin(kTwoPi * (h - 7.5) / 24.0); }

double GroundTruth::day_effect(int day) const {
    if (day < 1 || day > 7) throw ConfigError("day must be in 1..7");
    return day_effects[static_cast<std::size_t>(day - 1)];
}

double GroundTruth::quarter_effect(int quarter) const {
    if (quarter < 1 || quarter > 4) throw ConfigError("quarter must be in 1..4");
    return quarter_effects[static_cast<std::size_t>(quarter - 1)];
}

double GroundTruth::interaction_effect(int day, double h) const {
    // Weekday weights 0.4 and weekend -1 average to zero over the week.
    const double c = day <= 5 ? 0.4 : -1.0;
    return interaction * c * std::sin(kTwoPi * (h - 7.5) / 24.0);
}

double GroundTruth::eta(const std::array<double, features::kColumnCount>& row) const {
    const double h = at(row, Column::hour);
    const int d = static_cast<int>(at(row, Column::day));
    const int q = static_cast<int>(at(row, Column::quarter));
    return intercept + hour_effect(h) + day_effect(d) + quarter_effect(q) + interaction_effect(d, h) +
           temperature * at(row, Column::temperature) + lag1 * at(row, Column::events_lag1) +
           lag2 * at(row, Column::events_lag2) + lag3 * at(row, Column::events_lag3) +
           lagday1 * at(row, Column::events_lagday1) + lagday2 * at(row, Column::events_lagday2) +
           lagday7 * at(row, Column::events_lagday7) + rt * at(row, Column::rt) + flu * at(row, Column::flu);
}

data::RegionTable default_regions() {
    using data::RegionId;
    data::RegionTable t;
    t.regions.push_back({RegionId::Plain, {{"CR", 0.3}, {"MN", 0.3}, {"PV", 0.4}}});
    t.regions.push_back({RegionId::Metropolitan, {{"MI", 0.6}, {"MB", 0.25}, {"LO", 0.15}}});
    t.regions.push_back({RegionId::Lakes, {{"CO", 0.35}, {"LC", 0.2}, {"VA", 0.45}}});
    t.regions.push_back({RegionId::Alps, {{"BG", 0.45}, {"BS", 0.45}, {"SO", 0.1}}});
    for (const auto& r : t.regions) data::validate_region(r);
    return t;
}

namespace {

// Renewal simulation split over sub-populations with the given shares; each
// share draws Poisson(share * expected incidence).
std::vector<std::vector<double>> renewal(std::span<const double> r_by_day, const features::SerialInterval& si,
                                         double imports, int import_days, double background,
                                         std::span<const double> shares, Rng& rng) {
    const std::size_t n = r_by_day.size();
    std::vector<std::vector<double>> parts(shares.size(), std::vector<double>(n, 0.0));
    std::vector<double> total(n, 0.0);
    const auto& w = si.weights;
    for (std::size_t d = 0; d < n; ++d) {
        double lambda = 0.0;
        for (std::size_t s = 1; s <= w.size() && s <= d; ++s) lambda += w[s - 1] * total[d - s];
        double expected = r_by_day[d] * lambda + background;
        if (static_cast<int>(d) < import_days) expected += imports;
        if (!(expected < 1e8)) throw NumericError("epidemic simulation diverged");
        for (std::size_t p = 0; p < shares.size(); ++p) {
            const auto v = static_cast<double>(rng.poisson(shares[p] * expected));
            parts[p][d] = v;
            total[d] += v;
        }
    }
    return parts;
}

std::vector<data::WeatherSeries> simulate_weather(const data::Region& region, const Environment& env, DayStamp start,
                                                  int days, Rng& rng) {
    const HourStamp h0 = cal::first_hour(start);
    const auto n = static_cast<std::size_t>(days) * 24;
    // Regional daily anomaly shared by all stations.
    std::vector<double> anomaly(static_cast<std::size_t>(days));
    double a = 0.0;
    const double innovation = env.temp_noise * std::sqrt(1.0 - 0.49);
    for (auto& v : anomaly) {
        a = 0.7 * a + innovation * rng.normal();
        v = a;
    }
    std::vector<data::WeatherSeries> out;
    for (const auto& p : region.provinces) {
        for (int s = 1; s <= env.stations_per_province; ++s) {
            data::WeatherSeries ws;
            ws.station_id = p.province + (s < 10 ? "0" : "") + std::to_string(s);
            ws.province = p.province;
            ws.start = h0;
            ws.temp_c.assign(n, 0.0);
            ws.rain_mm.assign(n, 0.0);
            ws.snow_mm.assign(n, 0.0);
            ws.temp_missing.assign(n, 0);
            ws.rain_missing.assign(n, 0);
            ws.snow_missing.assign(n, 0);
            const double offset = rng.normal(0.0, 1.0);
            std::size_t skip = 0;
            for (std::size_t i = 0; i < n; ++i) {
                const HourStamp t = h0 + static_cast<HourStamp>(i);
                const DayStamp d = cal::day_of(t);
                const auto civil = cal::civil_from_day(d);
                const double doy = static_cast<double>(d - cal::day_from_civil(civil.year, 1, 1));
                const double seasonal = env.temp_mean - env.temp_amplitude * std::cos(kTwoPi * (doy - 15.0) / 365.25);
                const double diurnal = env.temp_diurnal * std::sin(kTwoPi * (cal::hour_of(t) - 9.0) / 24.0);
                const double temp = seasonal + diurnal + anomaly[static_cast<std::size_t>(d - start)] + offset +
                                    0.5 * rng.normal();
                double rain = 0.0, snow = 0.0;
                if (rng.uniform() < 0.05) {
                    const double amount = -2.0 * std::log(rng.uniform_open());
                    if (temp < 0.5) snow = amount; else rain = amount;
                }
                ws.temp_c[i] = csv_round(temp);
                ws.rain_mm[i] = csv_round(rain);
                ws.snow_mm[i] = csv_round(snow);
                if (skip == 0 && rng.uniform() < env.weather_missing_rate) {
                    skip = 1 + static_cast<std::size_t>(rng.uniform() * 4.0);
                }
                if (skip > 0) {
                    ws.temp_missing[i] = ws.rain_missing[i] = ws.snow_missing[i] = 1;
                    ws.temp_c[i] = ws.rain_mm[i] = ws.snow_mm[i] = 0.0;
                    --skip;
                }
            }
            out.push_back(std::move(ws));
        }
    }
    return out;
}

data::CovidSeries simulate_covid(const data::RegionTable& regions, const Environment& env, DayStamp start, int days,
                                 Rng& rng) {
    data::CovidSeries covid;
    const int n = days - env.epidemic_offset;
    if (n <= 0) return covid;
    covid.start = start + env.epidemic_offset;
    std::vector<double> shares;
    for (const auto& r : regions.regions) {
        for (const auto& p : r.provinces) {
            covid.provinces.push_back(p.province);
            shares.push_back(p.weight / static_cast<double>(regions.regions.size()));
        }
    }
    std::vector<double> r_by_day;
    for (const auto& ph : env.phases) {
        for (int k = 0; k < ph.days && static_cast<int>(r_by_day.size()) < n; ++k) r_by_day.push_back(ph.r);
    }
    const double last = env.phases.empty() ? 1.0 : env.phases.back().r;
    while (static_cast<int>(r_by_day.size()) < n) r_by_day.push_back(last);
    const auto parts = renewal(r_by_day, features::discretized_gamma(6.6, 4.9), env.imports, env.import_days,
                               env.background_imports, shares, rng);
    for (const auto& inc : parts) {
        std::vector<std::int64_t> cum(inc.size());
        std::int64_t c = 0;
        for (std::size_t d = 0; d < inc.size(); ++d) {
            c += static_cast<std::int64_t>(inc[d]);
            cum[d] = c;
        }
        covid.total_positive.push_back(std::move(cum));
    }
    return covid;
}

data::FluSeries simulate_flu(const Environment& env, DayStamp start, int days, Rng& rng) {
    data::FluSeries flu;
    const int y0 = cal::civil_from_day(start).year - 1;
    const int y1 = cal::civil_from_day(start + days - 1).year;
    for (int y = y0; y <= y1; ++y) {
        const double peak = env.flu_peak * (0.7 + 0.6 * rng.uniform());
        const double centre = 14.0 + 4.0 * (rng.uniform() - 0.5);
        std::vector<std::pair<int, int>> weeks;
        for (int w = 42; w <= cal::iso_weeks_in_year(y); ++w) weeks.emplace_back(y, w);
        for (int w = 1; w <= 17; ++w) weeks.emplace_back(y + 1, w);
        const DayStamp first = cal::iso_week_monday(weeks.front().first, weeks.front().second);
        const DayStamp last = cal::iso_week_monday(weeks.back().first, weeks.back().second) + 6;
        if (last < start - 7 || first > start + days + 7) continue;
        for (std::size_t k = 0; k < weeks.size(); ++k) {
            const double z = (static_cast<double>(k) - centre) / 3.5;
            const double v = 0.5 + peak * std::exp(-0.5 * z * z);
            flu.weeks.push_back({weeks[k].first, weeks[k].second, csv_round(v)});
        }
    }
    return flu;
}

}  // namespace

std::vector<double> simulate_renewal(std::span<const double> r_by_day, const features::SerialInterval& si,
                                     double imports, int import_days, double background, Rng& rng) {
    const double one = 1.0;
    return renewal(r_by_day, si, imports, import_days, background, std::span<const double>(&one, 1), rng).front();
}

SynthDataset generate(const SynthConfig& cfg) {
    if (cfg.days < 30) throw ConfigError("synthetic series needs at least 30 days");
    if (!(cfg.truth.theta > 0.0)) throw ConfigError("truth theta must be positive");
    SynthDataset out;
    out.regions = default_regions();
    const auto& region = out.regions.find(cfg.env.region);

    Rng weather_rng = stream(cfg.seed, kWeatherStream);
    Rng epidemic_rng = stream(cfg.seed, kEpidemicStream);
    Rng flu_rng = stream(cfg.seed, kFluStream);
    Rng count_rng = stream(cfg.seed, kCountStream);

    out.weather = simulate_weather(region, cfg.env, cfg.start, cfg.days, weather_rng);
    out.covid = simulate_covid(out.regions, cfg.env, cfg.start, cfg.days, epidemic_rng);
    out.flu = simulate_flu(cfg.env, cfg.start, cfg.days, flu_rng);

    // Covariates through the production pipeline.
    const data::DailySeries temp = data::aggregate_weather(out.weather, region);
    features::RtSeries rt;
    const bool have_covid = out.covid.days() > 0;
    if (have_covid) rt = features::compute_rt(out.covid);
    const data::DailySeries flu = out.flu.weeks.size() >= 2 ? data::interpolate_flu(out.flu) : data::DailySeries{};

    const auto& truth = cfg.truth;
    const HourStamp h0 = cal::first_hour(cfg.start);
    const auto n = static_cast<std::size_t>(cfg.days) * 24;
    out.events.region = cfg.env.region;
    out.events.start = h0;
    out.events.counts.assign(n, 0);
    out.eta.assign(n, std::numeric_limits<double>::quiet_NaN());

    std::vector<double> day_total(static_cast<std::size_t>(cfg.days), 0.0);
    // Warm-up lags before any count exists use the baseline level.
    const double base = std::exp(truth.intercept);
    double last_temp = temp.at(cfg.start).value_or(cfg.env.temp_mean);
    for (std::size_t i = 0; i < n; ++i) {
        const HourStamp t = h0 + static_cast<HourStamp>(i);
        const DayStamp d = cal::day_of(t);
        const auto di = static_cast<std::size_t>(d - cfg.start);
        const auto c = features::calendar_of(t);
        auto hourly = [&](std::size_t back) { return i >= back ? static_cast<double>(out.events.counts[i - back]) : base; };
        auto daily = [&](std::size_t back) { return di >= back ? day_total[di - back] : 24.0 * base; };
        if (const auto v = temp.at(d)) last_temp = *v;
        double rtv = 0.0;
        if (have_covid) rtv = rt.at(d - 1).value_or(0.0);
        const double fluv = flu.size() > 0 ? flu.at(d - 1).value_or(0.0) : 0.0;
        const std::array<double, features::kColumnCount> row{
            static_cast<double>(c.hour), static_cast<double>(c.day), static_cast<double>(c.quarter),
            last_temp,                   hourly(24),                 hourly(25),
            hourly(26),                  daily(1),                   daily(2),
            daily(7),                    rtv,                        fluv,
        };
        const double eta = truth.eta(row);
        const double mu = std::exp(eta);
        if (!(mu <= 1e6)) {
            throw NumericError("synthetic mean " + text::format_double(mu) + " exceeds 1e6 at " + cal::format_hour(t));
        }
        const auto y = static_cast<std::int64_t>(count_rng.negative_binomial(mu, truth.theta));
        out.events.counts[i] = y;
        day_total[di] += static_cast<double>(y);
        if (di >= 7) out.eta[i] = eta;
    }
    return out;
}

void write_dataset(const SynthDataset& data, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
    const std::filesystem::path p(dir);
    text::write_file((p / "events.csv").string(), data::format_events(data.events));
    text::write_file((p / "weather.csv").string(), data::format_weather(data.weather));
    text::write_file((p / "covid.csv").string(), data::format_covid(data.covid));
    text::write_file((p / "flu.csv").string(), data::format_flu(data.flu));
    text::write_file((p / "regions.txt").string(), data::format_region_weights(data.regions));
}

std::string format_truth(const GroundTruth& t) {
    std::string out;
    auto put = [&](const std::string& k, double v) { out += k + "=" + text::format_double(v) + "\n"; };
    put("intercept", t.intercept);
    put("hour_amplitude", t.hour_amplitude);
    for (int d = 1; d <= 7; ++d) put("day" + std::to_string(d), t.day_effects[static_cast<std::size_t>(d - 1)]);
    for (int q = 1; q <= 4; ++q) put("quarter" + std::to_string(q), t.quarter_effects[static_cast<std::size_t>(q - 1)]);
    put("interaction", t.interaction);
    put("temperature", t.temperature);
    put("events_lag1", t.lag1);
    put("events_lag2", t.lag2);
    put("events_lag3", t.lag3);
    put("events_lagday1", t.lagday1);
    put("events_lagday2", t.lagday2);
    put("events_lagday7", t.lagday7);
    put("rt", t.rt);
    put("flu", t.flu);
    put("theta", t.theta);
    return out;
}

}  // namespace emsf::synth
