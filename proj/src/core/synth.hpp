#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "core/data_model.hpp"
#include "core/features.hpp"
#include "core/rng.hpp"

namespace emsf::synth {

// The data-generating NB-GAM. Effects are on the log scale and centered:
// hour(h) = hour_amplitude * sin(2 pi (h - 7.5) / 24) is negative at night
// and positive through the working day.
struct GroundTruth {
    double intercept = 2.1;
    double hour_amplitude = 0.5;
    std::array<double, 7> day_effects{0.10, 0.03, 0.01, 0.0, 0.02, -0.06, -0.10};
    std::array<double, 4> quarter_effects{0.03, 0.0, -0.06, 0.03};
    // Weekday/weekend modulation of the hour profile.
    double interaction = 0.08;
    double temperature = -0.004;
    double lag1 = 0.003, lag2 = 0.001, lag3 = 0.001;
    double lagday1 = 0.0002, lagday2 = 0.0001, lagday7 = 0.0001;
    double rt = 0.1;
    double flu = 0.02;
    double theta = 10.0;

    static GroundTruth standard() { return {}; }
    // Every effect zero: i.i.d. NB(exp(intercept), theta) counts.
    static GroundTruth constant(double intercept, double theta);

    double hour_effect(double h) const;
    // day 1 = Monday.
    double day_effect(int day) const;
    double quarter_effect(int quarter) const;
    double interaction_effect(int day, double h) const;
    // Linear predictor for one frame row (columns in features::Column order).
    double eta(const std::array<double, features::kColumnCount>& row) const;
};

struct EpidemicPhase {
    int days = 0;
    double r = 1.0;
};

struct Environment {
    data::RegionId region = data::RegionId::Plain;
    int stations_per_province = 2;
    double temp_mean = 13.0;
    double temp_amplitude = 10.0;
    double temp_diurnal = 4.0;
    double temp_noise = 2.0;
    // Probability that a station hour is missing (short runs only).
    double weather_missing_rate = 0.002;
    // Day offset from the series start of the first epidemic record.
    int epidemic_offset = 200;
    double imports = 8.0;
    int import_days = 21;
    double background_imports = 2.0;
    std::vector<EpidemicPhase> phases{{40, 1.6}, {60, 0.85}, {70, 1.15}, {60, 0.9}, {80, 1.1}, {60, 0.9}};
    double flu_peak = 10.0;
};

struct SynthConfig {
    GroundTruth truth;
    Environment env;
    cal::DayStamp start = cal::day_from_civil(2019, 5, 9);
    int days = 745;
    std::uint64_t seed = 1;
};

struct SynthDataset {
    data::RegionTable regions;
    data::EventSeries events;
    std::vector<data::WeatherSeries> weather;
    data::CovidSeries covid;
    data::FluSeries flu;
    // Truth linear predictor per hour of `events` (NaN during warm-up).
    std::vector<double> eta;
};

// Four synthetic regions over twelve provinces with unequal call shares.
data::RegionTable default_regions();

// Weather, epidemic and flu inputs are simulated first, turned into daily
// covariates by the production pipeline, and then counts are drawn hour by
// hour with the lag covariates taken from the counts already drawn.
SynthDataset generate(const SynthConfig& config);

// Poisson renewal process: E I_d = R_d sum_s w_s I_{d-s} + imports (for the
// first import_days days) + background.
std::vector<double> simulate_renewal(std::span<const double> r_by_day, const features::SerialInterval& si,
                                     double imports, int import_days, double background, Rng& rng);

// events.csv, weather.csv, covid.csv, flu.csv and regions.txt under `dir`.
void write_dataset(const SynthDataset& data, const std::string& dir);

// key=value description of the truth, for audit files.
std::string format_truth(const GroundTruth& truth);

}  // namespace emsf::synth
