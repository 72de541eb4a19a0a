#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "core/benchmarks.hpp"
#include "core/data_model.hpp"
#include "core/features.hpp"
#include "core/forecaster.hpp"
#include "core/gam.hpp"
#include "core/synth.hpp"

// Run configuration and the file-level pipeline steps shared by the C API.
namespace emsf::run {

enum class ValueType { String, Path, Int, Double, Bool, Day, IntList, NameList, Region };

struct KeySpec {
    std::string_view name;
    ValueType type;
    std::string_view default_value;  // empty means unset
    std::string_view help;
};

const std::vector<KeySpec>& config_keys();

// Flat key=value configuration. Unknown keys and malformed values are
// rejected when set; missing keys fall back to their defaults.
class RunConfig {
public:
    void set(std::string_view key, std::string_view value);
    // Lines of `key = value`; `#` starts a comment. Relative paths are taken
    // relative to base_dir.
    void merge_text(std::string_view content, const std::string& source, const std::string& base_dir = "");
    void merge_file(const std::string& path);

    // Explicit or default value; nullopt when neither exists.
    std::optional<std::string> get(std::string_view key) const;
    bool has(std::string_view key) const { return get(key).has_value(); }
    std::string require(std::string_view key) const;
    long long get_int(std::string_view key) const;
    double get_double(std::string_view key) const;
    bool get_bool(std::string_view key) const;

    // Every key in table order with its effective value; unset keys are
    // written with an empty value.
    std::string dump() const;
    std::uint64_t hash() const;

    gam::ModelSpec model_spec() const;
    gam::FitOptions fit_options() const;
    forecast::RollingPlan plan() const;
    synth::SynthConfig synth_config() const;

private:
    std::map<std::string, std::string, std::less<>> values_;
};

const KeySpec& find_key(std::string_view key);

struct Dataset {
    data::RegionId region = data::RegionId::Plain;
    data::EventSeries events;
    data::DailySeries temperature;
    std::optional<features::RtSeries> rt;
    std::optional<data::DailySeries> flu;
    data::AlignmentReport alignment;

    features::FrameInputs inputs() const;
};

Dataset load_dataset(const RunConfig& config);

// The training frame up to config `last_day` (all data when unset).
features::AssembleResult training_frame(const Dataset& data, const RunConfig& config);

gam::FittedModel fit_model(const Dataset& data, const RunConfig& config);

struct ForecastOutput {
    std::string hourly_csv;  // timestamp,mu
    std::string daily_csv;   // date,horizon_days,predicted
};

// Forecasts from `origin` (default: the last complete day of events).
ForecastOutput forecast_from(const gam::FittedModel& model, const Dataset& data, const RunConfig& config,
                             std::optional<cal::DayStamp> origin, int max_h);

// Grid CSV named by the term's covariates plus a mean-zero `effect` column.
// One-dimensional terms use `points` grid points; tensors use a square grid
// of points / 4 per axis.
std::string effects_csv(const gam::FittedModel& model, const std::string& term, int points = 200);
std::string effects_svg(const gam::FittedModel& model, const std::string& term, int points = 200);
// Smooth and linear term names in design order.
std::vector<std::string> effect_terms(const gam::FittedModel& model);

struct Evaluation {
    forecast::ForecastReport report;
    std::vector<bench::BenchmarkRow> benchmark;
    bool with_benchmark = false;
};

Evaluation evaluate(const Dataset& data, const RunConfig& config);

std::string format_skipped(const forecast::ForecastReport& report);

// Writes report.csv, mae.csv, errors.svg, skipped.csv and (when present)
// benchmark.csv. Returns the file names written.
std::vector<std::string> write_evaluation(const Evaluation& e, const std::string& dir);

// Writes the synthetic dataset, truth.txt and an emsf.cfg pointing at it.
std::vector<std::string> write_synth(const RunConfig& config, const std::string& dir);

// manifest.txt: command, versions, seed, config hash, the full effective
// configuration and a content hash per artifact.
void write_manifest(const std::string& dir, const std::string& command, const RunConfig& config,
                    const std::vector<std::string>& artifacts);

std::string join_path(const std::string& dir, const std::string& name);

}  // namespace emsf::run
