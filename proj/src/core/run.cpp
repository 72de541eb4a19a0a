#include "core/run.hpp"

#include <Eigen/Core>
#include <boost/version.hpp>
#include <cmath>
#include <cstdio>
#include <filesystem>

#include "core/error.hpp"
#include "core/svg.hpp"
#include "core/text.hpp"

#ifndef EMSF_VERSION
#define EMSF_VERSION "0.0.0"
#endif

namespace emsf::run {

namespace fs = std::filesystem;

const std::vector<KeySpec>& config_keys() {
    static const std::vector<KeySpec> keys{
        {"events", ValueType::Path, "", "events.csv (region,timestamp,count)"},
        {"weather", ValueType::Path, "", "weather.csv (station,province,timestamp,temp_c,rain_mm,snow_mm)"},
        {"covid", ValueType::Path, "", "covid.csv (date,province,total_positive); unset means rt = 0"},
        {"flu", ValueType::Path, "", "flu.csv (year,week,incidence); unset means flu = 0"},
        {"regions", ValueType::Path, "", "region weights file ([Region] sections of province,weight)"},
        {"region", ValueType::Region, "Plain", "region to model: Plain, Metropolitan, Lakes or Alps"},
        {"last_day", ValueType::Day, "", "last day used for fitting (default: all data)"},
        {"hour_dim", ValueType::Int, "24", "hour smooth basis dimension (cubic regression spline)"},
        {"day_dim", ValueType::Int, "7", "day-of-week smooth basis dimension (P-spline)"},
        {"quarter_dim", ValueType::Int, "4", "quarter smooth basis dimension (cubic regression spline)"},
        {"tensor", ValueType::Bool, "true", "include the day x hour tensor interaction"},
        {"tensor_day_dim", ValueType::Int, "7", "tensor day margin dimension"},
        {"tensor_hour_dim", ValueType::Int, "10", "tensor hour margin dimension"},
        {"max_tensor_dim", ValueType::Int, "400", "upper bound on tensor basis size"},
        {"linear", ValueType::NameList,
         "temperature,events_lag1,events_lag2,events_lag3,events_lagday1,events_lagday2,events_lagday7,rt,flu",
         "linear covariates (comma separated)"},
        {"pirls_tol", ValueType::Double, "1e-8", "relative penalized deviance change for PIRLS convergence"},
        {"max_pirls_iter", ValueType::Int, "200", "PIRLS iteration limit"},
        {"max_outer", ValueType::Int, "20", "smoothing/dispersion outer rounds"},
        {"outer_tol", ValueType::Double, "1e-3", "outer loop tolerance in log space"},
        {"theta", ValueType::Double, "", "fix the NB dispersion instead of estimating it"},
        {"max_gap", ValueType::Int, "6", "longest temperature gap (hours) that is interpolated"},
        {"si_mean", ValueType::Double, "6.6", "serial interval mean (days)"},
        {"si_sd", ValueType::Double, "4.9", "serial interval standard deviation (days)"},
        {"rt_window", ValueType::Int, "7", "Rt smoothing window (days)"},
        {"horizons", ValueType::IntList, "1,2,5,7", "forecast horizons in days"},
        {"refit_every", ValueType::Int, "7", "refit the model every this many origins"},
        {"min_history_days", ValueType::Int, "365", "complete days of history required at an origin"},
        {"first_origin", ValueType::Day, "", "earliest evaluation origin"},
        {"last_origin", ValueType::Day, "", "latest evaluation origin"},
        {"threads", ValueType::Int, "1", "worker threads for rolling evaluation"},
        {"benchmarks", ValueType::Bool, "true", "also score naive, ARIMA and INGARCH during evaluate"},
        {"temperature_forecast", ValueType::Path, "", "CSV date,temperature overriding persistence"},
        {"seed", ValueType::Int, "1", "random seed for synth"},
        {"days", ValueType::Int, "745", "days generated by synth"},
        {"start", ValueType::Day, "2019-05-09", "first day generated by synth"},
    };
    return keys;
}

const KeySpec& find_key(std::string_view key) {
    for (const auto& k : config_keys()) {
        if (k.name == key) return k;
    }
    throw ConfigError("unknown configuration key '" + std::string(key) + "'");
}

namespace {

bool parse_bool(std::string_view v) {
    if (v == "true" || v == "1" || v == "yes" || v == "on") return true;
    if (v == "false" || v == "0" || v == "no" || v == "off") return false;
    throw ConfigError("expected a boolean, got '" + std::string(v) + "'");
}

std::vector<int> parse_int_list(std::string_view v) {
    std::vector<int> out;
    for (const auto f : text::split(v, ',')) out.push_back(static_cast<int>(text::parse_int(text::trim(f))));
    return out;
}

std::vector<std::string> parse_name_list(std::string_view v) {
    std::vector<std::string> out;
    if (text::trim(v).empty()) return out;
    for (const auto f : text::split(v, ',')) {
        const auto t = text::trim(f);
        if (t.empty()) throw ConfigError("empty name in list");
        out.emplace_back(t);
    }
    return out;
}

void check_value(const KeySpec& k, std::string_view v) {
    if (v.empty()) return;
    try {
        switch (k.type) {
            case ValueType::String:
            case ValueType::Path: break;
            case ValueType::NameList: parse_name_list(v); break;
            case ValueType::Int: text::parse_int(v); break;
            case ValueType::Double:
                if (!std::isfinite(text::parse_double(v))) throw ConfigError("not finite");
                break;
            case ValueType::Bool: parse_bool(v); break;
            case ValueType::Day: cal::parse_day(v); break;
            case ValueType::IntList: parse_int_list(v); break;
            case ValueType::Region: data::parse_region(v); break;
        }
    } catch (const Error& e) {
        throw ConfigError("invalid value '" + std::string(v) + "' for " + std::string(k.name) + ": " + e.what());
    }
}

}  // namespace

void RunConfig::set(std::string_view key, std::string_view value) {
    const auto& k = find_key(key);
    const auto v = text::trim(value);
    check_value(k, v);
    values_[std::string(k.name)] = std::string(v);
}

void RunConfig::merge_text(std::string_view content, const std::string& source, const std::string& base_dir) {
    std::size_t line_no = 0;
    while (!content.empty()) {
        const auto nl = content.find('\n');
        std::string_view line = content.substr(0, nl);
        content = nl == std::string_view::npos ? std::string_view{} : content.substr(nl + 1);
        ++line_no;
        if (const auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
        line = text::trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos) throw ParseError(source, line_no, "expected key = value");
        const auto key = text::trim(line.substr(0, eq));
        std::string value(text::trim(line.substr(eq + 1)));
        try {
            const auto& k = find_key(key);
            if (k.type == ValueType::Path && !value.empty() && !base_dir.empty() && fs::path(value).is_relative()) {
                value = (fs::path(base_dir) / value).lexically_normal().string();
            }
            set(key, value);
        } catch (const ConfigError& e) {
            throw ConfigError(source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

void RunConfig::merge_file(const std::string& path) {
    const auto parent = fs::path(path).parent_path().string();
    merge_text(text::read_file(path), path, parent.empty() ? "." : parent);
}

std::optional<std::string> RunConfig::get(std::string_view key) const {
    const auto& k = find_key(key);
    if (const auto it = values_.find(key); it != values_.end()) {
        if (it->second.empty()) return std::nullopt;
        return it->second;
    }
    if (k.default_value.empty()) return std::nullopt;
    return std::string(k.default_value);
}

std::string RunConfig::require(std::string_view key) const {
    auto v = get(key);
    if (!v) throw ConfigError("configuration key '" + std::string(key) + "' is required");
    return *v;
}

long long RunConfig::get_int(std::string_view key) const { return text::parse_int(require(key)); }
double RunConfig::get_double(std::string_view key) const { return text::parse_double(require(key)); }
bool RunConfig::get_bool(std::string_view key) const { return parse_bool(require(key)); }

std::string RunConfig::dump() const {
    std::string out;
    for (const auto& k : config_keys()) out += std::string(k.name) + "=" + get(k.name).value_or("") + "\n";
    return out;
}

std::uint64_t RunConfig::hash() const { return text::fnv1a64(dump()); }

gam::ModelSpec RunConfig::model_spec() const {
    gam::ModelSpec s;
    s.smooths.push_back({"hour", smooth::Kind::CRS, {"hour"}, {static_cast<int>(get_int("hour_dim"))}, {}, 2});
    s.smooths.push_back({"day", smooth::Kind::PSpline, {"day"}, {static_cast<int>(get_int("day_dim"))}, {}, 2});
    s.smooths.push_back(
        {"quarter", smooth::Kind::CRS, {"quarter"}, {static_cast<int>(get_int("quarter_dim"))}, {}, 2});
    if (get_bool("tensor")) {
        s.smooths.push_back({"day_hour",
                             smooth::Kind::Tensor,
                             {"day", "hour"},
                             {static_cast<int>(get_int("tensor_day_dim")), static_cast<int>(get_int("tensor_hour_dim"))},
                             {smooth::Kind::PSpline, smooth::Kind::CRS},
                             2});
    }
    s.linear = parse_name_list(get("linear").value_or(""));
    s.max_tensor_dim = static_cast<int>(get_int("max_tensor_dim"));
    s.validate();
    return s;
}

gam::FitOptions RunConfig::fit_options() const {
    gam::FitOptions o;
    o.pirls_tol = get_double("pirls_tol");
    o.max_pirls_iter = static_cast<int>(get_int("max_pirls_iter"));
    o.max_outer = static_cast<int>(get_int("max_outer"));
    o.outer_tol = get_double("outer_tol");
    if (has("theta")) {
        const double t = get_double("theta");
        if (!(t > 0.0)) throw ConfigError("theta must be positive");
        o.fixed_theta = t;
    }
    if (!(o.pirls_tol > 0.0) || o.max_pirls_iter < 1 || o.max_outer < 1 || !(o.outer_tol > 0.0)) {
        throw ConfigError("fit tolerances and iteration limits must be positive");
    }
    return o;
}

forecast::RollingPlan RunConfig::plan() const {
    forecast::RollingPlan p;
    p.horizons = parse_int_list(require("horizons"));
    p.refit_every = static_cast<int>(get_int("refit_every"));
    p.min_history_days = static_cast<int>(get_int("min_history_days"));
    if (has("first_origin")) p.first_origin = cal::parse_day(require("first_origin"));
    if (has("last_origin")) p.last_origin = cal::parse_day(require("last_origin"));
    p.threads = static_cast<int>(get_int("threads"));
    if (p.threads < 1) throw ConfigError("threads must be at least 1");
    return p;
}

synth::SynthConfig RunConfig::synth_config() const {
    synth::SynthConfig c;
    c.seed = static_cast<std::uint64_t>(get_int("seed"));
    c.days = static_cast<int>(get_int("days"));
    c.start = cal::parse_day(require("start"));
    c.env.region = data::parse_region(require("region"));
    return c;
}

features::FrameInputs Dataset::inputs() const {
    return {&events, &temperature, rt ? &*rt : nullptr, flu ? &*flu : nullptr};
}

Dataset load_dataset(const RunConfig& config) {
    Dataset d;
    d.region = data::parse_region(config.require("region"));
    const auto regions = data::parse_region_weights(text::read_file(config.require("regions")), config.require("regions"));
    d.events = data::ingest_events(text::read_file(config.require("events")), d.region, config.require("events"));
    const auto stations = data::ingest_weather(text::read_file(config.require("weather")), config.require("weather"));
    data::WeatherOptions wo;
    wo.max_interpolated_gap = static_cast<int>(config.get_int("max_gap"));
    d.temperature = data::aggregate_weather(stations, regions.find(d.region), wo);
    if (const auto path = config.get("covid")) {
        const auto covid = data::ingest_covid(text::read_file(*path), *path);
        features::RtOptions ro;
        ro.serial_interval = features::discretized_gamma(config.get_double("si_mean"), config.get_double("si_sd"));
        ro.window = static_cast<int>(config.get_int("rt_window"));
        d.rt = features::compute_rt(covid, ro);
    }
    if (const auto path = config.get("flu")) d.flu = data::interpolate_flu(data::ingest_flu(text::read_file(*path), *path));
    d.alignment = data::validate_alignment({data::coverage_of(d.events), data::coverage_of(d.temperature, "temperature")});
    return d;
}

features::AssembleResult training_frame(const Dataset& data, const RunConfig& config) {
    std::optional<cal::DayStamp> last;
    if (config.has("last_day")) last = cal::parse_day(config.require("last_day"));
    return features::assemble_frame(data.inputs(), last);
}

gam::FittedModel fit_model(const Dataset& data, const RunConfig& config) {
    const auto frame = training_frame(data, config);
    if (frame.frame.size() == 0) throw ValidationError("no complete rows to fit");
    return gam::fit(frame.frame, config.model_spec(), config.fit_options());
}

namespace {

std::optional<forecast::ExogenousOverride> load_override(const RunConfig& config) {
    if (const auto path = config.get("temperature_forecast")) {
        return forecast::parse_temperature_override(text::read_file(*path), *path);
    }
    return std::nullopt;
}

cal::DayStamp last_complete_day(const data::EventSeries& e) {
    const auto d = cal::day_of(e.end());
    return cal::hour_of(e.end()) == 23 ? d : d - 1;
}

}  // namespace

ForecastOutput forecast_from(const gam::FittedModel& model, const Dataset& data, const RunConfig& config,
                             std::optional<cal::DayStamp> origin, int max_h) {
    const auto ov = load_override(config);
    const cal::DayStamp o = origin.value_or(last_complete_day(data.events));
    const auto mu = forecast::forecast_path(model, data.inputs(), o, max_h, ov ? &*ov : nullptr);
    ForecastOutput out;
    out.hourly_csv = "timestamp,mu\n";
    out.daily_csv = "date,horizon_days,predicted\n";
    for (int h = 1; h <= max_h; ++h) {
        double total = 0.0;
        for (int k = 0; k < 24; ++k) {
            const double v = mu[static_cast<std::size_t>((h - 1) * 24 + k)];
            total += v;
            out.hourly_csv += cal::format_hour(cal::first_hour(o + h) + k) + "," + text::format_fixed(v, 6) + "\n";
        }
        out.daily_csv += cal::format_day(o + h) + "," + std::to_string(h) + "," + text::format_fixed(total, 4) + "\n";
    }
    return out;
}

std::vector<std::string> effect_terms(const gam::FittedModel& model) {
    std::vector<std::string> out;
    for (const auto& b : model.mapping.blocks) {
        if (b.type != gam::BlockType::Intercept) out.push_back(b.name);
    }
    return out;
}

namespace {

std::vector<std::string> term_covariates(const gam::FittedModel& model, const std::string& term) {
    for (const auto& s : model.mapping.spec.smooths) {
        if (s.name == term) return s.covariates;
    }
    model.mapping.block(term);  // throws for unknown terms
    return {term};
}

void center(std::vector<double>& v) {
    double m = 0.0;
    for (const double x : v) m += x;
    m /= static_cast<double>(v.size());
    for (auto& x : v) x -= m;
}

}  // namespace

std::string effects_csv(const gam::FittedModel& model, const std::string& term, int points) {
    if (points < 2) throw ConfigError("effects need at least two grid points");
    const auto covs = term_covariates(model, term);
    std::string out;
    if (covs.size() == 1) {
        auto g = gam::effect_grid(model, term, points);
        center(g.effect);
        out = covs[0] + ",effect\n";
        for (std::size_t i = 0; i < g.x1.size(); ++i) {
            out += text::format_double(g.x1[i]) + "," + text::format_double(g.effect[i]) + "\n";
        }
        return out;
    }
    const int n = std::max(2, points / 4);
    auto g = gam::effect_grid(model, term, n, n);
    center(g.effect);
    out = covs[0] + "," + covs[1] + ",effect\n";
    for (std::size_t i = 0; i < g.x1.size(); ++i) {
        for (std::size_t j = 0; j < g.x2.size(); ++j) {
            out += text::format_double(g.x1[i]) + "," + text::format_double(g.x2[j]) + "," +
                   text::format_double(g.effect[i * g.x2.size() + j]) + "\n";
        }
    }
    return out;
}

std::string effects_svg(const gam::FittedModel& model, const std::string& term, int points) {
    if (points < 2) throw ConfigError("effects need at least two grid points");
    const auto covs = term_covariates(model, term);
    svg::Plot plot;
    plot.title = "Partial effect: " + term;
    plot.y_label = "effect on log mean";
    if (covs.size() == 1) {
        auto g = gam::effect_grid(model, term, points);
        center(g.effect);
        plot.x_label = covs[0];
        plot.series.push_back({term, g.x1, g.effect});
    } else {
        constexpr int levels = 7;
        auto g = gam::effect_grid(model, term, levels, points);
        center(g.effect);
        plot.x_label = covs[1];
        for (std::size_t i = 0; i < g.x1.size(); ++i) {
            svg::Series s;
            s.label = covs[0] + " " + text::format_fixed(g.x1[i], 1);
            s.x = g.x2;
            s.y.assign(g.effect.begin() + static_cast<std::ptrdiff_t>(i * g.x2.size()),
                       g.effect.begin() + static_cast<std::ptrdiff_t>((i + 1) * g.x2.size()));
            plot.series.push_back(std::move(s));
        }
    }
    plot.guides = {{0.0, ""}};
    return svg::render(plot);
}

Evaluation evaluate(const Dataset& data, const RunConfig& config) {
    Evaluation e;
    const auto plan = config.plan();
    const auto ov = load_override(config);
    e.report = forecast::rolling_evaluate(data.inputs(), config.model_spec(), plan, config.fit_options(),
                                          ov ? &*ov : nullptr);
    e.with_benchmark = config.get_bool("benchmarks");
    if (e.with_benchmark) e.benchmark = bench::benchmark_compare(data.events, e.report, plan);
    return e;
}

std::string format_skipped(const forecast::ForecastReport& report) {
    std::string out = "origin,reason\n";
    for (const auto& s : report.skipped) {
        std::string reason = s.reason;
        for (auto& c : reason) {
            if (c == ',' || c == '\n' || c == '\r') c = ';';
        }
        out += cal::format_day(s.origin) + "," + reason + "\n";
    }
    return out;
}

std::string join_path(const std::string& dir, const std::string& name) { return (fs::path(dir) / name).string(); }

namespace {

void ensure_dir(const std::string& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir + ": " + ec.message());
}

}  // namespace

std::vector<std::string> write_evaluation(const Evaluation& e, const std::string& dir) {
    ensure_dir(dir);
    std::vector<std::string> files{"report.csv", "mae.csv", "errors.svg", "skipped.csv"};
    text::write_file(join_path(dir, "report.csv"), forecast::format_report(e.report));
    text::write_file(join_path(dir, "mae.csv"), forecast::format_mae(e.report));
    text::write_file(join_path(dir, "errors.svg"), forecast::errors_svg(e.report));
    text::write_file(join_path(dir, "skipped.csv"), format_skipped(e.report));
    if (e.with_benchmark) {
        text::write_file(join_path(dir, "benchmark.csv"), bench::format_benchmark(e.benchmark));
        files.push_back("benchmark.csv");
    }
    return files;
}

std::vector<std::string> write_synth(const RunConfig& config, const std::string& dir) {
    ensure_dir(dir);
    const auto cfg = config.synth_config();
    const auto data = synth::generate(cfg);
    synth::write_dataset(data, dir);
    text::write_file(join_path(dir, "truth.txt"), synth::format_truth(cfg.truth));
    std::string run_cfg = "# synthetic dataset\n";
    run_cfg += "events = events.csv\nweather = weather.csv\ncovid = covid.csv\nflu = flu.csv\nregions = regions.txt\n";
    run_cfg += "region = " + std::string(data::region_name(cfg.env.region)) + "\n";
    text::write_file(join_path(dir, "emsf.cfg"), run_cfg);
    return {"events.csv", "weather.csv", "covid.csv", "flu.csv", "regions.txt", "truth.txt", "emsf.cfg"};
}

void write_manifest(const std::string& dir, const std::string& command, const RunConfig& config,
                    const std::vector<std::string>& artifacts) {
    ensure_dir(dir);
    char hash[32];
    std::snprintf(hash, sizeof hash, "%016llx", static_cast<unsigned long long>(config.hash()));
    std::string out = "command=" + command + "\n";
    out += "emsf_version=" EMSF_VERSION "\n";
    out += "eigen_version=" + std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
           std::to_string(EIGEN_MINOR_VERSION) + "\n";
    out += "boost_version=" + std::to_string(BOOST_VERSION / 100000) + "." + std::to_string(BOOST_VERSION / 100 % 1000) +
           "." + std::to_string(BOOST_VERSION % 100) + "\n";
    out += "seed=" + config.get("seed").value_or("") + "\n";
    out += "config_hash=" + std::string(hash) + "\n";
    for (const auto& line : text::split(config.dump(), '\n')) {
        if (!line.empty()) out += "config." + std::string(line) + "\n";
    }
    for (const auto& a : artifacts) {
        std::snprintf(hash, sizeof hash, "%016llx",
                      static_cast<unsigned long long>(text::fnv1a64(text::read_file(join_path(dir, a)))));
        out += "artifact." + a + "=" + hash + "\n";
    }
    text::write_file(join_path(dir, "manifest.txt"), out);
}

}  // namespace emsf::run
