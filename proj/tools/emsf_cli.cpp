#include <CLI11.hpp>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "emsf/emsf.h"

namespace {

// Raised after an API call fails; carries the status for the exit line.
struct Failure {
    emsf_status status;
    std::string message;
};

void check(emsf_status s) {
    if (s != EMSF_OK) throw Failure{s, emsf_last_error()};
}

// Owns a malloc'd string returned by the library.
class Text {
public:
    Text() = default;
    Text(const Text&) = delete;
    Text& operator=(const Text&) = delete;
    ~Text() { emsf_string_free(p_); }
    char** out() { return &p_; }
    std::string str() const { return p_ == nullptr ? std::string() : std::string(p_); }

private:
    char* p_ = nullptr;
};

struct Config {
    emsf_config* h = nullptr;
    Config() { check(emsf_config_new(&h)); }
    ~Config() { emsf_config_free(h); }
    Config(const Config&) = delete;
    Config& operator=(const Config&) = delete;
};

struct Dataset {
    emsf_dataset* h = nullptr;
    explicit Dataset(const Config& c) { check(emsf_dataset_load(c.h, &h)); }
    ~Dataset() { emsf_dataset_free(h); }
    Dataset(const Dataset&) = delete;
    Dataset& operator=(const Dataset&) = delete;
};

struct Model {
    emsf_model* h = nullptr;
    Model() = default;
    ~Model() { emsf_model_free(h); }
    Model(const Model&) = delete;
    Model& operator=(const Model&) = delete;
};

struct Evaluation {
    emsf_evaluation* h = nullptr;
    Evaluation(const Dataset& d, const Config& c) { check(emsf_evaluate(d.h, c.h, &h)); }
    ~Evaluation() { emsf_evaluation_free(h); }
    Evaluation(const Evaluation&) = delete;
    Evaluation& operator=(const Evaluation&) = delete;
};

void write(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Failure{EMSF_E_IO, "cannot open " + path + " for writing"};
    f << content;
    if (!f) throw Failure{EMSF_E_IO, "cannot write " + path};
}

std::string join(const std::string& dir, const std::string& name) {
    return (std::filesystem::path(dir) / name).string();
}

void make_dir(const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Failure{EMSF_E_IO, "cannot create directory " + dir + ": " + ec.message()};
}

// Options shared by every subcommand. Values given on the command line are
// applied after the config file, so they take precedence.
struct Common {
    std::string config_file;
    std::vector<std::string> sets;
    std::string out = ".";
    std::vector<std::pair<std::string, std::string>> flags;
    // Storage for the per-key convenience flags.
    std::vector<std::unique_ptr<std::string>> storage;

    void apply(Config& c) const {
        if (!config_file.empty()) check(emsf_config_load(c.h, config_file.c_str()));
        for (const auto& kv : sets) {
            const auto eq = kv.find('=');
            if (eq == std::string::npos) throw Failure{EMSF_E_CONFIG, "--set expects key=value, got '" + kv + "'"};
            check(emsf_config_set(c.h, kv.substr(0, eq).c_str(), kv.substr(eq + 1).c_str()));
        }
        for (std::size_t i = 0; i < flags.size(); ++i) {
            if (!storage[i]->empty()) check(emsf_config_set(c.h, flags[i].second.c_str(), storage[i]->c_str()));
        }
    }
};

void add_common(CLI::App* app, Common& c, const std::vector<std::pair<std::string, std::string>>& keyed) {
    app->add_option("-c,--config", c.config_file, "key=value configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", c.sets, "override a configuration key (key=value), repeatable");
    app->add_option("-o,--out", c.out, "output directory")->capture_default_str();
    for (const auto& [flag, key] : keyed) {
        c.flags.emplace_back(flag, key);
        c.storage.push_back(std::make_unique<std::string>());
        app->add_option("--" + flag, *c.storage.back(), "sets configuration key '" + key + "'");
    }
}

const std::vector<std::pair<std::string, std::string>> kInputFlags{
    {"events", "events"}, {"weather", "weather"}, {"covid", "covid"},     {"flu", "flu"},
    {"regions", "regions"}, {"region", "region"}, {"last-day", "last_day"},
};

const std::vector<std::pair<std::string, std::string>> kPlanFlags{
    {"horizons", "horizons"},       {"refit-every", "refit_every"},   {"min-history", "min_history_days"},
    {"first-origin", "first_origin"}, {"last-origin", "last_origin"}, {"threads", "threads"},
    {"temperature-forecast", "temperature_forecast"},
};

std::vector<std::pair<std::string, std::string>> concat(std::vector<std::pair<std::string, std::string>> a,
                                                        const std::vector<std::pair<std::string, std::string>>& b) {
    a.insert(a.end(), b.begin(), b.end());
    return a;
}

void manifest(const std::string& dir, const std::string& command, const Config& c,
              const std::vector<std::string>& files) {
    std::string list;
    for (const auto& f : files) list += f + "\n";
    check(emsf_write_manifest(dir.c_str(), command.c_str(), c.h, list.c_str()));
}

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> out;
    std::istringstream in(s);
    for (std::string line; std::getline(in, line);) {
        if (!line.empty()) out.push_back(line);
    }
    return out;
}

std::string config_help() {
    Text t;
    if (emsf_config_describe(t.out()) != EMSF_OK) return {};
    std::string out = "\nConfiguration keys (key=value file, --set or the matching flag):\n";
    for (const auto& line : split_lines(t.str())) {
        const auto a = line.find('\t'), b = line.find('\t', a + 1);
        const std::string key = line.substr(0, a), def = line.substr(a + 1, b - a - 1), help = line.substr(b + 1);
        out += "  " + key + std::string(key.size() < 22 ? 22 - key.size() : 1, ' ') + help;
        if (!def.empty()) out += " [" + def + "]";
        out += "\n";
    }
    return out;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emsf: hourly emergency-event forecasting with a negative binomial GAM"};
    app.require_subcommand(1);
    app.footer(config_help());
    app.set_version_flag("--version", std::string(emsf_version()));

    Common synth_c, ingest_c, fit_c, forecast_c, evaluate_c, bench_c, effects_c;

    auto* synth = app.add_subcommand("synth", "generate a seeded synthetic dataset");
    add_common(synth, synth_c, {{"seed", "seed"}, {"days", "days"}, {"start", "start"}, {"region", "region"}});

    auto* ingest = app.add_subcommand("ingest", "validate inputs and export the covariate frame");
    add_common(ingest, ingest_c, kInputFlags);

    auto* fit = app.add_subcommand("fit", "fit the model and save it");
    add_common(fit, fit_c, concat(kInputFlags, {{"theta", "theta"}}));
    std::string fit_model;
    fit->add_option("--model", fit_model, "model file to write (default: <out>/model.txt)");

    auto* fc = app.add_subcommand("forecast", "forecast hourly counts from an origin");
    add_common(fc, forecast_c, concat(kInputFlags, {{"temperature-forecast", "temperature_forecast"}}));
    std::string fc_model, fc_origin;
    int fc_days = 7;
    fc->add_option("--model", fc_model, "model file")->required()->check(CLI::ExistingFile);
    fc->add_option("--origin", fc_origin, "last observed day YYYY-MM-DD (default: last complete day)");
    fc->add_option("--days", fc_days, "days ahead")->capture_default_str()->check(CLI::PositiveNumber);

    auto* ev = app.add_subcommand("evaluate", "rolling-origin evaluation with benchmarks");
    add_common(ev, evaluate_c, concat(kInputFlags, kPlanFlags));

    auto* bm = app.add_subcommand("benchmark", "compare the model with naive, ARIMA and INGARCH forecasts");
    add_common(bm, bench_c, concat(kInputFlags, kPlanFlags));

    auto* ef = app.add_subcommand("effects", "partial-effect grids and plots of a fitted model");
    add_common(ef, effects_c, {});
    std::string ef_model, ef_term;
    int ef_points = 200;
    ef->add_option("--model", ef_model, "model file")->required()->check(CLI::ExistingFile);
    ef->add_option("--term", ef_term, "term name (default: every term)");
    ef->add_option("--points", ef_points, "grid points")->capture_default_str()->check(CLI::Range(2, 100000));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        Config cfg;
        if (synth->parsed()) {
            synth_c.apply(cfg);
            Text names;
            check(emsf_synth(cfg.h, synth_c.out.c_str(), names.out()));
            const auto files = split_lines(names.str());
            manifest(synth_c.out, "synth", cfg, files);
            std::printf("wrote %zu files to %s\n", files.size(), synth_c.out.c_str());
        } else if (ingest->parsed()) {
            ingest_c.apply(cfg);
            Dataset data(cfg);
            Text align, frame;
            std::size_t rows = 0;
            check(emsf_dataset_alignment(data.h, align.out()));
            check(emsf_dataset_frame(data.h, cfg.h, frame.out(), &rows));
            make_dir(ingest_c.out);
            write(join(ingest_c.out, "alignment.txt"), align.str());
            write(join(ingest_c.out, "frame.csv"), frame.str());
            manifest(ingest_c.out, "ingest", cfg, {"alignment.txt", "frame.csv"});
            std::printf("%s%zu frame rows\n", align.str().c_str(), rows);
        } else if (fit->parsed()) {
            fit_c.apply(cfg);
            Dataset data(cfg);
            Model m;
            check(emsf_model_fit(data.h, cfg.h, &m.h));
            make_dir(fit_c.out);
            const std::string path = fit_model.empty() ? join(fit_c.out, "model.txt") : fit_model;
            check(emsf_model_save(m.h, path.c_str()));
            Text summary;
            check(emsf_model_summary(m.h, summary.out()));
            write(join(fit_c.out, "summary.txt"), summary.str());
            std::vector<std::string> files{"summary.txt"};
            if (fit_model.empty()) files.push_back("model.txt");
            manifest(fit_c.out, "fit", cfg, files);
            std::printf("%s", summary.str().c_str());
        } else if (fc->parsed()) {
            forecast_c.apply(cfg);
            Dataset data(cfg);
            Model m;
            check(emsf_model_load(fc_model.c_str(), &m.h));
            Text hourly, daily;
            check(emsf_model_forecast(m.h, data.h, cfg.h, fc_origin.empty() ? nullptr : fc_origin.c_str(), fc_days,
                                      hourly.out(), daily.out()));
            make_dir(forecast_c.out);
            write(join(forecast_c.out, "forecast.csv"), hourly.str());
            write(join(forecast_c.out, "forecast_daily.csv"), daily.str());
            manifest(forecast_c.out, "forecast", cfg, {"forecast.csv", "forecast_daily.csv"});
            std::printf("%s", daily.str().c_str());
        } else if (ev->parsed() || bm->parsed()) {
            auto& c = ev->parsed() ? evaluate_c : bench_c;
            c.apply(cfg);
            if (bm->parsed()) check(emsf_config_set(cfg.h, "benchmarks", "true"));
            Dataset data(cfg);
            Evaluation e(data, cfg);
            make_dir(c.out);
            std::vector<std::string> files;
            if (ev->parsed()) {
                Text names;
                check(emsf_evaluation_write(e.h, c.out.c_str(), names.out()));
                files = split_lines(names.str());
                Text mae;
                check(emsf_evaluation_artifact(e.h, "mae.csv", mae.out()));
                std::printf("%s", mae.str().c_str());
            } else {
                Text b;
                check(emsf_evaluation_artifact(e.h, "benchmark.csv", b.out()));
                write(join(c.out, "benchmark.csv"), b.str());
                files.push_back("benchmark.csv");
                std::printf("%s", b.str().c_str());
            }
            manifest(c.out, ev->parsed() ? "evaluate" : "benchmark", cfg, files);
        } else if (ef->parsed()) {
            effects_c.apply(cfg);
            Model m;
            check(emsf_model_load(ef_model.c_str(), &m.h));
            std::vector<std::string> terms;
            if (ef_term.empty()) {
                Text t;
                check(emsf_model_terms(m.h, t.out()));
                terms = split_lines(t.str());
            } else {
                terms.push_back(ef_term);
            }
            make_dir(effects_c.out);
            std::vector<std::string> files;
            for (const auto& term : terms) {
                Text csv, svg;
                check(emsf_model_effects(m.h, term.c_str(), ef_points, csv.out(), svg.out()));
                write(join(effects_c.out, "effects_" + term + ".csv"), csv.str());
                write(join(effects_c.out, "effects_" + term + ".svg"), svg.str());
                files.push_back("effects_" + term + ".csv");
                files.push_back("effects_" + term + ".svg");
            }
            manifest(effects_c.out, "effects", cfg, files);
            std::printf("wrote effects for %zu terms to %s\n", terms.size(), effects_c.out.c_str());
        }
    } catch (const Failure& f) {
        std::string msg = f.message;
        for (auto& ch : msg) {
            if (ch == '\n' || ch == '\r') ch = ' ';
        }
        std::fprintf(stderr, "emsf: error [%s] %s\n", emsf_status_name(f.status), msg.c_str());
        return 1;
    }
    return 0;
}
