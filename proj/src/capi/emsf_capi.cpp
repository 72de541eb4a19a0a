#include "emsf/emsf.h"

#include <cstdlib>
#include <cstring>
#include <exception>
#include <memory>
#include <optional>
#include <new>
#include <string>

#include "core/error.hpp"
#include "core/run.hpp"
#include "core/text.hpp"

struct emsf_config {
    emsf::run::RunConfig config;
};

struct emsf_dataset {
    emsf::run::Dataset data;
};

struct emsf_model {
    emsf::gam::FittedModel model;
};

struct emsf_evaluation {
    emsf::run::Evaluation evaluation;
};

namespace {

thread_local std::string last_error;

class ArgumentError : public emsf::Error {
public:
    using Error::Error;
};

template <typename F>
emsf_status guard(F&& f) noexcept {
    try {
        f();
        return EMSF_OK;
    } catch (const ArgumentError& e) {
        last_error = e.what();
        return EMSF_E_ARGUMENT;
    } catch (const emsf::ParseError& e) {
        last_error = e.what();
        return EMSF_E_PARSE;
    } catch (const emsf::ValidationError& e) {
        last_error = e.what();
        return EMSF_E_VALIDATION;
    } catch (const emsf::ConfigError& e) {
        last_error = e.what();
        return EMSF_E_CONFIG;
    } catch (const emsf::NumericError& e) {
        last_error = e.what();
        return EMSF_E_NUMERIC;
    } catch (const emsf::ConvergenceError& e) {
        last_error = e.what();
        return EMSF_E_CONVERGENCE;
    } catch (const emsf::IoError& e) {
        last_error = e.what();
        return EMSF_E_IO;
    } catch (const std::bad_alloc&) {
        last_error = "out of memory";
        return EMSF_E_INTERNAL;
    } catch (const std::exception& e) {
        last_error = std::string("internal error: ") + e.what();
        return EMSF_E_INTERNAL;
    } catch (...) {
        last_error = "internal error";
        return EMSF_E_INTERNAL;
    }
}

template <typename T>
const T& need(const T* p, const char* what) {
    if (p == nullptr) throw ArgumentError(std::string(what) + " is NULL");
    return *p;
}

template <typename T>
T& need(T* p, const char* what) {
    if (p == nullptr) throw ArgumentError(std::string(what) + " is NULL");
    return *p;
}

const char* need_str(const char* s, const char* what) {
    if (s == nullptr) throw ArgumentError(std::string(what) + " is NULL");
    return s;
}

char* dup(const std::string& s) {
    auto* p = static_cast<char*>(std::malloc(s.size() + 1));
    if (p == nullptr) throw std::bad_alloc();
    std::memcpy(p, s.data(), s.size() + 1);
    return p;
}

void put(char** out, const std::string& s) {
    if (out != nullptr) *out = dup(s);
}

std::string lines(const std::vector<std::string>& v) {
    std::string s;
    for (const auto& x : v) s += x + "\n";
    return s;
}

}  // namespace

extern "C" {

const char* emsf_version(void) { return EMSF_VERSION; }

const char* emsf_status_name(emsf_status status) {
    switch (status) {
        case EMSF_OK: return "ok";
        case EMSF_E_PARSE: return "parse";
        case EMSF_E_VALIDATION: return "validation";
        case EMSF_E_CONFIG: return "config";
        case EMSF_E_NUMERIC: return "numeric";
        case EMSF_E_CONVERGENCE: return "convergence";
        case EMSF_E_IO: return "io";
        case EMSF_E_ARGUMENT: return "argument";
        case EMSF_E_INTERNAL: return "internal";
    }
    return "unknown";
}

const char* emsf_last_error(void) { return last_error.c_str(); }

void emsf_string_free(char* s) { std::free(s); }

emsf_status emsf_config_new(emsf_config** out) {
    return guard([&] { need(out, "out") = new emsf_config(); });
}

void emsf_config_free(emsf_config* config) { delete config; }

emsf_status emsf_config_set(emsf_config* config, const char* key, const char* value) {
    return guard([&] { need(config, "config").config.set(need_str(key, "key"), value == nullptr ? "" : value); });
}

emsf_status emsf_config_load(emsf_config* config, const char* path) {
    return guard([&] { need(config, "config").config.merge_file(need_str(path, "path")); });
}

emsf_status emsf_config_get(const emsf_config* config, const char* key, char** value) {
    return guard([&] {
        const auto v = need(config, "config").config.get(need_str(key, "key"));
        need(value, "value") = v ? dup(*v) : nullptr;
    });
}

emsf_status emsf_config_dump(const emsf_config* config, char** text) {
    return guard([&] { need(text, "text") = dup(need(config, "config").config.dump()); });
}

emsf_status emsf_config_hash(const emsf_config* config, uint64_t* hash) {
    return guard([&] { need(hash, "hash") = need(config, "config").config.hash(); });
}

emsf_status emsf_config_describe(char** text) {
    return guard([&] {
        std::string s;
        for (const auto& k : emsf::run::config_keys()) {
            s += std::string(k.name) + "\t" + std::string(k.default_value) + "\t" + std::string(k.help) + "\n";
        }
        need(text, "text") = dup(s);
    });
}

emsf_status emsf_dataset_load(const emsf_config* config, emsf_dataset** out) {
    return guard([&] {
        auto& o = need(out, "out");
        auto d = std::make_unique<emsf_dataset>();
        d->data = emsf::run::load_dataset(need(config, "config").config);
        o = d.release();
    });
}

void emsf_dataset_free(emsf_dataset* data) { delete data; }

emsf_status emsf_dataset_alignment(const emsf_dataset* data, char** text) {
    return guard([&] { need(text, "text") = dup(emsf::data::format_alignment(need(data, "data").data.alignment)); });
}

emsf_status emsf_dataset_frame(const emsf_dataset* data, const emsf_config* config, char** csv, size_t* rows) {
    return guard([&] {
        const auto f = emsf::run::training_frame(need(data, "data").data, need(config, "config").config);
        if (rows != nullptr) *rows = f.frame.size();
        put(csv, emsf::features::format_frame(f.frame));
    });
}

emsf_status emsf_dataset_hours(const emsf_dataset* data, size_t* hours) {
    return guard([&] { need(hours, "hours") = need(data, "data").data.events.counts.size(); });
}

emsf_status emsf_model_fit(const emsf_dataset* data, const emsf_config* config, emsf_model** out) {
    return guard([&] {
        auto& o = need(out, "out");
        auto m = std::make_unique<emsf_model>();
        m->model = emsf::run::fit_model(need(data, "data").data, need(config, "config").config);
        o = m.release();
    });
}

emsf_status emsf_model_save(const emsf_model* model, const char* path) {
    return guard([&] { emsf::text::write_file(need_str(path, "path"), emsf::gam::save_model(need(model, "model").model)); });
}

emsf_status emsf_model_load(const char* path, emsf_model** out) {
    return guard([&] {
        auto& o = need(out, "out");
        auto m = std::make_unique<emsf_model>();
        m->model = emsf::gam::load_model(emsf::text::read_file(need_str(path, "path")));
        o = m.release();
    });
}

void emsf_model_free(emsf_model* model) { delete model; }

emsf_status emsf_model_summary(const emsf_model* model, char** text) {
    return guard([&] {
        const auto& m = need(model, "model").model;
        using emsf::text::format_double;
        std::string s;
        s += "rows " + std::to_string(m.rows) + "\n";
        s += "coefficients " + std::to_string(m.mapping.columns()) + " (" + std::to_string(m.mapping.free_columns()) +
             " free)\n";
        s += "theta " + format_double(m.theta) + "\n";
        s += "deviance " + format_double(m.deviance) + "\n";
        s += "gcv " + format_double(m.gcv) + "\n";
        s += "converged " + std::string(m.converged ? "yes" : "no") + " after " + std::to_string(m.outer_rounds) +
             " outer rounds, " + std::to_string(m.iterations) + " PIRLS iterations\n";
        for (std::size_t j = 0; j < m.lambda.size(); ++j) {
            s += "lambda " + m.penalty_terms[j] + " " + format_double(m.lambda[j]) + "\n";
        }
        for (const auto& e : m.edf) s += "edf " + e.term + " " + format_double(e.edf) + "\n";
        need(text, "text") = dup(s);
    });
}

emsf_status emsf_model_stat(const emsf_model* model, const char* name, double* value) {
    return guard([&] {
        const auto& m = need(model, "model").model;
        const std::string n = need_str(name, "name");
        double v = 0.0;
        if (n == "theta") {
            v = m.theta;
        } else if (n == "deviance") {
            v = m.deviance;
        } else if (n == "gcv") {
            v = m.gcv;
        } else if (n == "edf") {
            for (const auto& e : m.edf) v += e.edf;
        } else if (n == "rows") {
            v = static_cast<double>(m.rows);
        } else if (n == "coefficients") {
            v = static_cast<double>(m.mapping.columns());
        } else if (n == "converged") {
            v = m.converged ? 1.0 : 0.0;
        } else if (n == "iterations") {
            v = m.iterations;
        } else if (n == "outer_rounds") {
            v = m.outer_rounds;
        } else if (n == "score_norm") {
            v = m.score_norm;
        } else {
            throw ArgumentError("unknown model statistic '" + n + "'");
        }
        need(value, "value") = v;
    });
}

emsf_status emsf_model_terms(const emsf_model* model, char** text) {
    return guard([&] { need(text, "text") = dup(lines(emsf::run::effect_terms(need(model, "model").model))); });
}

emsf_status emsf_model_effects(const emsf_model* model, const char* term, int points, char** csv, char** svg) {
    return guard([&] {
        const auto& m = need(model, "model").model;
        const std::string t = need_str(term, "term");
        const auto c = emsf::run::effects_csv(m, t, points);
        const auto s = emsf::run::effects_svg(m, t, points);
        put(csv, c);
        put(svg, s);
    });
}

emsf_status emsf_model_forecast(const emsf_model* model, const emsf_dataset* data, const emsf_config* config,
                                const char* origin, int max_h, char** hourly_csv, char** daily_csv) {
    return guard([&] {
        std::optional<emsf::cal::DayStamp> o;
        if (origin != nullptr && *origin != '\0') o = emsf::cal::parse_day(origin);
        const auto f = emsf::run::forecast_from(need(model, "model").model, need(data, "data").data,
                                                need(config, "config").config, o, max_h);
        put(hourly_csv, f.hourly_csv);
        put(daily_csv, f.daily_csv);
    });
}

emsf_status emsf_evaluate(const emsf_dataset* data, const emsf_config* config, emsf_evaluation** out) {
    return guard([&] {
        auto& o = need(out, "out");
        auto e = std::make_unique<emsf_evaluation>();
        e->evaluation = emsf::run::evaluate(need(data, "data").data, need(config, "config").config);
        o = e.release();
    });
}

void emsf_evaluation_free(emsf_evaluation* evaluation) { delete evaluation; }

emsf_status emsf_evaluation_write(const emsf_evaluation* evaluation, const char* dir, char** names) {
    return guard([&] {
        put(names, lines(emsf::run::write_evaluation(need(evaluation, "evaluation").evaluation, need_str(dir, "dir"))));
    });
}

emsf_status emsf_evaluation_artifact(const emsf_evaluation* evaluation, const char* name, char** text) {
    return guard([&] {
        const auto& e = need(evaluation, "evaluation").evaluation;
        const std::string n = need_str(name, "name");
        std::string s;
        if (n == "report.csv") {
            s = emsf::forecast::format_report(e.report);
        } else if (n == "mae.csv") {
            s = emsf::forecast::format_mae(e.report);
        } else if (n == "errors.svg") {
            s = emsf::forecast::errors_svg(e.report);
        } else if (n == "skipped.csv") {
            s = emsf::run::format_skipped(e.report);
        } else if (n == "benchmark.csv" && e.with_benchmark) {
            s = emsf::bench::format_benchmark(e.benchmark);
        } else {
            throw ArgumentError("no artifact named '" + n + "'");
        }
        need(text, "text") = dup(s);
    });
}

emsf_status emsf_evaluation_mae(const emsf_evaluation* evaluation, int horizon, double* mae_pct, size_t* n) {
    return guard([&] {
        for (const auto& m : need(evaluation, "evaluation").evaluation.report.mae) {
            if (m.horizon != horizon) continue;
            if (mae_pct != nullptr) *mae_pct = m.mae_pct;
            if (n != nullptr) *n = m.n;
            return;
        }
        throw ArgumentError("horizon " + std::to_string(horizon) + " was not evaluated");
    });
}

emsf_status emsf_evaluation_counts(const emsf_evaluation* evaluation, size_t* origins, size_t* rows, size_t* skipped) {
    return guard([&] {
        const auto& r = need(evaluation, "evaluation").evaluation.report;
        if (origins != nullptr) *origins = r.origins.size();
        if (rows != nullptr) *rows = r.rows.size();
        if (skipped != nullptr) *skipped = r.skipped.size();
    });
}

emsf_status emsf_synth(const emsf_config* config, const char* dir, char** names) {
    return guard([&] { put(names, lines(emsf::run::write_synth(need(config, "config").config, need_str(dir, "dir")))); });
}

emsf_status emsf_write_manifest(const char* dir, const char* command, const emsf_config* config, const char* artifacts) {
    return guard([&] {
        std::vector<std::string> names;
        if (artifacts != nullptr) {
            for (const auto n : emsf::text::split(artifacts, '\n')) {
                const auto t = emsf::text::trim(n);
                if (!t.empty()) names.emplace_back(t);
            }
        }
        emsf::run::write_manifest(need_str(dir, "dir"), need_str(command, "command"), need(config, "config").config,
                                  names);
    });
}

}  // extern "C"
