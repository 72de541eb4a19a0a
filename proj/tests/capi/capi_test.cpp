// Exercises the public C interface only.

#include <emsf/emsf.h>

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <string>

namespace {

int failures = 0;

void check(bool ok, const char* what, int line) {
    if (!ok) {
        ++failures;
        std::fprintf(stderr, "capi_test.cpp:%d: FAILED %s (last error: %s)\n", line, what, emsf_last_error());
    }
}

#define CHECK(x) check((x), #x, __LINE__)

std::string take(char* s) {
    std::string out = s ? s : "";
    emsf_string_free(s);
    return out;
}

std::size_t count_lines(const std::string& s) {
    std::size_t n = 0;
    for (const char c : s) n += c == '\n';
    return n;
}

}  // namespace

int main() {
    const auto dir = std::filesystem::temp_directory_path() / "emsf_capi_test";
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);

    CHECK(std::strlen(emsf_version()) > 0);
    CHECK(std::strcmp(emsf_status_name(EMSF_E_VALIDATION), "validation") == 0);
    CHECK(std::strcmp(emsf_status_name(EMSF_OK), "ok") == 0);

    // Arguments and configuration errors.
    CHECK(emsf_config_new(nullptr) == EMSF_E_ARGUMENT);
    emsf_config* cfg = nullptr;
    CHECK(emsf_config_new(&cfg) == EMSF_OK);
    CHECK(emsf_config_set(cfg, "bogus", "1") == EMSF_E_CONFIG);
    CHECK(std::strstr(emsf_last_error(), "bogus") != nullptr);
    CHECK(emsf_config_set(cfg, "refit_every", "x") == EMSF_E_CONFIG);
    CHECK(emsf_config_set(nullptr, "seed", "1") == EMSF_E_ARGUMENT);
    CHECK(emsf_config_load(cfg, (dir / "missing.cfg").c_str()) == EMSF_E_IO);
    char* value = nullptr;
    CHECK(emsf_config_get(cfg, "refit_every", &value) == EMSF_OK);
    CHECK(take(value) == "7");
    CHECK(emsf_config_get(cfg, "events", &value) == EMSF_OK);
    CHECK(value == nullptr);
    char* text = nullptr;
    CHECK(emsf_config_describe(&text) == EMSF_OK);
    CHECK(take(text).find("refit_every\t7\t") != std::string::npos);
    uint64_t h1 = 0, h2 = 0;
    CHECK(emsf_config_hash(cfg, &h1) == EMSF_OK);
    CHECK(emsf_config_set(cfg, "seed", "11") == EMSF_OK);
    CHECK(emsf_config_hash(cfg, &h2) == EMSF_OK);
    CHECK(h1 != h2);
    CHECK(emsf_config_dump(cfg, &text) == EMSF_OK);
    CHECK(take(text).find("seed=11\n") != std::string::npos);

    // Synthetic data, then the full chain on it.
    CHECK(emsf_config_set(cfg, "days", "400") == EMSF_OK);
    CHECK(emsf_config_set(cfg, "tensor", "false") == EMSF_OK);
    char* names = nullptr;
    CHECK(emsf_synth(cfg, dir.c_str(), &names) == EMSF_OK);
    CHECK(take(names).find("events.csv") != std::string::npos);

    emsf_config* run = nullptr;
    CHECK(emsf_config_new(&run) == EMSF_OK);
    CHECK(emsf_config_load(run, (dir / "emsf.cfg").c_str()) == EMSF_OK);
    CHECK(emsf_config_set(run, "tensor", "false") == EMSF_OK);
    emsf_dataset* data = nullptr;
    CHECK(emsf_dataset_load(run, &data) == EMSF_OK);
    std::size_t hours = 0;
    CHECK(emsf_dataset_hours(data, &hours) == EMSF_OK);
    CHECK(hours == 400 * 24);
    CHECK(emsf_dataset_alignment(data, &text) == EMSF_OK);
    CHECK(!take(text).empty());
    char* frame = nullptr;
    std::size_t rows = 0;
    CHECK(emsf_dataset_frame(data, run, &frame, &rows) == EMSF_OK);
    CHECK(rows > 9000);
    CHECK(count_lines(take(frame)) == rows + 1);

    emsf_model* model = nullptr;
    CHECK(emsf_model_fit(data, run, &model) == EMSF_OK);
    double theta = 0, converged = 0, coefs = 0;
    CHECK(emsf_model_stat(model, "theta", &theta) == EMSF_OK);
    CHECK(theta > 3 && theta < 30);
    CHECK(emsf_model_stat(model, "converged", &converged) == EMSF_OK);
    CHECK(converged == 1.0);
    CHECK(emsf_model_stat(model, "coefficients", &coefs) == EMSF_OK);
    CHECK(emsf_model_stat(model, "nope", &coefs) == EMSF_E_ARGUMENT);
    CHECK(emsf_model_summary(model, &text) == EMSF_OK);
    CHECK(!take(text).empty());
    CHECK(emsf_model_terms(model, &text) == EMSF_OK);
    CHECK(take(text).find("hour\n") != std::string::npos);

    char *csv = nullptr, *svg = nullptr;
    CHECK(emsf_model_effects(model, "hour", 200, &csv, &svg) == EMSF_OK);
    CHECK(count_lines(take(csv)) == 201);
    CHECK(take(svg).find("<svg") != std::string::npos);
    CHECK(emsf_model_effects(model, "missing_term", 200, &csv, &svg) == EMSF_E_CONFIG);

    const auto model_path = (dir / "model.txt").string();
    CHECK(emsf_model_save(model, model_path.c_str()) == EMSF_OK);
    emsf_model* loaded = nullptr;
    CHECK(emsf_model_load(model_path.c_str(), &loaded) == EMSF_OK);
    char *hourly = nullptr, *daily = nullptr, *hourly2 = nullptr, *daily2 = nullptr;
    CHECK(emsf_model_forecast(model, data, run, nullptr, 7, &hourly, &daily) == EMSF_OK);
    CHECK(emsf_model_forecast(loaded, data, run, nullptr, 7, &hourly2, &daily2) == EMSF_OK);
    const auto d1 = take(daily), d2 = take(daily2);
    CHECK(take(hourly) == take(hourly2));
    CHECK(d1 == d2);
    CHECK(count_lines(d1) == 8);
    CHECK(emsf_model_forecast(model, data, run, "not-a-date", 7, &hourly, &daily) != EMSF_OK);

    const auto bad_model = (dir / "bad.txt").string();
    std::FILE* f = std::fopen(bad_model.c_str(), "w");
    std::fputs("garbage\n", f);
    std::fclose(f);
    emsf_model* bad = nullptr;
    CHECK(emsf_model_load(bad_model.c_str(), &bad) == EMSF_E_PARSE);
    CHECK(bad == nullptr);

    // Validation failures surface their own code.
    emsf_config* empty = nullptr;
    CHECK(emsf_config_new(&empty) == EMSF_OK);
    emsf_dataset* none = nullptr;
    CHECK(emsf_dataset_load(empty, &none) == EMSF_E_CONFIG);
    const auto zero_events = (dir / "zero.csv").string();
    f = std::fopen(zero_events.c_str(), "w");
    std::fputs("region,timestamp,count\nPlain,2020-01-01T00,-4\n", f);
    std::fclose(f);
    CHECK(emsf_config_load(empty, (dir / "emsf.cfg").c_str()) == EMSF_OK);
    CHECK(emsf_config_set(empty, "events", zero_events.c_str()) == EMSF_OK);
    const emsf_status st = emsf_dataset_load(empty, &none);
    CHECK(st == EMSF_E_PARSE || st == EMSF_E_VALIDATION);

    const auto art = (dir / "artifact.txt").string();
    f = std::fopen(art.c_str(), "w");
    std::fputs("x", f);
    std::fclose(f);
    CHECK(emsf_write_manifest(dir.c_str(), "capi", run, "artifact.txt\n") == EMSF_OK);
    CHECK(std::filesystem::exists(dir / "manifest.txt"));

    emsf_model_free(loaded);
    emsf_model_free(model);
    emsf_dataset_free(data);
    emsf_config_free(empty);
    emsf_config_free(run);
    emsf_config_free(cfg);
    emsf_model_free(nullptr);
    emsf_dataset_free(nullptr);
    emsf_evaluation_free(nullptr);
    std::filesystem::remove_all(dir);

    if (failures) {
        std::fprintf(stderr, "%d C API checks failed\n", failures);
        return 1;
    }
    std::printf("C API checks passed\n");
    return 0;
}
