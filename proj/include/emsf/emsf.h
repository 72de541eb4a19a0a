#ifndef EMSF_EMSF_H
#define EMSF_EMSF_H

/* Emergency-event forecasting with a negative binomial GAM.
 *
 * Every function returns an emsf_status. On failure the message is available
 * from emsf_last_error() on the same thread until the next call that fails.
 * Strings returned through char** outputs are owned by the caller and must be
 * released with emsf_string_free(). Handles are released with their _free
 * function; passing NULL to a _free function is a no-op. */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#if defined(EMSF_BUILDING)
#define EMSF_API __declspec(dllexport)
#else
#define EMSF_API __declspec(dllimport)
#endif
#else
#define EMSF_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum emsf_status {
    EMSF_OK = 0,
    EMSF_E_PARSE = 1,       /* malformed input file */
    EMSF_E_VALIDATION = 2,  /* input violates a data invariant */
    EMSF_E_CONFIG = 3,      /* bad option, key or term specification */
    EMSF_E_NUMERIC = 4,     /* non-finite values, rank or overflow problems */
    EMSF_E_CONVERGENCE = 5, /* an iterative method ran out of iterations */
    EMSF_E_IO = 6,          /* file could not be read or written */
    EMSF_E_ARGUMENT = 7,    /* NULL handle or invalid argument */
    EMSF_E_INTERNAL = 8
} emsf_status;

typedef struct emsf_config emsf_config;
typedef struct emsf_dataset emsf_dataset;
typedef struct emsf_model emsf_model;
typedef struct emsf_evaluation emsf_evaluation;

EMSF_API const char* emsf_version(void);
/* Short stable name such as "validation". */
EMSF_API const char* emsf_status_name(emsf_status status);
EMSF_API const char* emsf_last_error(void);
EMSF_API void emsf_string_free(char* s);

/* Configuration: flat key=value pairs with documented defaults. */
EMSF_API emsf_status emsf_config_new(emsf_config** out);
EMSF_API void emsf_config_free(emsf_config* config);
EMSF_API emsf_status emsf_config_set(emsf_config* config, const char* key, const char* value);
/* Merges a key=value file; relative paths resolve against its directory. */
EMSF_API emsf_status emsf_config_load(emsf_config* config, const char* path);
/* Effective value, or NULL in *value when the key is unset. */
EMSF_API emsf_status emsf_config_get(const emsf_config* config, const char* key, char** value);
/* Every key with its effective value, one key=value per line. */
EMSF_API emsf_status emsf_config_dump(const emsf_config* config, char** text);
EMSF_API emsf_status emsf_config_hash(const emsf_config* config, uint64_t* hash);
/* Lines of "key<TAB>default<TAB>help". */
EMSF_API emsf_status emsf_config_describe(char** text);

/* Inputs named by the events, weather, covid, flu, regions and region keys. */
EMSF_API emsf_status emsf_dataset_load(const emsf_config* config, emsf_dataset** out);
EMSF_API void emsf_dataset_free(emsf_dataset* data);
/* Coverage summary of the aligned sources. */
EMSF_API emsf_status emsf_dataset_alignment(const emsf_dataset* data, char** text);
/* The covariate frame (up to last_day when set) as CSV. */
EMSF_API emsf_status emsf_dataset_frame(const emsf_dataset* data, const emsf_config* config, char** csv,
                                        size_t* rows);
EMSF_API emsf_status emsf_dataset_hours(const emsf_dataset* data, size_t* hours);

EMSF_API emsf_status emsf_model_fit(const emsf_dataset* data, const emsf_config* config, emsf_model** out);
EMSF_API emsf_status emsf_model_save(const emsf_model* model, const char* path);
EMSF_API emsf_status emsf_model_load(const char* path, emsf_model** out);
EMSF_API void emsf_model_free(emsf_model* model);
/* Human-readable fit summary (dispersion, smoothing parameters, edf). */
EMSF_API emsf_status emsf_model_summary(const emsf_model* model, char** text);
/* Scalar diagnostics: "theta", "deviance", "gcv", "edf", "rows",
 * "coefficients", "converged", "iterations", "outer_rounds", "score_norm". */
EMSF_API emsf_status emsf_model_stat(const emsf_model* model, const char* name, double* value);
/* Term names, one per line. */
EMSF_API emsf_status emsf_model_terms(const emsf_model* model, char** text);
/* Grid CSV and SVG of a term's mean-zero partial effect. */
EMSF_API emsf_status emsf_model_effects(const emsf_model* model, const char* term, int points, char** csv,
                                        char** svg);
/* Forecasts days origin+1 .. origin+max_h. origin is YYYY-MM-DD or NULL for
 * the last complete day of events. */
EMSF_API emsf_status emsf_model_forecast(const emsf_model* model, const emsf_dataset* data,
                                         const emsf_config* config, const char* origin, int max_h,
                                         char** hourly_csv, char** daily_csv);

/* Rolling-origin evaluation (plus benchmarks when enabled). */
EMSF_API emsf_status emsf_evaluate(const emsf_dataset* data, const emsf_config* config, emsf_evaluation** out);
EMSF_API void emsf_evaluation_free(emsf_evaluation* evaluation);
/* Writes the evaluation artifacts into dir; *names lists them, one per line. */
EMSF_API emsf_status emsf_evaluation_write(const emsf_evaluation* evaluation, const char* dir, char** names);
/* "report.csv", "mae.csv", "benchmark.csv", "skipped.csv" or "errors.svg". */
EMSF_API emsf_status emsf_evaluation_artifact(const emsf_evaluation* evaluation, const char* name, char** text);
EMSF_API emsf_status emsf_evaluation_mae(const emsf_evaluation* evaluation, int horizon, double* mae_pct,
                                         size_t* n);
EMSF_API emsf_status emsf_evaluation_counts(const emsf_evaluation* evaluation, size_t* origins, size_t* rows,
                                            size_t* skipped);

/* Synthetic dataset from the seed, days, start and region keys. */
EMSF_API emsf_status emsf_synth(const emsf_config* config, const char* dir, char** names);

/* manifest.txt in dir; artifacts is a newline-separated list of file names. */
EMSF_API emsf_status emsf_write_manifest(const char* dir, const char* command, const emsf_config* config,
                                         const char* artifacts);

#ifdef __cplusplus
}
#endif

#endif
