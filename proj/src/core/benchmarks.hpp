#pragma once

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "core/data_model.hpp"
#include "core/forecaster.hpp"

// Comparison models on daily totals: persistence, ARIMA and a log-linear
// count autoregression.
namespace emsf::bench {

using cal::DayStamp;

// Y(origin) for every horizon.
double naive_forecast(std::span<const double> daily, std::size_t origin_index);

struct ArimaOptions {
    int max_p = 3;
    int max_q = 3;
    int max_d = 1;
    int max_evaluations = 4000;
};

struct ArimaFit {
    int p = 0, d = 0, q = 0;
    std::vector<double> ar, ma;
    bool has_constant = false;
    // Mean of the (differenced) series implied by the constant; 0 without one.
    double mean = 0.0;
    double sigma2 = 0.0;
    double aicc = 0.0;
    double css = 0.0;
    std::size_t n_used = 0;  // residuals in the common sample
    // Internal working scale: z = (w - center) / scale, constant on z.
    double center = 0.0;
    double scale = 1.0;
    double constant = 0.0;
};

struct ArimaCandidate {
    int p = 0, d = 0, q = 0;
    bool has_constant = false;
    double aicc = 0.0;
    bool valid = false;
    std::string note;
};

// Causal if every root of 1 - a1 x - ... - ap x^p lies outside the unit
// circle by more than tol. Also used for MA invertibility with negated terms.
bool is_causal(std::span<const double> ar, double tol = 1e-6);
bool is_invertible(std::span<const double> ma, double tol = 1e-6);

// Fits one order by CSS; the residual sum runs over the common sample used by
// the automatic search.
ArimaFit fit_arima_order(std::span<const double> y, int p, int d, int q, bool constant,
                         const ArimaOptions& options = {});

// Order search by AICc. Ties go to smaller p + q, then smaller p, smaller d
// and no constant.
ArimaFit fit_arima(std::span<const double> y, const ArimaOptions& options = {},
                   std::vector<ArimaCandidate>* candidates = nullptr);

// Forecasts y(n) .. y(n + max_h - 1) from the history y(0..n-1) using the
// fitted coefficients.
std::vector<double> arima_forecast(const ArimaFit& fit, std::span<const double> y, int max_h);

struct IngarchFit {
    double intercept = 0.0;
    double a = 0.0;  // on the lagged log mean
    double b = 0.0;  // on log(lagged count + 1)
    double theta = 0.0;
    double nu0 = 0.0;  // log mean at t = 0
    double quasi_loglik = 0.0;
    int evaluations = 0;
};

// log mu_t = c + a log mu_{t-1} + b log(Y_{t-1} + 1), mean parameters by
// Poisson quasi-likelihood (simplex then Fisher scoring), NB dispersion by
// Pearson moments.
IngarchFit fit_ingarch(std::span<const double> y);

// Multi-step forecasts plug the predicted mean in for unobserved counts.
std::vector<double> ingarch_forecast(const IngarchFit& fit, std::span<const double> y, int max_h);

// A forecasting method: `fit` takes a training series and returns a function
// mapping any history that extends it to forecasts for 1..max_h days ahead.
using DailyForecaster = std::function<std::vector<double>(std::span<const double> history, int max_h)>;
struct Method {
    std::string name;
    std::function<DailyForecaster(std::span<const double> training)> fit;
};

Method naive_method();
Method arima_method(const ArimaOptions& options = {});
Method ingarch_method();

struct BenchmarkRow {
    std::string method;
    int horizon = 0;
    double mae_pct = 0.0;  // NaN when every origin failed
    std::size_t n_origins = 0;
    std::size_t failures = 0;
};

// Refits every refit_every origins on the series up to the group's first
// origin; failures are counted per origin.
std::vector<BenchmarkRow> evaluate_method(const Method& method, const data::DailyCounts& daily,
                                          const std::vector<DayStamp>& origins, const std::vector<int>& horizons,
                                          int refit_every);

// Rows gam, arima, naive, ingarch (then any extra methods) per horizon over
// the origins of the GAM report.
std::vector<BenchmarkRow> benchmark_compare(const data::EventSeries& events, const forecast::ForecastReport& gam,
                                            const forecast::RollingPlan& plan,
                                            const std::vector<Method>& extra = {});

std::string format_benchmark(const std::vector<BenchmarkRow>& rows);

}  // namespace emsf::bench
