#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core/features.hpp"
#include "core/gam.hpp"

namespace emsf::forecast {

using cal::DayStamp;

// Externally supplied future values that replace persistence.
struct ExogenousOverride {
    std::map<DayStamp, double> temperature;
};

// Parses `date,temperature`.
ExogenousOverride parse_temperature_override(std::string_view content, const std::string& source = "temperature");

// Hourly mu for days origin+1 .. origin+max_h (24 per day, in order). Day
// origin is the last fully observed day. Lags that reach past the origin take
// the model's own predicted means; rt and flu are carried forward from the
// origin; temperature is carried forward unless overridden.
std::vector<double> forecast_path(const gam::FittedModel& model, const features::FrameInputs& inputs,
                                  DayStamp origin, int max_h, const ExogenousOverride* overrides = nullptr);

// The 24 hourly means of day origin + h.
std::vector<double> forecast_horizon(const gam::FittedModel& model, const features::FrameInputs& inputs,
                                     DayStamp origin, int h, const ExogenousOverride* overrides = nullptr);

// The covariate rows used for days origin+1 .. origin+max_h given hourly
// means for those days (exposed for tests of the recursion).
features::CovariateFrame future_rows(const features::FrameInputs& inputs, DayStamp origin, int max_h,
                                     std::span<const double> predicted, const ExogenousOverride* overrides = nullptr);

struct MaeResult {
    double mae_pct = 0.0;
    std::vector<double> errors_pct;  // E_i * 100 for included pairs
    std::size_t n = 0;
    std::size_t excluded = 0;  // pairs with observed 0
};

// MAE = mean |E_i| in percent, E_i = (predicted - observed) / observed.
MaeResult compute_mae(std::span<const double> predicted, std::span<const double> observed);

struct RollingPlan {
    std::vector<int> horizons{1, 2, 5, 7};
    int refit_every = 7;
    int min_history_days = 365;
    std::optional<DayStamp> first_origin;
    std::optional<DayStamp> last_origin;
    int threads = 1;
};

struct ForecastRow {
    DayStamp origin = 0;
    int horizon = 0;
    double predicted = 0.0;
    double observed = 0.0;
    double rel_error_pct = 0.0;  // NaN when observed is 0
};

struct SkippedOrigin {
    DayStamp origin = 0;
    std::string reason;
};

struct HorizonMae {
    int horizon = 0;
    double mae_pct = 0.0;
    std::size_t n = 0;
    std::size_t skipped = 0;
};

struct ForecastReport {
    std::vector<DayStamp> origins;  // every planned origin
    std::vector<ForecastRow> rows;  // ordered by origin, then horizon
    std::vector<SkippedOrigin> skipped;
    std::vector<HorizonMae> mae;
    std::size_t fits = 0;
};

// Planned origins: at least min_history_days complete days up to and
// including the origin, and origin + max horizon within the data.
std::vector<DayStamp> plan_origins(const data::EventSeries& events, const RollingPlan& plan);

// Refits every refit_every origins on all data up to the group's first
// origin. Groups may run on plan.threads workers; results do not depend on
// the worker count.
ForecastReport rolling_evaluate(const features::FrameInputs& inputs, const gam::ModelSpec& spec,
                                const RollingPlan& plan, const gam::FitOptions& fit_options = {},
                                const ExogenousOverride* overrides = nullptr);

std::vector<HorizonMae> summarize(const std::vector<ForecastRow>& rows, const std::vector<int>& horizons,
                                  std::size_t skipped_origins);

std::string format_report(const ForecastReport& report);
std::string format_mae(const ForecastReport& report);
// Error series per horizon with dotted +-5% guide lines.
std::string errors_svg(const ForecastReport& report);

}  // namespace emsf::forecast
