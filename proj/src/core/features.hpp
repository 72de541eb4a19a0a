#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "core/data_model.hpp"

namespace emsf::features {

using cal::DayStamp;
using cal::HourStamp;

struct CalendarRow {
    int hour;     // 0..23
    int day;      // 1 = Monday .. 7 = Sunday
    int quarter;  // 1..4
};

CalendarRow calendar_of(HourStamp h);

struct CalendarColumns {
    std::vector<double> hour, day, quarter;
};

CalendarColumns calendar_features(std::span<const HourStamp> timestamps);

// Lagged event covariates for every hour t of the series from `first` on:
//   lag k    = y(t - 24 - (k - 1)), k = 1, 2, 3
//   lagday D = total of calendar day(t) - D, D = 1, 2, 7
// Rows whose lags reach before the first complete day are excluded.
struct LagColumns {
    HourStamp first = 0;
    std::vector<double> lag1, lag2, lag3;
    std::vector<double> lagday1, lagday2, lagday7;
    std::size_t excluded = 0;

    std::size_t size() const { return lag1.size(); }
};

LagColumns event_lags(const data::EventSeries& events);

// Discrete serial-interval weights; weights[s - 1] is the mass at lag s days.
struct SerialInterval {
    std::vector<double> weights;
};

// Gamma(mean, sd) discretized on whole days: w_1 = F(1.5), w_s = F(s + 0.5) -
// F(s - 0.5) for 2 <= s <= max_days, renormalized to sum 1.
SerialInterval discretized_gamma(double mean, double sd, int max_days = 30);
// All mass at one lag.
SerialInterval point_mass(int lag);

struct RtOptions {
    SerialInterval serial_interval = discretized_gamma(6.6, 4.9);
    int window = 7;
    // Estimates whose window holds fewer cases are marked not credible.
    double min_cases = 12.0;
};

struct RtSeries {
    DayStamp start = 0;
    std::vector<double> rt;
    std::vector<std::uint8_t> defined;
    std::vector<std::uint8_t> credible;

    std::size_t size() const { return rt.size(); }
    DayStamp end() const { return start + static_cast<DayStamp>(rt.size()) - 1; }
    std::optional<double> at(DayStamp d) const;
};

// Daily incidence from cumulative counts; the first day counts from zero and
// negative differences (reporting corrections) are clamped to 0.
std::vector<double> incidence_from_cumulative(std::span<const std::int64_t> totals);

// Ratio-of-sums renewal estimator over a trailing window:
//   Rt(d) = sum_{window} I / sum_{window} Lambda,  Lambda_k = sum_s w_s I_{k-s}
// Undefined while the window is incomplete or when the denominator is below 1.
RtSeries compute_rt(std::span<const double> incidence, DayStamp start, const RtOptions& options = {});
RtSeries compute_rt(const data::CovidSeries& covid, const RtOptions& options = {});

enum class Column : int {
    hour,
    day,
    quarter,
    temperature,
    events_lag1,
    events_lag2,
    events_lag3,
    events_lagday1,
    events_lagday2,
    events_lagday7,
    rt,
    flu,
};
inline constexpr std::size_t kColumnCount = 12;

std::string_view column_name(Column c);
std::optional<Column> parse_column(std::string_view name);

struct CovariateFrame {
    std::vector<HourStamp> timestamps;
    std::array<std::vector<double>, kColumnCount> columns;
    std::vector<double> y;

    std::size_t size() const { return timestamps.size(); }
    const std::vector<double>& operator[](Column c) const { return columns[static_cast<std::size_t>(c)]; }
    std::vector<double>& operator[](Column c) { return columns[static_cast<std::size_t>(c)]; }
    // Throws ConfigError for unknown names.
    const std::vector<double>& column(std::string_view name) const;

    void reserve(std::size_t n);
    void push_row(HourStamp t, const std::array<double, kColumnCount>& row, double response);
    std::array<double, kColumnCount> row(std::size_t i) const;
};

struct FrameInputs {
    const data::EventSeries* events = nullptr;
    const data::DailySeries* temperature = nullptr;
    // Null means no epidemic data at all: rt is 0 throughout.
    const RtSeries* rt = nullptr;
    // Null, or days outside it, mean off-season: flu is 0.
    const data::DailySeries* flu = nullptr;
};

struct AssembleResult {
    CovariateFrame frame;
    std::size_t dropped_history = 0;      // rows without full lag history
    std::size_t dropped_temperature = 0;  // rows on days without temperature
    std::size_t dropped_rt = 0;           // rows whose previous day has no Rt
};

// One row per hour with full lag history, up to and including `last_day`
// when given. rt and flu come from the previous calendar day (rt is 0 before
// the first epidemic record); temperature is the same-day mean.
AssembleResult assemble_frame(const FrameInputs& inputs, std::optional<DayStamp> last_day = std::nullopt);

std::string format_frame(const CovariateFrame& frame);

}  // namespace emsf::features
