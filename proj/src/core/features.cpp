#include "core/features.hpp"

#include <boost/math/special_functions/gamma.hpp>
#include <cmath>
#include <limits>

#include "core/error.hpp"
#include "core/text.hpp"

namespace emsf::features {

CalendarRow calendar_of(HourStamp h) {
    const DayStamp d = cal::day_of(h);
    return {cal::hour_of(h), cal::iso_weekday(d), cal::quarter(d)};
}

CalendarColumns calendar_features(std::span<const HourStamp> timestamps) {
    CalendarColumns out;
    out.hour.reserve(timestamps.size());
    out.day.reserve(timestamps.size());
    out.quarter.reserve(timestamps.size());
    for (const auto t : timestamps) {
        const auto c = calendar_of(t);
        out.hour.push_back(c.hour);
        out.day.push_back(c.day);
        out.quarter.push_back(c.quarter);
    }
    return out;
}

LagColumns event_lags(const data::EventSeries& events) {
    LagColumns out;
    DayStamp first_full = cal::day_of(events.start);
    if (cal::hour_of(events.start) != 0) ++first_full;
    out.first = cal::first_hour(first_full + 7);
    const HourStamp end = events.end();
    out.excluded = static_cast<std::size_t>(std::min(out.first, end + 1) - events.start);
    if (out.first > end) return out;

    auto y = [&](HourStamp h) { return static_cast<double>(events.counts[static_cast<std::size_t>(h - events.start)]); };
    auto day_total = [&](DayStamp d) {
        double s = 0.0;
        for (int k = 0; k < 24; ++k) s += y(cal::first_hour(d) + k);
        return s;
    };

    const auto n = static_cast<std::size_t>(end - out.first + 1);
    for (auto* v : {&out.lag1, &out.lag2, &out.lag3, &out.lagday1, &out.lagday2, &out.lagday7}) v->reserve(n);
    DayStamp cached_day = std::numeric_limits<DayStamp>::min();
    double t1 = 0, t2 = 0, t7 = 0;
    for (HourStamp t = out.first; t <= end; ++t) {
        out.lag1.push_back(y(t - 24));
        out.lag2.push_back(y(t - 25));
        out.lag3.push_back(y(t - 26));
        const DayStamp d = cal::day_of(t);
        if (d != cached_day) {
            cached_day = d;
            t1 = day_total(d - 1);
            t2 = day_total(d - 2);
            t7 = day_total(d - 7);
        }
        out.lagday1.push_back(t1);
        out.lagday2.push_back(t2);
        out.lagday7.push_back(t7);
    }
    return out;
}

SerialInterval discretized_gamma(double mean, double sd, int max_days) {
    if (!(mean > 0.0) || !(sd > 0.0) || max_days < 1) {
        throw ConfigError("serial interval needs positive mean, sd and support");
    }
    const double shape = (mean / sd) * (mean / sd);
    const double scale = sd * sd / mean;
    auto cdf = [&](double x) { return x <= 0.0 ? 0.0 : boost::math::gamma_p(shape, x / scale); };
    SerialInterval si;
    double sum = 0.0;
    for (int s = 1; s <= max_days; ++s) {
        const double lo = s == 1 ? 0.0 : s - 0.5;
        const double w = cdf(s + 0.5) - cdf(lo);
        si.weights.push_back(w);
        sum += w;
    }
    for (auto& w : si.weights) w /= sum;
    return si;
}

SerialInterval point_mass(int lag) {
    if (lag < 1) throw ConfigError("serial interval lag must be >= 1");
    SerialInterval si;
    si.weights.assign(static_cast<std::size_t>(lag), 0.0);
    si.weights.back() = 1.0;
    return si;
}

std::optional<double> RtSeries::at(DayStamp d) const {
    if (d < start || d > end()) return std::nullopt;
    const auto i = static_cast<std::size_t>(d - start);
    if (!defined[i]) return std::nullopt;
    return rt[i];
}

std::vector<double> incidence_from_cumulative(std::span<const std::int64_t> totals) {
    std::vector<double> out(totals.size(), 0.0);
    for (std::size_t d = 0; d < totals.size(); ++d) {
        const std::int64_t prev = d == 0 ? 0 : totals[d - 1];
        out[d] = static_cast<double>(std::max<std::int64_t>(0, totals[d] - prev));
    }
    return out;
}

RtSeries compute_rt(std::span<const double> incidence, DayStamp start, const RtOptions& options) {
    if (options.window < 1) throw ConfigError("Rt window must be at least 1 day");
    const auto& w = options.serial_interval.weights;
    if (w.empty()) throw ConfigError("empty serial interval");
    double wsum = 0.0;
    for (const double v : w) {
        if (!(v >= 0.0)) throw ConfigError("serial interval weights must be non-negative");
        wsum += v;
    }
    if (std::fabs(wsum - 1.0) > 1e-9) throw ConfigError("serial interval weights must sum to 1");

    const std::size_t n = incidence.size();
    std::vector<double> lambda(n, 0.0);
    for (std::size_t d = 0; d < n; ++d) {
        double s = 0.0;
        for (std::size_t k = 1; k <= w.size() && k <= d; ++k) s += w[k - 1] * incidence[d - k];
        lambda[d] = s;
    }
    RtSeries out;
    out.start = start;
    out.rt.assign(n, 0.0);
    out.defined.assign(n, 0);
    out.credible.assign(n, 0);
    const auto win = static_cast<std::size_t>(options.window);
    for (std::size_t d = win - 1; d < n; ++d) {
        double num = 0.0, den = 0.0;
        for (std::size_t k = d + 1 - win; k <= d; ++k) {
            num += incidence[k];
            den += lambda[k];
        }
        if (den < 1.0) continue;
        out.rt[d] = num / den;
        out.defined[d] = 1;
        out.credible[d] = num >= options.min_cases;
    }
    return out;
}

RtSeries compute_rt(const data::CovidSeries& covid, const RtOptions& options) {
    const auto totals = covid.regional_totals();
    const auto incidence = incidence_from_cumulative(totals);
    return compute_rt(incidence, covid.start, options);
}

namespace {

constexpr std::string_view kColumnNames[kColumnCount] = {
    "hour",           "day",           "quarter",        "temperature", "events_lag1", "events_lag2",
    "events_lag3",    "events_lagday1", "events_lagday2", "events_lagday7", "rt",         "flu",
};

}  // namespace

std::string_view column_name(Column c) { return kColumnNames[static_cast<std::size_t>(c)]; }

std::optional<Column> parse_column(std::string_view name) {
    for (std::size_t i = 0; i < kColumnCount; ++i) {
        if (kColumnNames[i] == name) return static_cast<Column>(i);
    }
    return std::nullopt;
}

const std::vector<double>& CovariateFrame::column(std::string_view name) const {
    const auto c = parse_column(name);
    if (!c) throw ConfigError("unknown frame column '" + std::string(name) + "'");
    return (*this)[*c];
}

void CovariateFrame::reserve(std::size_t n) {
    timestamps.reserve(n);
    y.reserve(n);
    for (auto& c : columns) c.reserve(n);
}

void CovariateFrame::push_row(HourStamp t, const std::array<double, kColumnCount>& row, double response) {
    timestamps.push_back(t);
    for (std::size_t k = 0; k < kColumnCount; ++k) columns[k].push_back(row[k]);
    y.push_back(response);
}

std::array<double, kColumnCount> CovariateFrame::row(std::size_t i) const {
    std::array<double, kColumnCount> r{};
    for (std::size_t k = 0; k < kColumnCount; ++k) r[k] = columns[k][i];
    return r;
}

AssembleResult assemble_frame(const FrameInputs& in, std::optional<DayStamp> last_day) {
    if (in.events == nullptr || in.temperature == nullptr) {
        throw ConfigError("assemble_frame needs events and temperature");
    }
    const auto& ev = *in.events;
    const LagColumns lags = event_lags(ev);
    AssembleResult res;
    res.dropped_history = lags.excluded;
    HourStamp end = ev.end();
    if (last_day) end = std::min(end, cal::first_hour(*last_day) + 23);
    if (lags.first <= end) res.frame.reserve(static_cast<std::size_t>(end - lags.first + 1));

    for (HourStamp t = lags.first; t <= end; ++t) {
        const auto i = static_cast<std::size_t>(t - lags.first);
        const DayStamp d = cal::day_of(t);
        const auto temp = in.temperature->at(d);
        if (!temp) {
            ++res.dropped_temperature;
            continue;
        }
        double rt = 0.0;
        if (in.rt != nullptr && d - 1 >= in.rt->start) {
            const auto v = in.rt->at(d - 1);
            if (!v) {
                ++res.dropped_rt;
                continue;
            }
            rt = *v;
        }
        double flu = 0.0;
        if (in.flu != nullptr) flu = in.flu->at(d - 1).value_or(0.0);
        const auto c = calendar_of(t);
        std::array<double, kColumnCount> row{
            static_cast<double>(c.hour), static_cast<double>(c.day), static_cast<double>(c.quarter),
            *temp,                       lags.lag1[i],               lags.lag2[i],
            lags.lag3[i],                lags.lagday1[i],            lags.lagday2[i],
            lags.lagday7[i],             rt,                         flu,
        };
        res.frame.push_row(t, row, static_cast<double>(ev.counts[static_cast<std::size_t>(t - ev.start)]));
    }
    if (res.frame.size() == 0) {
        throw ValidationError("covariate frame is empty after dropping rows (history " +
                              std::to_string(res.dropped_history) + ", temperature " +
                              std::to_string(res.dropped_temperature) + ", rt " + std::to_string(res.dropped_rt) + ")");
    }
    return res;
}

std::string format_frame(const CovariateFrame& frame) {
    std::string out = "timestamp";
    for (const auto name : kColumnNames) out += "," + std::string(name);
    out += ",y\n";
    for (std::size_t i = 0; i < frame.size(); ++i) {
        out += cal::format_hour(frame.timestamps[i]);
        for (std::size_t k = 0; k < kColumnCount; ++k) out += "," + text::format_double(frame.columns[k][i]);
        out += "," + text::format_double(frame.y[i]) + "\n";
    }
    return out;
}

}  // namespace emsf::features
