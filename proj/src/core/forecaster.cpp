#include "core/forecaster.hpp"

#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "core/error.hpp"
#include "core/svg.hpp"
#include "core/text.hpp"

namespace emsf::forecast {

using cal::HourStamp;
using features::Column;

ExogenousOverride parse_temperature_override(std::string_view content, const std::string& source) {
    text::CsvReader reader(content, source);
    reader.expect_header({"date", "temperature"});
    ExogenousOverride out;
    std::vector<std::string_view> f;
    while (reader.next(f)) {
        if (f.size() != 2) reader.fail("expected 2 fields");
        DayStamp d;
        double v;
        try {
            d = cal::parse_day(f[0]);
            v = text::parse_double(f[1]);
        } catch (const ParseError& e) {
            reader.fail(e.what());
        }
        if (!std::isfinite(v)) reader.fail("non-finite temperature");
        if (!out.temperature.emplace(d, v).second) reader.fail("duplicate date " + std::string(f[0]));
    }
    return out;
}

namespace {

// Everything known at the origin plus the predictions made so far.
class Timeline {
public:
    Timeline(const features::FrameInputs& in, DayStamp origin, std::span<const double> predicted)
        : in_(in), origin_(origin), last_obs_(cal::first_hour(origin) + 23), predicted_(predicted) {
        if (in.events == nullptr || in.temperature == nullptr) throw ConfigError("forecast needs events and temperature");
        if (last_obs_ > in.events->end()) {
            throw ValidationError("missing history: origin " + cal::format_day(origin) + " is not fully observed");
        }
    }

    double count(HourStamp s) const {
        if (s <= last_obs_) {
            if (s < in_.events->start) {
                throw ValidationError("missing history: lags before " + cal::format_hour(in_.events->start));
            }
            return static_cast<double>(in_.events->counts[static_cast<std::size_t>(s - in_.events->start)]);
        }
        const auto k = static_cast<std::size_t>(s - last_obs_ - 1);
        if (k >= predicted_.size()) throw ConfigError("forecast recursion ran ahead of its predictions");
        return predicted_[k];
    }

    double day_total(DayStamp d) const {
        double s = 0.0;
        for (int k = 0; k < 24; ++k) s += count(cal::first_hour(d) + k);
        return s;
    }

    double temperature(DayStamp d, const ExogenousOverride* ov) const {
        if (ov != nullptr) {
            const auto it = ov->temperature.find(d);
            if (it != ov->temperature.end()) return it->second;
        }
        for (DayStamp k = std::min(d, origin_); k >= origin_ - 30; --k) {
            if (const auto v = in_.temperature->at(k)) return *v;
        }
        throw ValidationError("missing history: no temperature within 30 days of " + cal::format_day(origin_));
    }

    double rt(DayStamp d) const {
        if (in_.rt == nullptr || d < in_.rt->start) return 0.0;
        for (DayStamp k = std::min(d, origin_); k >= in_.rt->start; --k) {
            if (const auto v = in_.rt->at(k)) return *v;
        }
        return 0.0;
    }

    double flu(DayStamp d) const {
        if (in_.flu == nullptr) return 0.0;
        return in_.flu->at(std::min(d, origin_)).value_or(0.0);
    }

private:
    const features::FrameInputs& in_;
    DayStamp origin_;
    HourStamp last_obs_;
    std::span<const double> predicted_;
};

void append_day(features::CovariateFrame& out, const Timeline& tl, DayStamp day, const ExogenousOverride* ov) {
    const double temp = tl.temperature(day, ov);
    const double rt = tl.rt(day - 1);
    const double flu = tl.flu(day - 1);
    const double t1 = tl.day_total(day - 1), t2 = tl.day_total(day - 2), t7 = tl.day_total(day - 7);
    for (int j = 0; j < 24; ++j) {
        const HourStamp t = cal::first_hour(day) + j;
        const auto c = features::calendar_of(t);
        const std::array<double, features::kColumnCount> row{
            static_cast<double>(c.hour), static_cast<double>(c.day), static_cast<double>(c.quarter),
            temp,                        tl.count(t - 24),           tl.count(t - 25),
            tl.count(t - 26),            t1,                         t2,
            t7,                          rt,                         flu,
        };
        out.push_row(t, row, 0.0);
    }
}

}  // namespace

features::CovariateFrame future_rows(const features::FrameInputs& inputs, DayStamp origin, int max_h,
                                     std::span<const double> predicted, const ExogenousOverride* overrides) {
    if (max_h < 1) throw ConfigError("horizon must be at least 1 day");
    const Timeline tl(inputs, origin, predicted);
    features::CovariateFrame out;
    out.reserve(static_cast<std::size_t>(max_h) * 24);
    for (int k = 1; k <= max_h; ++k) append_day(out, tl, origin + k, overrides);
    return out;
}

std::vector<double> forecast_path(const gam::FittedModel& model, const features::FrameInputs& inputs,
                                  DayStamp origin, int max_h, const ExogenousOverride* overrides) {
    if (max_h < 1) throw ConfigError("horizon must be at least 1 day");
    std::vector<double> mu;
    mu.reserve(static_cast<std::size_t>(max_h) * 24);
    for (int k = 1; k <= max_h; ++k) {
        const Timeline tl(inputs, origin, mu);
        features::CovariateFrame rows;
        rows.reserve(24);
        append_day(rows, tl, origin + k, overrides);
        const auto day = gam::predict(model, rows);
        mu.insert(mu.end(), day.begin(), day.end());
    }
    return mu;
}

std::vector<double> forecast_horizon(const gam::FittedModel& model, const features::FrameInputs& inputs,
                                     DayStamp origin, int h, const ExogenousOverride* overrides) {
    const auto path = forecast_path(model, inputs, origin, h, overrides);
    return {path.end() - 24, path.end()};
}

MaeResult compute_mae(std::span<const double> predicted, std::span<const double> observed) {
    if (predicted.size() != observed.size()) throw ConfigError("predicted and observed differ in length");
    MaeResult r;
    double sum = 0.0;
    for (std::size_t i = 0; i < predicted.size(); ++i) {
        if (!std::isfinite(predicted[i]) || !std::isfinite(observed[i])) throw NumericError("non-finite forecast pair");
        if (observed[i] == 0.0) {
            ++r.excluded;
            continue;
        }
        const double e = 100.0 * (predicted[i] - observed[i]) / observed[i];
        r.errors_pct.push_back(e);
        sum += std::fabs(e);
    }
    r.n = r.errors_pct.size();
    if (r.n == 0) throw ValidationError("no forecast pairs with a non-zero observation");
    r.mae_pct = sum / static_cast<double>(r.n);
    return r;
}

namespace {

int max_horizon(const RollingPlan& plan) {
    if (plan.horizons.empty()) throw ConfigError("plan needs at least one horizon");
    int m = 0;
    for (const int h : plan.horizons) {
        if (h < 1) throw ConfigError("horizons must be >= 1 day");
        m = std::max(m, h);
    }
    return m;
}

DayStamp first_full_day(const data::EventSeries& e) {
    const DayStamp d = cal::day_of(e.start);
    return cal::hour_of(e.start) == 0 ? d : d + 1;
}

DayStamp last_full_day(const data::EventSeries& e) {
    const DayStamp d = cal::day_of(e.end());
    return cal::hour_of(e.end()) == 23 ? d : d - 1;
}

double observed_total(const data::EventSeries& e, DayStamp d) {
    double s = 0.0;
    for (int k = 0; k < 24; ++k) s += static_cast<double>(e.counts[static_cast<std::size_t>(cal::first_hour(d) + k - e.start)]);
    return s;
}

}  // namespace

std::vector<DayStamp> plan_origins(const data::EventSeries& events, const RollingPlan& plan) {
    const int mh = max_horizon(plan);
    if (plan.min_history_days < 8) throw ConfigError("minimum history must be at least 8 days");
    if (plan.refit_every < 1) throw ConfigError("refit cadence must be at least 1");
    const DayStamp f = first_full_day(events), l = last_full_day(events);
    DayStamp lo = f + plan.min_history_days - 1;
    if (plan.first_origin) lo = std::max(lo, *plan.first_origin);
    DayStamp hi = l - mh;
    if (plan.last_origin) hi = std::min(hi, *plan.last_origin);
    if (lo > hi) {
        throw ValidationError("no forecast origins: data cover " + std::to_string(l - f + 1) + " complete days, need " +
                              std::to_string(plan.min_history_days) + " of history plus " + std::to_string(mh));
    }
    std::vector<DayStamp> out;
    for (DayStamp d = lo; d <= hi; ++d) out.push_back(d);
    return out;
}

std::vector<HorizonMae> summarize(const std::vector<ForecastRow>& rows, const std::vector<int>& horizons,
                                  std::size_t skipped_origins) {
    std::vector<HorizonMae> out;
    for (const int h : horizons) {
        std::vector<double> p, o;
        for (const auto& r : rows) {
            if (r.horizon != h) continue;
            p.push_back(r.predicted);
            o.push_back(r.observed);
        }
        HorizonMae m;
        m.horizon = h;
        m.skipped = skipped_origins;
        m.mae_pct = std::numeric_limits<double>::quiet_NaN();
        if (!p.empty()) {
            try {
                const auto r = compute_mae(p, o);
                m.mae_pct = r.mae_pct;
                m.n = r.n;
            } catch (const ValidationError&) {
            }
        }
        out.push_back(m);
    }
    return out;
}

ForecastReport rolling_evaluate(const features::FrameInputs& inputs, const gam::ModelSpec& spec,
                                const RollingPlan& plan, const gam::FitOptions& fit_options,
                                const ExogenousOverride* overrides) {
    if (inputs.events == nullptr) throw ConfigError("rolling evaluation needs events");
    const int mh = max_horizon(plan);
    ForecastReport report;
    report.origins = plan_origins(*inputs.events, plan);

    struct GroupResult {
        std::vector<ForecastRow> rows;
        std::vector<SkippedOrigin> skipped;
        bool fitted = false;
    };
    const auto every = static_cast<std::size_t>(plan.refit_every);
    const std::size_t groups = (report.origins.size() + every - 1) / every;
    std::vector<GroupResult> results(groups);

    auto run_group = [&](std::size_t g, const gam::FitOptions& opt, gam::FittedModel* keep) {
        auto& res = results[g];
        const std::size_t first = g * every;
        const std::size_t last = std::min(report.origins.size(), first + every);
        try {
            const auto frame = features::assemble_frame(inputs, report.origins[first]).frame;
            auto model = gam::fit(frame, spec, opt);
            res.fitted = true;
            for (std::size_t i = first; i < last; ++i) {
                const DayStamp o = report.origins[i];
                try {
                    const auto path = forecast_path(model, inputs, o, mh, overrides);
                    for (const int h : plan.horizons) {
                        double pred = 0.0;
                        for (int k = 0; k < 24; ++k) pred += path[static_cast<std::size_t>((h - 1) * 24 + k)];
                        const double obs = observed_total(*inputs.events, o + h);
                        const double e = obs != 0.0 ? 100.0 * (pred - obs) / obs : std::numeric_limits<double>::quiet_NaN();
                        res.rows.push_back({o, h, pred, obs, e});
                    }
                } catch (const Error& e) {
                    res.skipped.push_back({o, e.what()});
                }
            }
            if (keep != nullptr) *keep = std::move(model);
        } catch (const Error& e) {
            for (std::size_t i = first; i < last; ++i) res.skipped.push_back({report.origins[i], e.what()});
        }
    };

    // The first group fits cold; its smoothing parameters and dispersion seed
    // every later group, so results do not depend on scheduling.
    gam::FittedModel seed_model;
    run_group(0, fit_options, &seed_model);
    gam::FitOptions warm = fit_options;
    if (results[0].fitted) {
        std::vector<double> rho;
        for (const double l : seed_model.lambda) rho.push_back(std::log(std::max(l, 1e-300)));
        warm.start_log_lambda = rho;
        warm.start_log_theta = std::log(seed_model.theta);
    }
    const int threads = std::max(1, plan.threads);
    if (threads == 1 || groups <= 2) {
        for (std::size_t g = 1; g < groups; ++g) run_group(g, warm, nullptr);
    } else {
        std::atomic<std::size_t> next{1};
        std::vector<std::thread> pool;
        for (int t = 0; t < threads; ++t) {
            pool.emplace_back([&] {
                for (std::size_t g = next++; g < groups; g = next++) run_group(g, warm, nullptr);
            });
        }
        for (auto& th : pool) th.join();
    }
    for (auto& r : results) {
        if (r.fitted) ++report.fits;
        report.rows.insert(report.rows.end(), r.rows.begin(), r.rows.end());
        report.skipped.insert(report.skipped.end(), r.skipped.begin(), r.skipped.end());
    }
    report.mae = summarize(report.rows, plan.horizons, report.skipped.size());
    return report;
}

namespace {

std::string fmt_or_na(double v, int decimals) { return std::isfinite(v) ? text::format_fixed(v, decimals) : "NA"; }

}  // namespace

std::string format_report(const ForecastReport& report) {
    std::string out = "origin,horizon_days,predicted,observed,rel_error_pct\n";
    for (const auto& r : report.rows) {
        out += cal::format_day(r.origin) + "," + std::to_string(r.horizon) + "," + fmt_or_na(r.predicted, 4) + "," +
               fmt_or_na(r.observed, 0) + "," + fmt_or_na(r.rel_error_pct, 6) + "\n";
    }
    return out;
}

std::string format_mae(const ForecastReport& report) {
    std::string out = "horizon_days,mae_pct,n,skipped\n";
    for (const auto& m : report.mae) {
        out += std::to_string(m.horizon) + "," + fmt_or_na(m.mae_pct, 6) + "," + std::to_string(m.n) + "," +
               std::to_string(m.skipped) + "\n";
    }
    return out;
}

std::string errors_svg(const ForecastReport& report) {
    svg::Plot plot;
    plot.title = "Relative forecast error by horizon";
    plot.x_label = "origin (days from first origin)";
    plot.y_label = "error (%)";
    const DayStamp first = report.origins.empty() ? 0 : report.origins.front();
    for (const auto& m : report.mae) {
        svg::Series s;
        s.label = std::to_string(m.horizon) + "-day";
        for (const auto& r : report.rows) {
            if (r.horizon != m.horizon) continue;
            s.x.push_back(static_cast<double>(r.origin - first));
            s.y.push_back(r.rel_error_pct);
        }
        plot.series.push_back(std::move(s));
    }
    plot.guides = {{5.0, "+5%"}, {-5.0, "-5%"}};
    return svg::render(plot);
}

}  // namespace emsf::forecast
