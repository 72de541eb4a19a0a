#include "core/benchmarks.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>

#include "core/error.hpp"
#include "core/optim.hpp"
#include "core/text.hpp"

namespace emsf::bench {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void check_series(std::span<const double> y, const char* what, bool counts) {
    if (y.size() < 50) {
        throw ValidationError(std::string(what) + " needs at least 50 observations, got " + std::to_string(y.size()));
    }
    for (const double v : y) {
        if (!std::isfinite(v)) throw ValidationError(std::string(what) + ": non-finite value in series");
        if (counts && v < 0.0) throw ValidationError(std::string(what) + ": negative count");
    }
}

}  // namespace

double naive_forecast(std::span<const double> daily, std::size_t origin_index) {
    if (origin_index >= daily.size()) throw ConfigError("naive forecast origin outside the series");
    return daily[origin_index];
}

// ---------------------------------------------------------------------------
// ARIMA

bool is_causal(std::span<const double> ar, double tol) {
    std::size_t p = ar.size();
    while (p > 0 && ar[p - 1] == 0.0) --p;
    if (p == 0) return true;
    for (std::size_t i = 0; i < p; ++i) {
        if (!std::isfinite(ar[i])) return false;
    }
    if (p == 1) return std::fabs(ar[0]) < 1.0 / (1.0 + tol);
    Eigen::MatrixXd c = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p), static_cast<Eigen::Index>(p));
    for (std::size_t i = 0; i < p; ++i) c(0, static_cast<Eigen::Index>(i)) = ar[i];
    for (std::size_t i = 1; i < p; ++i) c(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(i - 1)) = 1.0;
    const Eigen::EigenSolver<Eigen::MatrixXd> es(c, false);
    return es.eigenvalues().cwiseAbs().maxCoeff() < 1.0 / (1.0 + tol);
}

bool is_invertible(std::span<const double> ma, double tol) {
    std::vector<double> neg(ma.begin(), ma.end());
    for (auto& v : neg) v = -v;
    return is_causal(neg, tol);
}

namespace {

struct Working {
    std::vector<double> z;
    std::size_t sum_from = 0;
};

std::vector<double> differenced(std::span<const double> y, int d) {
    if (d == 0) return {y.begin(), y.end()};
    std::vector<double> w(y.size() - 1);
    for (std::size_t t = 1; t < y.size(); ++t) w[t - 1] = y[t] - y[t - 1];
    return w;
}

// e_t = z_t - c - sum phi_i z_{t-i} - sum theta_j e_{t-j}, started at t = p
// with earlier residuals taken as zero.
double css(const std::vector<double>& z, int p, int q, const double* phi, const double* theta, double c,
           std::size_t sum_from, std::vector<double>* residuals) {
    const std::size_t n = z.size();
    std::vector<double> local;
    std::vector<double>& e = residuals != nullptr ? *residuals : local;
    e.assign(n, 0.0);
    double s = 0.0;
    for (std::size_t t = static_cast<std::size_t>(p); t < n; ++t) {
        double pred = c;
        for (int i = 0; i < p; ++i) pred += phi[i] * z[t - 1 - static_cast<std::size_t>(i)];
        for (int j = 0; j < q && static_cast<std::size_t>(j) < t; ++j) pred += theta[j] * e[t - 1 - static_cast<std::size_t>(j)];
        e[t] = z[t] - pred;
        if (t >= sum_from) s += e[t] * e[t];
    }
    return s;
}

// Least squares via column-pivoted QR (tolerates collinear regressors).
Eigen::VectorXd ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
    return x.colPivHouseholderQr().solve(y);
}

// Hannan-Rissanen: long autoregression for innovations, then a regression on
// lagged values and lagged innovations.
std::vector<double> hannan_rissanen(const std::vector<double>& z, int p, int q, bool constant) {
    const int k = p + q + (constant ? 1 : 0);
    std::vector<double> out(static_cast<std::size_t>(k), 0.0);
    if (k == 0) return out;
    const auto n = static_cast<Eigen::Index>(z.size());
    std::vector<double> ehat(z.size(), 0.0);
    Eigen::Index start = p;
    if (q > 0) {
        const Eigen::Index m = std::min<Eigen::Index>(std::max<Eigen::Index>(10, p + q + 5), n / 4);
        Eigen::MatrixXd x(n - m, m + 1);
        Eigen::VectorXd yy(n - m);
        for (Eigen::Index t = m; t < n; ++t) {
            x(t - m, 0) = 1.0;
            for (Eigen::Index i = 0; i < m; ++i) x(t - m, i + 1) = z[static_cast<std::size_t>(t - 1 - i)];
            yy(t - m) = z[static_cast<std::size_t>(t)];
        }
        const Eigen::VectorXd b = ols(x, yy);
        const Eigen::VectorXd r = yy - x * b;
        for (Eigen::Index t = m; t < n; ++t) ehat[static_cast<std::size_t>(t)] = r(t - m);
        start = m + q;
    }
    const Eigen::Index rows = n - start;
    if (rows <= k) return out;
    Eigen::MatrixXd x(rows, k);
    Eigen::VectorXd yy(rows);
    for (Eigen::Index t = start; t < n; ++t) {
        Eigen::Index c = 0;
        for (int i = 0; i < p; ++i) x(t - start, c++) = z[static_cast<std::size_t>(t - 1 - i)];
        for (int j = 0; j < q; ++j) x(t - start, c++) = ehat[static_cast<std::size_t>(t - 1 - j)];
        if (constant) x(t - start, c++) = 1.0;
        yy(t - start) = z[static_cast<std::size_t>(t)];
    }
    const Eigen::VectorXd b = ols(x, yy);
    for (int i = 0; i < k; ++i) out[static_cast<std::size_t>(i)] = std::isfinite(b(i)) ? b(i) : 0.0;
    return out;
}

bool valid_arma(const std::vector<double>& x, int p, int q) {
    return is_causal(std::span<const double>(x.data(), static_cast<std::size_t>(p))) &&
           is_invertible(std::span<const double>(x.data() + p, static_cast<std::size_t>(q)));
}

}  // namespace

ArimaFit fit_arima_order(std::span<const double> y, int p, int d, int q, bool constant, const ArimaOptions& options) {
    check_series(y, "ARIMA", false);
    if (p < 0 || q < 0 || d < 0 || p > options.max_p || q > options.max_q || d > options.max_d) {
        throw ConfigError("ARIMA order outside the search grid");
    }
    const std::vector<double> w = differenced(y, d);
    ArimaFit fit;
    fit.p = p;
    fit.d = d;
    fit.q = q;
    fit.has_constant = constant;
    double center = 0.0;
    if (constant) {
        for (const double v : w) center += v;
        center /= static_cast<double>(w.size());
    }
    double ss = 0.0;
    for (const double v : w) ss += (v - center) * (v - center);
    double scale = std::sqrt(ss / static_cast<double>(w.size()));
    if (!(scale > 0.0)) scale = 1.0;
    std::vector<double> z(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) z[i] = (w[i] - center) / scale;
    fit.center = center;
    fit.scale = scale;

    // Common sample: every candidate sums residuals over the same dates.
    const auto sum_from = static_cast<std::size_t>(options.max_p + options.max_d - d);
    fit.n_used = z.size() - sum_from;

    std::vector<double> x0 = hannan_rissanen(z, p, q, constant);
    for (int shrink = 0; shrink < 60 && !valid_arma(x0, p, q); ++shrink) {
        for (int i = 0; i < p + q; ++i) x0[static_cast<std::size_t>(i)] *= 0.8;
    }
    if (!valid_arma(x0, p, q)) std::fill(x0.begin(), x0.begin() + p + q, 0.0);

    const double n_used = static_cast<double>(fit.n_used);
    auto objective = [&](const std::vector<double>& x) {
        if (!valid_arma(x, p, q)) return HUGE_VAL;
        const double c = constant ? x[static_cast<std::size_t>(p + q)] : 0.0;
        return css(z, p, q, x.data(), x.data() + p, c, sum_from, nullptr) / n_used;
    };
    std::vector<double> x = x0;
    if (!x.empty()) {
        optim::NelderMeadOptions nm;
        nm.initial_step = 0.1;
        nm.f_tol = 1e-11;
        nm.x_tol = 1e-8;
        nm.max_evaluations = options.max_evaluations;
        x = optim::nelder_mead(objective, x0, nm).x;
        // A restart from the optimum guards against a collapsed simplex.
        nm.initial_step = 0.02;
        x = optim::nelder_mead(objective, x, nm).x;
    }
    if (!valid_arma(x, p, q)) {
        throw NumericError("ARIMA(" + std::to_string(p) + "," + std::to_string(d) + "," + std::to_string(q) +
                           ") has no causal invertible CSS fit");
    }
    fit.ar.assign(x.begin(), x.begin() + p);
    fit.ma.assign(x.begin() + p, x.begin() + p + q);
    fit.constant = constant ? x[static_cast<std::size_t>(p + q)] : 0.0;
    double phi_sum = 0.0;
    for (const double a : fit.ar) phi_sum += a;
    fit.mean = constant ? center + scale * fit.constant / (1.0 - phi_sum) : 0.0;
    fit.css = scale * scale * css(z, p, q, x.data(), x.data() + p, fit.constant, sum_from, nullptr);
    fit.sigma2 = std::max(fit.css / n_used, 1e-300);
    const double k = p + q + (constant ? 1 : 0) + 1;
    fit.aicc = n_used * (std::log(2.0 * std::numbers::pi * fit.sigma2) + 1.0) + 2.0 * k +
               2.0 * k * (k + 1.0) / (n_used - k - 1.0);
    return fit;
}

ArimaFit fit_arima(std::span<const double> y, const ArimaOptions& options, std::vector<ArimaCandidate>* candidates) {
    check_series(y, "ARIMA", false);
    struct Order {
        int p, d, q;
        bool c;
    };
    std::vector<Order> orders;
    for (int s = 0; s <= options.max_p + options.max_q; ++s) {
        for (int p = 0; p <= std::min(s, options.max_p); ++p) {
            const int q = s - p;
            if (q > options.max_q) continue;
            for (int d = 0; d <= options.max_d; ++d) {
                // Without differencing the mean is always estimated.
                if (d == 0) {
                    orders.push_back({p, d, q, true});
                } else {
                    orders.push_back({p, d, q, false});
                    orders.push_back({p, d, q, true});
                }
            }
        }
    }
    std::optional<ArimaFit> best;
    std::string diagnostics;
    for (const auto& o : orders) {
        ArimaCandidate cand{o.p, o.d, o.q, o.c, kNaN, false, ""};
        try {
            auto fit = fit_arima_order(y, o.p, o.d, o.q, o.c, options);
            cand.aicc = fit.aicc;
            cand.valid = std::isfinite(fit.aicc);
            if (cand.valid && (!best || fit.aicc < best->aicc - 1e-9 * std::max(1.0, std::fabs(best->aicc)))) {
                best = std::move(fit);
            }
        } catch (const NumericError& e) {
            cand.note = e.what();
            diagnostics += std::string(diagnostics.empty() ? "" : "; ") + e.what();
        }
        if (candidates != nullptr) candidates->push_back(cand);
    }
    if (!best) throw NumericError("no causal ARIMA candidate: " + diagnostics);
    return *best;
}

std::vector<double> arima_forecast(const ArimaFit& fit, std::span<const double> y, int max_h) {
    if (max_h < 1) throw ConfigError("horizon must be at least 1 day");
    if (y.size() < static_cast<std::size_t>(fit.p + fit.d + 1)) throw ValidationError("ARIMA history too short");
    const std::vector<double> w = differenced(y, fit.d);
    std::vector<double> z(w.size());
    for (std::size_t i = 0; i < w.size(); ++i) z[i] = (w[i] - fit.center) / fit.scale;
    std::vector<double> e;
    css(z, fit.p, fit.q, fit.ar.data(), fit.ma.data(), fit.constant, z.size(), &e);
    const std::size_t n = z.size();
    for (int h = 0; h < max_h; ++h) {
        const std::size_t t = z.size();
        double pred = fit.constant;
        for (int i = 0; i < fit.p; ++i) pred += fit.ar[static_cast<std::size_t>(i)] * z[t - 1 - static_cast<std::size_t>(i)];
        for (int j = 0; j < fit.q; ++j) {
            const std::size_t lag = t - 1 - static_cast<std::size_t>(j);
            if (lag < n) pred += fit.ma[static_cast<std::size_t>(j)] * e[lag];
        }
        z.push_back(pred);
    }
    std::vector<double> out(static_cast<std::size_t>(max_h));
    double level = y.back();
    for (int h = 0; h < max_h; ++h) {
        const double wf = fit.center + fit.scale * z[n + static_cast<std::size_t>(h)];
        if (fit.d == 1) {
            level += wf;
            out[static_cast<std::size_t>(h)] = level;
        } else {
            out[static_cast<std::size_t>(h)] = wf;
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// INGARCH(1,1)

namespace {

bool stationary(double a, double b) { return std::fabs(a) + std::fabs(b) < 1.0; }

double quasi_loglik(std::span<const double> y, double nu0, double c, double a, double b) {
    double nu = nu0, ll = 0.0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        nu = c + a * nu + b * std::log1p(y[t - 1]);
        if (!std::isfinite(nu) || nu > 40.0) return -HUGE_VAL;
        ll += y[t] * nu - std::exp(nu);
    }
    return ll;
}

}  // namespace

IngarchFit fit_ingarch(std::span<const double> y) {
    check_series(y, "INGARCH", true);
    double mean = 0.0;
    for (const double v : y) mean += v;
    mean /= static_cast<double>(y.size());
    if (!(mean > 0.0)) throw ValidationError("INGARCH: series is identically zero");
    IngarchFit fit;
    fit.nu0 = std::log(mean);
    const double scale = static_cast<double>(y.size()) * std::max(1.0, mean);

    auto objective = [&](const std::vector<double>& x) {
        if (!stationary(x[1], x[2])) return HUGE_VAL;
        return -quasi_loglik(y, fit.nu0, x[0], x[1], x[2]) / scale;
    };
    optim::NelderMeadOptions nm;
    nm.initial_step = 0.1;
    nm.f_tol = 1e-10;
    nm.x_tol = 1e-6;
    nm.max_evaluations = 2000;
    const auto res = optim::nelder_mead(objective, {std::log(mean), 0.3, 0.3}, nm);
    fit.evaluations = res.evaluations;
    if (!res.converged) {
        throw ConvergenceError("INGARCH quasi-likelihood did not converge after " + std::to_string(res.evaluations) +
                                   " evaluations",
                               res.trace);
    }
    Eigen::Vector3d x(res.x[0], res.x[1], res.x[2]);
    double ll = quasi_loglik(y, fit.nu0, x(0), x(1), x(2));

    // Fisher scoring polishes the simplex optimum; the pseudo-inverse copes
    // with the flat directions of degenerate series.
    for (int it = 0; it < 50; ++it) {
        Eigen::Vector3d g = Eigen::Vector3d::Zero(), dnu = Eigen::Vector3d::Zero();
        Eigen::Matrix3d info = Eigen::Matrix3d::Zero();
        double nu = fit.nu0;
        for (std::size_t t = 1; t < y.size(); ++t) {
            const Eigen::Vector3d base(1.0, nu, std::log1p(y[t - 1]));
            dnu = base + x(1) * dnu;
            nu = x(0) + x(1) * nu + x(2) * std::log1p(y[t - 1]);
            const double mu = std::exp(nu);
            g += (y[t] - mu) * dnu;
            info += mu * dnu * dnu.transpose();
        }
        Eigen::CompleteOrthogonalDecomposition<Eigen::Matrix3d> cod(info);
        cod.setThreshold(1e-12);
        const Eigen::Vector3d step = cod.solve(g);
        if (!step.allFinite()) break;
        double t = 1.0;
        bool moved = false;
        for (int k = 0; k < 30; ++k, t *= 0.5) {
            const Eigen::Vector3d xn = x + t * step;
            if (!stationary(xn(1), xn(2))) continue;
            const double lln = quasi_loglik(y, fit.nu0, xn(0), xn(1), xn(2));
            if (lln >= ll) {
                moved = lln > ll || (xn - x).cwiseAbs().maxCoeff() > 0.0;
                x = xn;
                ll = lln;
                break;
            }
        }
        if (!moved || (t * step).cwiseAbs().maxCoeff() < 1e-12) break;
    }
    fit.intercept = x(0);
    fit.a = x(1);
    fit.b = x(2);
    fit.quasi_loglik = ll;

    double r = 0.0, nu = fit.nu0;
    for (std::size_t t = 1; t < y.size(); ++t) {
        nu = fit.intercept + fit.a * nu + fit.b * std::log1p(y[t - 1]);
        const double mu = std::exp(nu);
        r += ((y[t] - mu) * (y[t] - mu) - mu) / (mu * mu);
    }
    const double inv = r / static_cast<double>(y.size() - 1);
    fit.theta = inv > 1e-8 ? std::max(1e-3, 1.0 / inv) : 1e8;
    return fit;
}

std::vector<double> ingarch_forecast(const IngarchFit& fit, std::span<const double> y, int max_h) {
    if (max_h < 1) throw ConfigError("horizon must be at least 1 day");
    if (y.empty()) throw ValidationError("INGARCH history is empty");
    double nu = fit.nu0;
    for (std::size_t t = 1; t < y.size(); ++t) nu = fit.intercept + fit.a * nu + fit.b * std::log1p(y[t - 1]);
    double last = y.back();
    std::vector<double> out;
    for (int h = 0; h < max_h; ++h) {
        nu = fit.intercept + fit.a * nu + fit.b * std::log1p(last);
        last = std::exp(nu);
        out.push_back(last);
    }
    return out;
}

// ---------------------------------------------------------------------------
// Comparison

Method naive_method() {
    return {"naive", [](std::span<const double>) -> DailyForecaster {
                return [](std::span<const double> history, int max_h) {
                    return std::vector<double>(static_cast<std::size_t>(max_h),
                                               naive_forecast(history, history.size() - 1));
                };
            }};
}

Method arima_method(const ArimaOptions& options) {
    return {"arima", [options](std::span<const double> training) -> DailyForecaster {
                auto fit = fit_arima(training, options);
                return [fit](std::span<const double> history, int max_h) { return arima_forecast(fit, history, max_h); };
            }};
}

Method ingarch_method() {
    return {"ingarch", [](std::span<const double> training) -> DailyForecaster {
                auto fit = fit_ingarch(training);
                return [fit](std::span<const double> history, int max_h) {
                    return ingarch_forecast(fit, history, max_h);
                };
            }};
}

std::vector<BenchmarkRow> evaluate_method(const Method& method, const data::DailyCounts& daily,
                                          const std::vector<DayStamp>& origins, const std::vector<int>& horizons,
                                          int refit_every) {
    if (horizons.empty()) throw ConfigError("benchmark needs at least one horizon");
    if (refit_every < 1) throw ConfigError("refit cadence must be at least 1");
    const int max_h = *std::max_element(horizons.begin(), horizons.end());
    const std::span<const double> all(daily.totals);
    auto index_of = [&](DayStamp d) {
        if (d < daily.start || d + max_h > daily.start + static_cast<DayStamp>(all.size()) - 1) {
            throw ConfigError("benchmark origin " + cal::format_day(d) + " outside the daily series");
        }
        return static_cast<std::size_t>(d - daily.start);
    };
    std::vector<std::vector<double>> pred(horizons.size()), obs(horizons.size());
    std::size_t failures = 0;
    const auto every = static_cast<std::size_t>(refit_every);
    for (std::size_t g = 0; g < origins.size(); g += every) {
        const std::size_t end = std::min(origins.size(), g + every);
        DailyForecaster f;
        try {
            f = method.fit(all.first(index_of(origins[g]) + 1));
        } catch (const Error&) {
            failures += end - g;
            continue;
        }
        for (std::size_t i = g; i < end; ++i) {
            const std::size_t o = index_of(origins[i]);
            try {
                const auto fc = f(all.first(o + 1), max_h);
                for (std::size_t k = 0; k < horizons.size(); ++k) {
                    const double v = fc[static_cast<std::size_t>(horizons[k] - 1)];
                    if (!std::isfinite(v)) throw NumericError("non-finite forecast");
                }
                for (std::size_t k = 0; k < horizons.size(); ++k) {
                    pred[k].push_back(fc[static_cast<std::size_t>(horizons[k] - 1)]);
                    obs[k].push_back(all[o + static_cast<std::size_t>(horizons[k])]);
                }
            } catch (const Error&) {
                ++failures;
            }
        }
    }
    std::vector<BenchmarkRow> rows;
    for (std::size_t k = 0; k < horizons.size(); ++k) {
        BenchmarkRow r{method.name, horizons[k], kNaN, 0, failures};
        if (!pred[k].empty()) {
            try {
                const auto m = forecast::compute_mae(pred[k], obs[k]);
                r.mae_pct = m.mae_pct;
                r.n_origins = m.n;
            } catch (const ValidationError&) {
            }
        }
        rows.push_back(r);
    }
    return rows;
}

std::vector<BenchmarkRow> benchmark_compare(const data::EventSeries& events, const forecast::ForecastReport& gam,
                                            const forecast::RollingPlan& plan, const std::vector<Method>& extra) {
    const auto daily = data::daily_totals(events);
    std::vector<BenchmarkRow> rows;
    for (const auto& m : gam.mae) rows.push_back({"gam", m.horizon, m.mae_pct, m.n, m.skipped});
    std::vector<Method> methods{arima_method(), naive_method(), ingarch_method()};
    methods.insert(methods.end(), extra.begin(), extra.end());
    for (const auto& method : methods) {
        auto r = evaluate_method(method, daily, gam.origins, plan.horizons, plan.refit_every);
        rows.insert(rows.end(), r.begin(), r.end());
    }
    return rows;
}

std::string format_benchmark(const std::vector<BenchmarkRow>& rows) {
    std::string out = "method,horizon_days,mae_pct,n_origins,failures\n";
    for (const auto& r : rows) {
        out += r.method + "," + std::to_string(r.horizon) + "," +
               (std::isfinite(r.mae_pct) ? text::format_fixed(r.mae_pct, 6) : std::string("NA")) + "," +
               std::to_string(r.n_origins) + "," + std::to_string(r.failures) + "\n";
    }
    return out;
}

}  // namespace emsf::bench
