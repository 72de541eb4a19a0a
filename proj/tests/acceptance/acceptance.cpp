// Acceptance suite: one PASS/FAIL line per criterion. Exit status is the
// number of failed criteria.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <numeric>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "../common/synth_inputs.hpp"
#include "../common/toy.hpp"
#include "core/error.hpp"
#include "core/features.hpp"
#include "core/forecaster.hpp"
#include "core/gam.hpp"
#include "core/reference.hpp"
#include "core/rng.hpp"
#include "core/run.hpp"
#include "core/smoothers.hpp"
#include "core/synth.hpp"
#include "core/text.hpp"

using namespace emsf;
using Clock = std::chrono::steady_clock;

namespace {

int failed = 0;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, bool ok, const std::string& name, const std::string& detail) {
    if (!ok) ++failed;
    std::printf("%s criterion %d: %s (%s)\n", ok ? "PASS" : "FAIL", id, name.c_str(), detail.c_str());
    std::fflush(stdout);
}

std::string fmt(const char* f, double a) {
    char buf[128];
    std::snprintf(buf, sizeof buf, f, a);
    return buf;
}

double pearson(const std::vector<double>& a, const std::vector<double>& b) {
    const double n = static_cast<double>(a.size());
    const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
    const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
    double sab = 0, saa = 0, sbb = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

void splines() {
    const auto t0 = Clock::now();
    double unity = 0, cardinal = 0, affine = 0;
    const auto b = smooth::MarginBasis::bspline(0.0, 1.0, 10, 3, 2);
    for (int i = 0; i < 10000; ++i) {
        const double x = i / 9999.0;
        unity = std::max(unity, std::fabs(b.evaluate(x).sum() - 1.0));
    }
    const std::vector<double> knots{0, 2, 3, 5.5, 8, 9, 12, 23};
    const auto c = smooth::MarginBasis::crs(knots);
    for (std::size_t k = 0; k < knots.size(); ++k) {
        const auto row = c.evaluate(knots[k]);
        for (Eigen::Index j = 0; j < row.size(); ++j) {
            cardinal = std::max(cardinal, std::fabs(row[j] - (j == static_cast<Eigen::Index>(k) ? 1.0 : 0.0)));
        }
    }
    const auto s = smooth::difference_penalty(12, 2);
    for (const double slope : {0.0, 1.0, -3.5}) {
        smooth::Vector v(12);
        for (int i = 0; i < 12; ++i) v[i] = 2.0 + slope * i;
        affine = std::max(affine, std::fabs(v.dot(s * v)));
    }
    const double t = seconds_since(t0);
    report(1, unity < 1e-12 && cardinal < 1e-9 && affine < 1e-12 && t < 1.0, "spline correctness",
           "unity " + fmt("%.2e", unity) + ", cardinal " + fmt("%.2e", cardinal) + ", affine form " +
               fmt("%.2e", affine) + ", " + fmt("%.3f s", t));
}

void optimizer() {
    const auto t0 = Clock::now();
    double worst = 0;
    int not_converged = 0;
    for (int k = 0; k < 20; ++k) {
        const auto p = toy::family(k);
        const auto s = gam::select_lambda_theta(p.x, p.penalties, p.y);
        if (!s.fit.converged) ++not_converged;
        worst = std::max(worst, toy::fd_gradient_max(p, s.lambda, s.theta, s.fit.beta));
    }
    const double t = seconds_since(t0);
    report(2, worst < 1e-5 && not_converged == 0 && t < 30.0, "optimizer correctness",
           "20 problems, max |FD gradient| " + fmt("%.2e", worst) + ", " + fmt("%.1f s", t));
}

void poisson_limit() {
    const auto p = toy::make_problem(4242, 1000, 30, 3);
    const std::vector<double> lambda{1.5, 0.2, 8.0};
    gam::FitOptions o;
    o.pirls_tol = 1e-12;
    const auto nbfit = gam::pirls(p.x, p.penalties, lambda, 1e8, p.y, o);
    const auto pois = toy::poisson_fit(p, lambda);
    const double diff = (nbfit.beta - pois).cwiseAbs().maxCoeff();
    report(3, nbfit.converged && diff < 1e-4, "Poisson limit", "max coefficient difference " + fmt("%.2e", diff));
}

// Also provides the single-fit timing for criterion 9.
double recovery() {
    // One year of hourly rows: generate a little extra and keep the first 8760.
    const auto data = toy::synth_dataset(17, 380);
    const auto full = features::assemble_frame(data.inputs()).frame;
    if (full.size() < 8760) throw std::runtime_error("synthetic frame shorter than one year");
    features::CovariateFrame frame;
    frame.reserve(8760);
    for (std::size_t i = 0; i < 8760; ++i) frame.push_row(full.timestamps[i], full.row(i), full.y[i]);
    const auto t0 = Clock::now();
    const auto model = gam::fit(frame, gam::ModelSpec::standard());
    const double fit_seconds = seconds_since(t0);
    const auto truth = synth::GroundTruth::standard();

    const auto hour = gam::effect_grid(model, "hour", 200);
    std::vector<double> expected;
    for (const double x : hour.x1) expected.push_back(truth.hour_effect(x));
    const double r = pearson(hour.effect, expected);

    const auto day = gam::effect_grid(model, "day", 7);
    const auto fitted_best = std::max_element(day.effect.begin(), day.effect.end()) - day.effect.begin();
    int true_best = 1;
    for (int d = 2; d <= 7; ++d) {
        if (truth.day_effect(d) > truth.day_effect(true_best)) true_best = d;
    }
    const int fitted_day = static_cast<int>(std::lround(day.x1[static_cast<std::size_t>(fitted_best)]));
    report(4, r > 0.98 && fitted_day == true_best, "parameter recovery",
           "hour correlation " + fmt("%.4f", r) + ", day argmax " + std::to_string(fitted_day) + " vs " +
               std::to_string(true_best));

    const bool fast = model.converged && fit_seconds < 10.0;
    std::printf("     single fit: %zu rows, %ld coefficients, %.2f s, converged %d\n", model.rows,
                static_cast<long>(model.beta.size()), fit_seconds, model.converged ? 1 : 0);
    return fast ? fit_seconds : -fit_seconds;
}

struct SeedResult {
    double gam = NAN, naive = NAN, arima = NAN, ingarch = NAN;
    double seconds = 0;
    std::size_t origins = 0;
    std::size_t skipped = 0;
};

SeedResult evaluate_seed(std::uint64_t seed) {
    const auto data = toy::synth_dataset(seed, 745);
    run::RunConfig cfg;
    cfg.set("threads", "1");
    const auto t0 = Clock::now();
    const auto e = run::evaluate(data, cfg);
    SeedResult r;
    r.seconds = seconds_since(t0);
    r.origins = e.report.origins.size();
    r.skipped = e.report.skipped.size();
    for (const auto& b : e.benchmark) {
        if (b.horizon != 1) continue;
        if (b.method == "gam") r.gam = b.mae_pct;
        if (b.method == "naive") r.naive = b.mae_pct;
        if (b.method == "arima") r.arima = b.mae_pct;
        if (b.method == "ingarch") r.ingarch = b.mae_pct;
    }
    std::printf("     seed %llu: %zu origins (%zu skipped), one-day MAE gam %.3f naive %.3f arima %.3f ingarch %.3f, %.0f s\n",
                static_cast<unsigned long long>(seed), r.origins, r.skipped, r.gam, r.naive, r.arima, r.ingarch,
                r.seconds);
    std::fflush(stdout);
    return r;
}

std::vector<SeedResult> forecast_quality() {
    std::vector<SeedResult> out;
    bool ok = true;
    double worst_ratio = 0, slowest = 0;
    for (const std::uint64_t seed : {1, 2, 3}) {
        const auto r = evaluate_seed(seed);
        out.push_back(r);
        const double ratio = r.gam / r.naive;
        worst_ratio = std::max(worst_ratio, ratio);
        // The whole run, one year of origins, must fit the ten-minute budget.
        slowest = std::max(slowest, r.seconds);
        ok = ok && std::isfinite(r.gam) && ratio <= 0.8 && r.gam < r.arima && r.gam < r.ingarch && r.seconds < 600;
    }
    std::printf("     published ordering, not reproducible here: gam %.3f < naive %.3f < ingarch %.3f < arima %.3f\n",
                reference::gam_plain, reference::naive_plain, reference::ingarch_plain, reference::arima_plain);
    report(5, ok, "forecast-quality ordering",
           "worst gam/naive ratio " + fmt("%.3f", worst_ratio) + ", slowest " + fmt("%.0f s per seeded run", slowest));
    return out;
}

void metric() {
    Rng rng(606);
    std::vector<double> p, o;
    for (int i = 0; i < 1000; ++i) {
        p.push_back(1 + 500 * rng.uniform());
        o.push_back(1 + 500 * rng.uniform());
    }
    double brute = 0;
    for (std::size_t i = 0; i < p.size(); ++i) brute += std::fabs(p[i] - o[i]) / o[i];
    brute *= 100.0 / 1000.0;
    const double diff = std::fabs(forecast::compute_mae(p, o).mae_pct - brute);
    const double hand = forecast::compute_mae(std::vector<double>{110, 95}, std::vector<double>{100, 100}).mae_pct;
    report(6, diff < 1e-12 && hand == 7.5, "metric exactness",
           "brute-force difference " + fmt("%.2e", diff) + ", hand case " + fmt("%.17g%%", hand));
}

void rt_sanity() {
    const std::vector<double> flat(150, 250.0);
    const auto c = features::compute_rt(flat, 0);
    double worst = 0;
    for (std::size_t d = 40; d < flat.size(); ++d) worst = std::max(worst, std::fabs(c.rt[d] - 1.0));

    const auto si = features::discretized_gamma(6.6, 4.9);
    const std::vector<double> r(160, 1.3);
    Rng rng(1300);
    const auto inc = synth::simulate_renewal(r, si, 20.0, 14, 0.0, rng);
    const auto est = features::compute_rt(inc, 0, {si, 7, 12.0});
    double sum = 0;
    int n = 0;
    for (std::size_t d = 60; d < inc.size(); ++d) {
        if (!est.defined[d]) continue;
        sum += est.rt[d];
        ++n;
    }
    const double mean = n ? sum / n : NAN;
    report(7, worst < 0.01 && std::fabs(mean - 1.3) < 0.05, "Rt sanity",
           "constant incidence max |Rt-1| " + fmt("%.2e", worst) + ", renewal mean Rt " + fmt("%.4f", mean));
}

int run_cli(const std::string& args) {
    const std::string cmd = std::string("\"") + EMSF_CLI_PATH + "\" " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

void reproducibility() {
    namespace fs = std::filesystem;
    const fs::path work = fs::path(EMSF_WORK_DIR) / "repro";
    fs::remove_all(work);
    fs::create_directories(work);
    const auto data = (work / "data").string();
    bool ok = run_cli("synth --days 420 --seed 5 -o \"" + data + "\"") == 0;
    const std::string cfg = (work / "data" / "emsf.cfg").string();
    ok = ok && run_cli("evaluate -c \"" + cfg + "\" -o \"" + (work / "a").string() + "\"") == 0;
    ok = ok && run_cli("evaluate -c \"" + cfg + "\" -o \"" + (work / "b").string() + "\"") == 0;
    std::string detail;
    for (const char* f : {"report.csv", "mae.csv", "benchmark.csv"}) {
        if (!ok) break;
        const auto a = text::read_file((work / "a" / f).string());
        const auto b = text::read_file((work / "b" / f).string());
        const bool same = !a.empty() && a == b;
        ok = ok && same;
        detail += std::string(f) + (same ? " identical" : " differs") + ", ";
    }
    if (!ok && detail.empty()) detail = "CLI run failed, ";
    report(8, ok, "reproducibility", detail + "two CLI evaluate runs");
}

void performance(double fit_seconds, const std::vector<SeedResult>& seeds) {
    const bool fit_ok = fit_seconds >= 0;
    const auto& s = seeds.front();
    const bool eval_ok = s.origins >= 365 && s.seconds < 900;
    report(9, fit_ok && eval_ok, "performance envelope",
           "single fit " + fmt("%.2f s", std::fabs(fit_seconds)) + ", rolling evaluation of " +
               std::to_string(s.origins) + " origins with refits every 7 days " + fmt("%.0f s", s.seconds));
}

}  // namespace

int main() {
    try {
        splines();
        optimizer();
        poisson_limit();
        const double fit_seconds = recovery();
        const auto seeds = forecast_quality();
        metric();
        rt_sanity();
        reproducibility();
        performance(fit_seconds, seeds);
    } catch (const std::exception& e) {
        std::printf("FAIL acceptance run aborted: %s\n", e.what());
        return 100;
    }
    std::printf("%d of 9 criteria failed\n", failed);
    return failed;
}
