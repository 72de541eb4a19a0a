#include "core/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace emsf::optim {

NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options) {
    const std::size_t n = x0.size();
    NelderMeadResult result;
    int evals = 0;
    auto eval = [&](const std::vector<double>& x) {
        ++evals;
        const double v = f(x);
        return std::isfinite(v) ? v : HUGE_VAL;
    };

    if (n == 0) {
        result.x = x0;
        result.value = eval(x0);
        result.evaluations = evals;
        result.converged = true;
        return result;
    }

    std::vector<std::vector<double>> simplex(n + 1, x0);
    for (std::size_t i = 0; i < n; ++i) {
        const double step = options.steps.empty() ? options.initial_step : options.steps[i];
        simplex[i + 1][i] += step;
    }
    std::vector<double> values(n + 1);
    for (std::size_t i = 0; i <= n; ++i) values[i] = eval(simplex[i]);

    std::vector<std::size_t> order(n + 1);
    std::vector<double> centroid(n), trial(n), trial2(n);
    while (true) {
        std::iota(order.begin(), order.end(), 0);
        // Stable sort keeps tie-breaking deterministic.
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        const std::size_t best = order.front(), worst = order.back(), second = order[n - 1];
        result.trace.push_back(values[best]);

        double diameter = 0.0;
        for (std::size_t i = 0; i <= n; ++i) {
            for (std::size_t j = 0; j < n; ++j) {
                diameter = std::max(diameter, std::fabs(simplex[i][j] - simplex[best][j]));
            }
        }
        const double spread = std::fabs(values[worst] - values[best]);
        if (spread <= options.f_tol * (std::fabs(values[best]) + 1e-30) &&
            diameter <= options.x_tol) {
            result.converged = true;
            break;
        }
        if (spread == 0.0 && diameter <= options.x_tol * 1e3) {
            result.converged = true;
            break;
        }
        if (evals >= options.max_evaluations) break;

        std::fill(centroid.begin(), centroid.end(), 0.0);
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == worst) continue;
            for (std::size_t j = 0; j < n; ++j) centroid[j] += simplex[i][j];
        }
        for (auto& c : centroid) c /= static_cast<double>(n);

        for (std::size_t j = 0; j < n; ++j) trial[j] = centroid[j] + (centroid[j] - simplex[worst][j]);
        const double fr = eval(trial);
        if (fr < values[best]) {
            for (std::size_t j = 0; j < n; ++j)
                trial2[j] = centroid[j] + 2.0 * (centroid[j] - simplex[worst][j]);
            const double fe = eval(trial2);
            if (fe < fr) {
                simplex[worst] = trial2;
                values[worst] = fe;
            } else {
                simplex[worst] = trial;
                values[worst] = fr;
            }
            continue;
        }
        if (fr < values[second]) {
            simplex[worst] = trial;
            values[worst] = fr;
            continue;
        }
        const bool outside = fr < values[worst];
        for (std::size_t j = 0; j < n; ++j) {
            trial2[j] = outside ? centroid[j] + 0.5 * (trial[j] - centroid[j])
                                : centroid[j] + 0.5 * (simplex[worst][j] - centroid[j]);
        }
        const double fc = eval(trial2);
        if (fc < std::min(fr, values[worst])) {
            simplex[worst] = trial2;
            values[worst] = fc;
            continue;
        }
        for (std::size_t i = 0; i <= n; ++i) {
            if (i == best) continue;
            for (std::size_t j = 0; j < n; ++j)
                simplex[i][j] = simplex[best][j] + 0.5 * (simplex[i][j] - simplex[best][j]);
            values[i] = eval(simplex[i]);
        }
    }

    const auto best_it = std::min_element(values.begin(), values.end());
    const auto best = static_cast<std::size_t>(best_it - values.begin());
    result.x = simplex[best];
    result.value = values[best];
    result.evaluations = evals;
    return result;
}

GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                            double tol) {
    const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
    double a = lo, b = hi;
    double c = b - inv_phi * (b - a);
    double d = a + inv_phi * (b - a);
    double fc = f(c), fd = f(d);
    int evals = 2;
    while (b - a > tol) {
        if (fc <= fd) {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
        ++evals;
    }
    GoldenResult r;
    // Include the bracket ends so a boundary optimum is reported exactly.
    const double flo = f(lo), fhi = f(hi);
    evals += 2;
    r.x = fc <= fd ? c : d;
    r.value = std::min(fc, fd);
    if (flo < r.value) {
        r.x = lo;
        r.value = flo;
    }
    if (fhi < r.value) {
        r.x = hi;
        r.value = fhi;
    }
    r.evaluations = evals;
    return r;
}

}  // namespace emsf::optim
