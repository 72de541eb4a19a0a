#pragma once

#include <functional>
#include <vector>

namespace emsf::optim {

struct NelderMeadOptions {
    double initial_step = 0.5;
    // Per-coordinate steps; overrides initial_step when non-empty.
    std::vector<double> steps;
    double f_tol = 1e-10;  // relative spread of simplex values
    double x_tol = 1e-8;   // absolute simplex diameter
    int max_evaluations = 2000;
};

struct NelderMeadResult {
    std::vector<double> x;
    double value = 0.0;
    int evaluations = 0;
    bool converged = false;
    std::vector<double> trace;  // best value after each iteration
};

// Derivative-free simplex minimization (standard reflection/expansion/
// contraction/shrink coefficients 1, 2, 1/2, 1/2). Deterministic.
NelderMeadResult nelder_mead(const std::function<double(const std::vector<double>&)>& f,
                             std::vector<double> x0, const NelderMeadOptions& options = {});

struct GoldenResult {
    double x = 0.0;
    double value = 0.0;
    int evaluations = 0;
};

// Minimizes a unimodal f on [lo, hi] to an interval of width tol.
GoldenResult golden_section(const std::function<double(double)>& f, double lo, double hi,
                            double tol = 1e-6);

}  // namespace emsf::optim
