#include "core/nb.hpp"

#include <cmath>

#include "core/error.hpp"

namespace emsf::nb {

double log_pmf(double y, double mu, double theta) {
    // theta * log(theta / (theta + mu)) written to stay exact as theta grows.
    const double size_term = -theta * std::log1p(mu / theta);
    if (y == 0.0) return size_term;
    double gamma_terms = 0.0;
    if (theta < 1e5) {
        gamma_terms = std::lgamma(y + theta) - std::lgamma(theta) - y * std::log(theta + mu);
    } else {
        // lgamma(y + theta) - lgamma(theta) - y log(theta + mu) via the Stirling
        // series, arranged so no large terms cancel.
        auto corr = [](double z) {
            const double z2 = z * z;
            return 1.0 / (12.0 * z) - 1.0 / (360.0 * z * z2) + 1.0 / (1260.0 * z * z2 * z2);
        };
        gamma_terms = (theta - 0.5) * std::log1p(y / theta) - y + y * std::log1p((y - mu) / (theta + mu)) +
                      corr(theta + y) - corr(theta);
    }
    return gamma_terms + y * std::log(mu) + size_term - std::lgamma(y + 1.0);
}

double loglik(std::span<const double> y, std::span<const double> mu, double theta) {
    check_inputs(y, mu, theta);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += log_pmf(y[i], mu[i], theta);
    return s;
}

double unit_deviance(double y, double mu, double theta) {
    // 2 [ y log(y / mu) - (y + theta) log((y + theta) / (mu + theta)) ]
    const double a = y > 0.0 ? y * std::log(y / mu) : 0.0;
    const double b = (y + theta) * std::log1p((y - mu) / (mu + theta));
    return 2.0 * (a - b);
}

double deviance(std::span<const double> y, std::span<const double> mu, double theta) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += unit_deviance(y[i], mu[i], theta);
    return s;
}

void check_inputs(std::span<const double> y, std::span<const double> mu, double theta) {
    if (y.size() != mu.size()) throw NumericError("y and mu differ in length");
    if (!(theta > 0.0) || !std::isfinite(theta)) throw NumericError("theta must be finite and positive");
    for (std::size_t i = 0; i < y.size(); ++i) {
        if (!std::isfinite(y[i]) || y[i] < 0.0 || y[i] != std::floor(y[i])) {
            throw NumericError("response must be a non-negative integer at row " + std::to_string(i));
        }
        if (!std::isfinite(mu[i]) || !(mu[i] > 0.0)) {
            throw NumericError("mean must be finite and positive at row " + std::to_string(i));
        }
    }
}

}  // namespace emsf::nb
