#pragma once

#include <span>

// Negative binomial (NB2) family with mean mu and size theta:
// Var(Y) = mu + mu^2 / theta; theta -> infinity recovers the Poisson.
namespace emsf::nb {

double log_pmf(double y, double mu, double theta);
double loglik(std::span<const double> y, std::span<const double> mu, double theta);

double unit_deviance(double y, double mu, double theta);
double deviance(std::span<const double> y, std::span<const double> mu, double theta);

inline double variance(double mu, double theta) { return mu + mu * mu / theta; }

// Validates finiteness and domain; throws NumericError.
void check_inputs(std::span<const double> y, std::span<const double> mu, double theta);

}  // namespace emsf::nb
