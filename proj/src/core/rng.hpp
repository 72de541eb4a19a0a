#pragma once

#include <array>
#include <cstdint>

namespace emsf {

// xoshiro256** (Blackman & Vigna), seeded through splitmix64. All variate
// generators below are written out here rather than taken from <random> so a
// given seed yields the same stream on every standard library.
class Rng {
public:
    explicit Rng(std::uint64_t seed);

    std::uint64_t next_u64();
    // Uniform on [0, 1) with 53 random bits.
    double uniform();
    // Uniform on (0, 1).
    double uniform_open();
    double normal();
    double normal(double mean, double sd) { return mean + sd * normal(); }
    // Gamma with the given shape and unit scale.
    double gamma(double shape);
    std::uint64_t poisson(double mean);
    // Negative binomial with mean mu and size theta (variance mu + mu^2/theta),
    // as a gamma-Poisson mixture.
    std::uint64_t negative_binomial(double mu, double theta);

private:
    std::array<std::uint64_t, 4> s_;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

}  // namespace emsf
