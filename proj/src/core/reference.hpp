#pragma once

// Published one-day-ahead relative MAE (percent) on the original regional
// emergency data. That data is proprietary, so these values cannot be
// reproduced here; they are kept for documentation and report annotations.
namespace emsf::reference {

inline constexpr double gam_plain = 4.53;
inline constexpr double gam_metropolitan = 4.309;
inline constexpr double gam_lakes = 5.815;
inline constexpr double gam_alps = 6.241;

// Benchmarks on the Plain region.
inline constexpr double naive_plain = 7.359;
inline constexpr double ingarch_plain = 10.461;
inline constexpr double arima_plain = 11.177;

}  // namespace emsf::reference
