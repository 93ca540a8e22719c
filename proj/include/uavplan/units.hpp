#pragma once

#include <cmath>
#include <stdexcept>

namespace uavplan {

// Euler-Mascheroni constant, used in the Jensen-type expected-rate bound.
inline constexpr double kEulerGamma = 0.57721566490153286;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

inline double linear_to_db(double lin) {
  if (lin <= 0.0) throw std::domain_error("linear_to_db: non-positive value");
  return 10.0 * std::log10(lin);
}

inline double dbm_to_watts(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }

inline double watts_to_dbm(double w) {
  if (w <= 0.0) throw std::domain_error("watts_to_dbm: non-positive power");
  return 10.0 * std::log10(w / 1e-3);
}

// Thermal noise floor: (-174 + 10*log10(B)) dBm converted to watts.
inline double noise_from_bandwidth(double bandwidth_hz) {
  if (bandwidth_hz <= 0.0)
    throw std::domain_error("noise_from_bandwidth: bandwidth must be positive");
  return dbm_to_watts(-174.0 + 10.0 * std::log10(bandwidth_hz));
}

}  // namespace uavplan
