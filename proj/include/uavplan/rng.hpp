#pragma once

#include <cmath>
#include <cstdint>

namespace uavplan {

// Counter-based generator: sample i of stream `seed` is a pure function of
// (seed, i), so estimates are bit-for-bit reproducible regardless of how the
// index range is partitioned across workers.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

struct CounterRng {
  std::uint64_t seed = 0;

  std::uint64_t bits(std::uint64_t counter) const {
    return splitmix64(splitmix64(seed) ^ counter);
  }

  // Uniform in (0, 1], never exactly 0.
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 1.0) * 0x1.0p-53;
  }

  // Unit-mean exponential.
  double exponential(std::uint64_t counter) const {
    return -std::log(uniform(counter));
  }

  // Standard normal pair via Box-Muller from counters (2c, 2c+1).
  void normal_pair(std::uint64_t counter, double& n0, double& n1) const {
    const double u1 = uniform(2 * counter);
    const double u2 = uniform(2 * counter + 1);
    const double r = std::sqrt(-2.0 * std::log(u1));
    n0 = r * std::cos(2.0 * M_PI * u2);
    n1 = r * std::sin(2.0 * M_PI * u2);
  }
};

}  // namespace uavplan
