// Compares the serial and OpenMP Monte-Carlo rate estimators: identical
// results required, speedup reported.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>

#include "uavplan/channel.hpp"

using namespace uavplan;

namespace {

double time_run(bool parallel, std::size_t samples, double& out) {
  const auto t0 = std::chrono::steady_clock::now();
  McEstimate e = mc_expected_rate(1.0, 20e6, 25.0, {3.0, 42}, samples, parallel);
  out = e.rate_bps;
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

}  // namespace

int main(int argc, char** argv) {
  std::size_t samples = argc > 1 ? std::strtoull(argv[1], nullptr, 10) : 20000000;
  double serial_rate = 0.0, parallel_rate = 0.0;

  // Warm-up to stabilise thread pools and caches.
  double sink;
  time_run(true, samples / 10 + 1, sink);

  const double ts = time_run(false, samples, serial_rate);
  const double tp = time_run(true, samples, parallel_rate);

  std::printf("samples            %zu\n", samples);
  std::printf("serial             %.3f s  (%.6g bits/s)\n", ts, serial_rate);
  std::printf("openmp             %.3f s  (%.6g bits/s)\n", tp, parallel_rate);
  std::printf("speedup            %.2fx\n", ts / tp);
  if (serial_rate != parallel_rate) {
    std::printf("MISMATCH: serial and parallel estimates differ\n");
    return 1;
  }
  std::printf("estimates identical: yes\n");
  return 0;
}
