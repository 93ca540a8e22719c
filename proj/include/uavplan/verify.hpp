#pragma once

#include <vector>

#include "uavplan/builder.hpp"
#include "uavplan/channel.hpp"
#include "uavplan/scenario.hpp"

namespace uavplan {

// Per-device outcome under the exact expected-rate bounds (no surrogates).
struct DeviceCheck {
  int id = 0;
  bool served = false;
  double ul_bits = 0.0;    // delta_t * sum of windowed UL rates
  double dl_bits = 0.0;
  double demand_bits = 0.0;
  double service_residual = 0.0;  // max(0, served*S - min(ul, dl)) / S
  double timeout_residual = 0.0;  // RT rows, relative
};

// Residuals of the original (pre-approximation) constraints at an iterate,
// all relative to their natural scale; feasible when every residual <= tol.
struct VerifyReport {
  std::vector<DeviceCheck> devices;
  double speed_residual = 0.0;      // max step excess / delta_d
  double endpoint_residual = 0.0;   // / delta_d
  double bandwidth_residual = 0.0;  // max slot-sum excess over 1
  double power_residual = 0.0;      // max relative excess over the budgets
  double box_residual = 0.0;        // a, p, lambda range violations
  double cache_residual = 0.0;      // max occupancy excess / max(C, sum S)
  double dl_total_residual = 0.0;   // served demand not covered by DL (FD)
  double binary_residual = 0.0;     // max lambda(1-lambda)

  double worst() const;
  bool feasible(double tol) const { return worst() <= tol; }
  int num_served() const;
  double served_bits() const;
  double relay_throughput_bits() const;  // sum_k min(ul, dl) bits
};

// Evaluates an iterate's (q, a, p) under the exact rate bounds and the given
// service decisions. `served` may be the rounded lambda or the raw relaxation
// (then binary_residual reports how far it is from binary).
VerifyReport verify_iterate(const Scenario& s, const Iterate& it,
                            const std::vector<double>& lambda);

// True per-slot rates for one device (window-masked, bits/s).
RateSummary true_rates(const Scenario& s, const Iterate& it, int k);

}  // namespace uavplan
