#include "uavplan/verify.hpp"

#include <algorithm>
#include <cmath>

namespace uavplan {

RateSummary true_rates(const Scenario& s, const Iterate& it, int k) {
  const int N = s.num_slots();
  const Device& dev = s.devices[k];
  std::vector<double> raw_ul(N, 0.0), raw_dl(N, 0.0);
  for (int n = 0; n < N; ++n) {
    if (s.duplex == DuplexMode::FD) {
      double interf = 0.0;
      for (int kk = 0; kk < s.num_devices(); ++kk)
        if (kk != k) interf += it.p2[kk][n];
      raw_ul[n] = rate_lower_bound_ul(it.a1[k][n], it.p1[k][n], it.q[n],
                                      dev.position, interf, s.channel, s.uav);
      raw_dl[n] = rate_lower_bound_dl(it.a2[k][n], it.p2[k][n], it.q[n],
                                      s.gateway, s.channel, s.uav);
    } else {
      raw_ul[n] = rate_hd(it.a1[k][n], it.p1[k][n], it.q[n], dev.position,
                          s.channel, s.uav);
      raw_dl[n] = rate_hd(it.a2[k][n], it.p2[k][n], it.q[n], s.gateway,
                          s.channel, s.uav);
    }
  }
  return windowed_rates(raw_ul, raw_dl, dev, N, s.uav.slot_seconds);
}

double VerifyReport::worst() const {
  double w = std::max({speed_residual, endpoint_residual, bandwidth_residual,
                       power_residual, box_residual, cache_residual,
                       dl_total_residual});
  for (const auto& d : devices)
    w = std::max({w, d.service_residual, d.timeout_residual});
  return w;
}

int VerifyReport::num_served() const {
  int c = 0;
  for (const auto& d : devices)
    if (d.served) ++c;
  return c;
}

double VerifyReport::served_bits() const {
  double b = 0.0;
  for (const auto& d : devices)
    if (d.served) b += d.demand_bits;
  return b;
}

double VerifyReport::relay_throughput_bits() const {
  double b = 0.0;
  for (const auto& d : devices) b += std::min(d.ul_bits, d.dl_bits);
  return b;
}

VerifyReport verify_iterate(const Scenario& s, const Iterate& it,
                            const std::vector<double>& lambda) {
  const int K = s.num_devices();
  const int N = s.num_slots();
  const double dt = s.uav.slot_seconds;
  VerifyReport rep;

  // Trajectory.
  const double dd = s.uav.max_step_m();
  for (int n = 1; n < N; ++n) {
    const double step = (it.q[n] - it.q[n - 1]).norm();
    rep.speed_residual = std::max(rep.speed_residual, (step - dd) / dd);
  }
  rep.endpoint_residual =
      std::max((it.q.front() - s.uav.start).norm(), (it.q.back() - s.uav.goal).norm()) /
      dd;
  rep.speed_residual = std::max(rep.speed_residual, 0.0);

  // Resource boxes and slot totals.
  for (int n = 0; n < N; ++n) {
    double a1s = 0.0, a2s = 0.0, p2s = 0.0;
    for (int k = 0; k < K; ++k) {
      a1s += it.a1[k][n];
      a2s += it.a2[k][n];
      p2s += it.p2[k][n];
      rep.box_residual = std::max(
          {rep.box_residual, -it.a1[k][n], it.a1[k][n] - 1.0, -it.a2[k][n],
           it.a2[k][n] - 1.0, -it.p1[k][n] / s.device_p_max_watts[n],
           (it.p1[k][n] - s.device_p_max_watts[n]) / s.device_p_max_watts[n],
           -it.p2[k][n] / s.uav.p_max_watts[n]});
    }
    rep.bandwidth_residual =
        std::max({rep.bandwidth_residual, a1s - 1.0, a2s - 1.0});
    rep.power_residual = std::max(
        rep.power_residual, (p2s - s.uav.p_max_watts[n]) / s.uav.p_max_watts[n]);
  }
  rep.power_residual = std::max(rep.power_residual, 0.0);
  rep.bandwidth_residual = std::max(rep.bandwidth_residual, 0.0);
  rep.box_residual = std::max(rep.box_residual, 0.0);

  // Rates and per-device rows.
  std::vector<RateSummary> rates(K);
  double served_demand = 0.0, dl_total_bits = 0.0, sum_S = 0.0;
  for (int k = 0; k < K; ++k) {
    rates[k] = true_rates(s, it, k);
    const Device& dev = s.devices[k];
    DeviceCheck dc;
    dc.id = dev.id;
    dc.served = lambda[k] > 0.5;
    dc.demand_bits = dev.data_bits;
    dc.ul_bits = rates[k].ul_throughput_bits;
    dc.dl_bits = rates[k].dl_throughput_bits;
    const double need = lambda[k] * dev.data_bits;
    dc.service_residual =
        std::max(0.0, need - std::min(dc.ul_bits, dc.dl_bits)) / dev.data_bits;
    // Timeout rows: lambda S <= |window| * delta_t * windowed rate total.
    const double ul_cap = s.ul_window(dev).size() * dt * rates[k].ul_total_rate;
    const double dl_cap = s.dl_window(dev).size() * dt * rates[k].dl_total_rate;
    dc.timeout_residual =
        std::max({0.0, (need - ul_cap) / dev.data_bits, (need - dl_cap) / dev.data_bits});
    rep.binary_residual =
        std::max(rep.binary_residual, lambda[k] * (1.0 - lambda[k]));
    served_demand += need;
    dl_total_bits += dc.dl_bits;
    sum_S += dev.data_bits;
    rep.devices.push_back(dc);
  }

  // Cache occupancy, worst over slots (1-based n).
  const double cache_scale = std::max(s.uav.cache_bits, sum_S);
  for (int n = 1; n <= N; ++n) {
    double occ = 0.0;
    for (int k = 0; k < K; ++k) {
      occ += lambda[k] * s.devices[k].data_bits;
      for (int l = n + 1; l <= N; ++l) occ -= dt * rates[k].ul_rate[l - 1];
      for (int l = 1; l <= n - 1; ++l) occ -= dt * rates[k].dl_rate[l - 1];
    }
    rep.cache_residual =
        std::max(rep.cache_residual, (occ - s.uav.cache_bits) / cache_scale);
  }
  rep.cache_residual = std::max(rep.cache_residual, 0.0);

  if (s.duplex == DuplexMode::FD && served_demand > 0.0)
    rep.dl_total_residual =
        std::max(0.0, (served_demand - dl_total_bits) / served_demand);

  return rep;
}

}  // namespace uavplan
