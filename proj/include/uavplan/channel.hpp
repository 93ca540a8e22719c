#pragma once

#include <cstdint>
#include <vector>

#include "uavplan/scenario.hpp"

namespace uavplan {

struct FadingModel {
  double rician_factor = 0.0;  // G, linear
  std::uint64_t rng_seed = 0;
};

struct RateSummary {
  std::vector<double> ul_rate;       // R_1k[n], bits/s, zero outside T_1k
  std::vector<double> dl_rate;       // R_2k[n], bits/s, zero outside T_2k
  double ul_total_rate = 0.0;        // R_1k = sum over window
  double dl_total_rate = 0.0;        // R_2k
  double ul_throughput_bits = 0.0;   // C_1k = delta_t * R_1k
  double dl_throughput_bits = 0.0;   // C_2k
};

struct McEstimate {
  double rate_bps = 0.0;
  double half_width_bps = 0.0;  // 99% confidence half-width
  double std_error_bps = 0.0;
};

double link_distance(const Vec2& q, const Vec2& w, double altitude_m);

// Gamma_1k of the UL SINR; interf_p2_sum is sum of other devices' DL powers.
double ul_sinr(double p1_watts, double gain_sq, double dist_m,
               double interf_p2_sum_watts, const ChannelParams& params);

// Lemma-1 expected-rate lower bounds, bits/s.
double rate_lower_bound_ul(double a1, double p1_watts, const Vec2& q, const Vec2& w_k,
                           double interf_p2_sum_watts, const ChannelParams& params,
                           const UavParams& uav);
double rate_lower_bound_dl(double a2, double p2_watts, const Vec2& q, const Vec2& w_0,
                           const ChannelParams& params, const UavParams& uav);

// HD rate bound (no RSI term in either direction).
double rate_hd(double a, double p_watts, const Vec2& q, const Vec2& w,
               const ChannelParams& params, const UavParams& uav);

// Applies the UL/DL service windows to raw per-slot rates (1-based raw[n-1]).
RateSummary windowed_rates(const std::vector<double>& raw_ul,
                           const std::vector<double>& raw_dl, const Device& device,
                           int n_slots, double slot_seconds);

// Monte-Carlo estimate of a*B*E[log2(1 + mean_snr*|h~|^2)]. For G = 0 the
// fading power is exponential with unit mean. Deterministic per seed; the
// OpenMP and serial paths produce identical results.
McEstimate mc_expected_rate(double a, double bandwidth_hz, double mean_snr_linear,
                            const FadingModel& fading, std::size_t samples,
                            bool parallel = true);

// Closed-form E[ln(1+X)] for X exponential with mean s: e^{1/s} E1(1/s).
double expected_log1p_exponential(double mean_snr_linear);

}  // namespace uavplan
