#include "uavplan/channel.hpp"

#include <cmath>
#include <stdexcept>

#include "uavplan/rng.hpp"
#include "uavplan/units.hpp"

namespace uavplan {

double link_distance(const Vec2& q, const Vec2& w, double altitude_m) {
  if (altitude_m <= 0) throw std::domain_error("link_distance: altitude must be > 0");
  return std::sqrt(altitude_m * altitude_m + (q - w).squaredNorm());
}

double ul_sinr(double p1_watts, double gain_sq, double dist_m,
               double interf_p2_sum_watts, const ChannelParams& params) {
  const double denom = std::pow(dist_m, params.pathloss_exp) *
                       (params.rsi_coeff * interf_p2_sum_watts + params.noise_watts);
  return p1_watts * gain_sq * params.ref_gain / denom;
}

namespace {

double lemma1_rate(double a, double p_watts, double dist_sq, double noise_term,
                   const ChannelParams& params) {
  if (a == 0.0 || p_watts == 0.0) return 0.0;
  const double zeta = std::pow(dist_sq, params.pathloss_exp / 2.0) * noise_term;
  const double snr = std::exp(-kEulerGamma) * p_watts * params.ref_gain / zeta;
  return a * params.bandwidth_hz * std::log2(1.0 + snr);
}

}  // namespace

double rate_lower_bound_ul(double a1, double p1_watts, const Vec2& q, const Vec2& w_k,
                           double interf_p2_sum_watts, const ChannelParams& params,
                           const UavParams& uav) {
  const double nu = params.rsi_coeff * interf_p2_sum_watts + params.noise_watts;
  const double dist_sq = uav.altitude_m * uav.altitude_m + (q - w_k).squaredNorm();
  return lemma1_rate(a1, p1_watts, dist_sq, nu, params);
}

double rate_lower_bound_dl(double a2, double p2_watts, const Vec2& q, const Vec2& w_0,
                           const ChannelParams& params, const UavParams& uav) {
  const double dist_sq = uav.altitude_m * uav.altitude_m + (q - w_0).squaredNorm();
  return lemma1_rate(a2, p2_watts, dist_sq, params.noise_watts, params);
}

double rate_hd(double a, double p_watts, const Vec2& q, const Vec2& w,
               const ChannelParams& params, const UavParams& uav) {
  const double dist_sq = uav.altitude_m * uav.altitude_m + (q - w).squaredNorm();
  return lemma1_rate(a, p_watts, dist_sq, params.noise_watts, params);
}

RateSummary windowed_rates(const std::vector<double>& raw_ul,
                           const std::vector<double>& raw_dl, const Device& device,
                           int n_slots, double slot_seconds) {
  if (static_cast<int>(raw_ul.size()) != n_slots ||
      static_cast<int>(raw_dl.size()) != n_slots)
    throw std::invalid_argument("windowed_rates: raw rates must have N entries");
  RateSummary out;
  out.ul_rate.assign(n_slots, 0.0);
  out.dl_rate.assign(n_slots, 0.0);
  for (int n = 1; n <= n_slots; ++n) {
    if (n >= device.slot_start && n <= device.slot_end) {
      out.ul_rate[n - 1] = raw_ul[n - 1];
      out.ul_total_rate += raw_ul[n - 1];
    } else if (n > device.slot_end) {
      out.dl_rate[n - 1] = raw_dl[n - 1];
      out.dl_total_rate += raw_dl[n - 1];
    }
  }
  out.ul_throughput_bits = slot_seconds * out.ul_total_rate;
  out.dl_throughput_bits = slot_seconds * out.dl_total_rate;
  return out;
}

namespace {

double fading_power_sample(const FadingModel& fading, std::uint64_t i) {
  const CounterRng rng{fading.rng_seed};
  if (fading.rician_factor == 0.0) return rng.exponential(i);
  // |h~|^2 with h~ = sqrt(G/(1+G)) + sqrt(1/(1+G)) * CN(0,1); LoS phase fixed.
  const double G = fading.rician_factor;
  double nr, ni;
  rng.normal_pair(i, nr, ni);
  const double re = std::sqrt(G / (1.0 + G)) + std::sqrt(0.5 / (1.0 + G)) * nr;
  const double im = std::sqrt(0.5 / (1.0 + G)) * ni;
  return re * re + im * im;
}

}  // namespace

McEstimate mc_expected_rate(double a, double bandwidth_hz, double mean_snr_linear,
                            const FadingModel& fading, std::size_t samples,
                            bool parallel) {
  McEstimate out;
  if (a == 0.0 || mean_snr_linear == 0.0) return out;

  // Fixed block decomposition; blocks are summed independently and merged in
  // block order, so the result is identical for any thread count.
  const std::int64_t n = static_cast<std::int64_t>(samples);
  const std::int64_t n_blocks = std::min<std::int64_t>(n, 256);
  std::vector<double> block_sum(n_blocks, 0.0), block_sum_sq(n_blocks, 0.0);
#pragma omp parallel for schedule(static) if (parallel)
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    const std::int64_t lo = b * n / n_blocks;
    const std::int64_t hi = (b + 1) * n / n_blocks;
    double s = 0.0, s2 = 0.0;
    for (std::int64_t i = lo; i < hi; ++i) {
      const double v = std::log2(1.0 + mean_snr_linear * fading_power_sample(fading, i));
      s += v;
      s2 += v * v;
    }
    block_sum[b] = s;
    block_sum_sq[b] = s2;
  }
  double sum = 0.0, sum_sq = 0.0;
  for (std::int64_t b = 0; b < n_blocks; ++b) {
    sum += block_sum[b];
    sum_sq += block_sum_sq[b];
  }
  const double mean = sum / samples;
  const double var = std::max(0.0, sum_sq / samples - mean * mean);
  const double se = std::sqrt(var / samples);
  out.rate_bps = a * bandwidth_hz * mean;
  out.std_error_bps = a * bandwidth_hz * se;
  out.half_width_bps = 2.5758293035489 * out.std_error_bps;  // z_{0.995}
  return out;
}

double expected_log1p_exponential(double mean_snr_linear) {
  if (mean_snr_linear <= 0) throw std::domain_error("expected_log1p_exponential: need s > 0");
  const double x = 1.0 / mean_snr_linear;
  // E1(x) = -Ei(-x)
  return std::exp(x) * (-std::expint(-x));
}

}  // namespace uavplan
