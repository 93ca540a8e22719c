#pragma once

#include <Eigen/Core>
#include <optional>
#include <string>
#include <vector>

namespace uavplan {

using Vec2 = Eigen::Vector2d;

enum class DuplexMode { FD, HD };

struct Device {
  int id = 0;
  Vec2 position{0.0, 0.0};  // meters
  double data_bits = 0.0;   // S_k
  int slot_start = 1;       // n_start, 1-based
  int slot_end = 1;         // n_end, inclusive
};

// All gains stored linear, all powers in watts. dB/dBm appear only in the
// scenario file and are converted once at load.
struct ChannelParams {
  double bandwidth_hz = 20e6;     // B
  double noise_watts = 0.0;       // sigma^2
  double ref_gain = 1e-3;         // omega_0, linear
  double pathloss_exp = 2.4;      // alpha >= 2
  double rician_factor = 0.0;     // G, linear
  double rsi_coeff = 0.0;         // phi^RSI (= rho^RSI, loop gain fixed to 1)
};

struct UavParams {
  double altitude_m = 100.0;            // H
  double v_max_mps = 50.0;              // V_max
  double slot_seconds = 0.5;            // delta_t
  int n_slots = 1;                      // N
  double cache_bits = 0.0;              // C
  std::vector<double> p_max_watts;      // P_U^max[n], size N
  Vec2 start{0.0, 0.0};                 // q_I
  Vec2 goal{0.0, 0.0};                  // q_F
  double max_step_m() const { return v_max_mps * slot_seconds; }  // delta_d
  double horizon_s() const { return n_slots * slot_seconds; }     // T
};

struct Scenario {
  std::vector<Device> devices;
  Vec2 gateway{0.0, 0.0};                  // w_0
  ChannelParams channel;
  UavParams uav;
  std::vector<double> device_p_max_watts;  // P_k^max[n], size N (same for all k)
  DuplexMode duplex = DuplexMode::FD;
  double penalty_mu = 1.0;
  double binary_tol = 1e-3;
  std::optional<double> qos_threshold_bps;
  double area_m = 500.0;

  int num_devices() const { return static_cast<int>(devices.size()); }
  int num_slots() const { return uav.n_slots; }

  // UL window T_1k = {n_start..n_end}, DL window T_2k = {n_end+1..N}; 1-based.
  std::vector<int> ul_window(const Device& d) const;
  std::vector<int> dl_window(const Device& d) const;

  // Throws std::runtime_error naming the offending field on violation.
  void validate() const;
};

Scenario load_scenario(const std::string& path);
void save_scenario(const Scenario& s, const std::string& path);

// Seeded uniform device placement over [0, area]^2 with §V-style defaults.
// The paper leaves the placement distribution open; this is the documented
// choice used by every seeded regression.
Scenario make_random_scenario(std::uint64_t seed, int num_devices, int n_slots,
                              double area_m = 500.0,
                              double data_bits_lo = 1e7,
                              double data_bits_hi = 7e7);

}  // namespace uavplan
