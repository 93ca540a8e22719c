#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "uavplan/drivers.hpp"
#include "uavplan/scenario.hpp"

namespace uavplan {

// Scheme tokens: fd / hd (proposed), bfd1 / bhd1 (fixed straight trajectory),
// bfd2 / bhd2 (fixed equal-share allocation).
bool parse_scheme_token(const std::string& token, DuplexMode& duplex,
                        Scheme& scheme);

// Swept parameters: cache_bits, data_scale (multiplies every S_k),
// uav_power_scale, device_power_scale, bandwidth_hz (noise follows the
// bandwidth), qos_threshold_bps, or none.
void apply_parameter(Scenario& s, const std::string& name, double value);

struct SweepSpec {
  // Either a scenario file or a seeded generator (devices > 0).
  std::string base_scenario_path;
  int gen_devices = -1;
  int gen_slots = -1;
  double gen_area = 500.0;

  std::string parameter = "none";
  std::vector<double> values{0.0};
  std::vector<std::string> schemes{"fd"};
  std::vector<std::uint64_t> seeds{0};
  std::string mode = "serve";  // serve | rate
  double threshold = -1.0;     // served-count floor for rate mode
};

SweepSpec load_sweep_spec(const std::string& path);

struct SweepRow {
  std::string scheme;
  std::string parameter;
  double value = 0.0;
  std::uint64_t seed = 0;
  double served_pct = 0.0;
  int served_count = 0;
  double achieved_bits = 0.0;  // served devices only
  double max_bits = 0.0;       // all devices
  int iterations = 0;
  bool converged = false;
  std::string error;           // empty on success
  double wall_seconds = 0.0;   // excluded from the deterministic CSV
};

// One row per (scheme, value, seed), in that order; rows run concurrently.
// Driver failures are recorded in the row and do not abort the sweep.
std::vector<SweepRow> run_sweep(const SweepSpec& spec);

// results_path gets the deterministic table (no timings); timings_path (when
// non-empty) gets the wall-clock column keyed by the same row identity.
void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& results_path,
                     const std::string& timings_path);

// Human-readable run record plus a per-iteration objective trace in CSV.
void write_run_report(const RunReport& rep, const Scenario& s,
                      const std::string& report_path,
                      const std::string& trace_csv_path);

// Builds the scenario a sweep row sees (generator or file, then parameter).
Scenario sweep_scenario(const SweepSpec& spec, std::uint64_t seed, double value);

RunOptions sweep_run_options(const SweepSpec& spec, const std::string& scheme_token);

}  // namespace uavplan
