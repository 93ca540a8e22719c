#include <CLI11.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include "uavplan/channel.hpp"
#include "uavplan/drivers.hpp"
#include "uavplan/plot.hpp"
#include "uavplan/sca.hpp"
#include "uavplan/sweep.hpp"
#include "uavplan/units.hpp"

namespace fs = std::filesystem;
using namespace uavplan;

namespace {

int cmd_run(const std::string& scenario_path, std::uint64_t seed, int devices,
            int slots, const std::string& out_dir, const std::string& mode,
            const std::string& duplex, const std::string& scheme,
            double threshold, int verbosity) {
  Scenario s;
  if (!scenario_path.empty())
    s = load_scenario(scenario_path);
  else if (devices > 0 && slots > 0)
    s = make_random_scenario(seed, devices, slots);
  else {
    std::cerr << "run: need --scenario or both --devices and --slots\n";
    return 2;
  }
  if (duplex == "fd")
    s.duplex = DuplexMode::FD;
  else if (duplex == "hd")
    s.duplex = DuplexMode::HD;

  RunOptions opt;
  opt.goal = mode == "rate" ? Objective::Rate : Objective::Serve;
  if (scheme == "fixed-trajectory")
    opt.scheme = Scheme::FixedTrajectory;
  else if (scheme == "fixed-allocation")
    opt.scheme = Scheme::FixedAllocation;
  if (threshold >= 0.0) opt.lambda_floor = threshold;
  opt.verbosity = verbosity;

  RunReport rep = run_plan(s, opt);

  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_run_report(rep, s, (dir / "report.txt").string(),
                   (dir / "trace.csv").string());
  emit_trajectory_plot(rep, s, (dir / "trajectory.svg").string());

  std::cout << "served " << rep.num_served << "/" << s.num_devices()
            << ", relay throughput " << rep.relay_throughput_bits / 1e6
            << " Mbit, " << rep.trace.size() << " iterations, "
            << (rep.converged ? "converged" : "not converged") << "\n";
  if (!rep.message.empty()) std::cout << "note: " << rep.message << "\n";
  std::cout << "reports in " << dir.string() << "\n";
  return 0;
}

int cmd_sweep(const std::string& spec_path, const std::string& out_dir) {
  SweepSpec spec = load_sweep_spec(spec_path);
  auto rows = run_sweep(spec);
  fs::create_directories(out_dir);
  const fs::path dir(out_dir);
  write_sweep_csv(rows, (dir / "results.csv").string(),
                  (dir / "timings.csv").string());
  int failures = 0;
  for (const auto& r : rows)
    if (!r.error.empty()) {
      ++failures;
      std::cerr << "row " << r.scheme << "/" << r.value << "/" << r.seed
                << " failed: " << r.error << "\n";
    }
  std::cout << rows.size() << " rows (" << failures << " failed) -> "
            << (dir / "results.csv").string() << "\n";
  return failures == 0 ? 0 : 1;
}

// Quick self-checks of the analytic machinery; heavier suites live in ctest.
int cmd_validate(const std::string& scenario_path, std::uint64_t seed) {
  int bad = 0;
  auto check = [&](bool ok, const std::string& what) {
    std::cout << (ok ? "  ok: " : "  FAIL: ") << what << "\n";
    if (!ok) ++bad;
  };

  if (!scenario_path.empty()) {
    try {
      Scenario s = load_scenario(scenario_path);
      s.validate();
      check(true, "scenario loads and validates");
    } catch (const std::exception& e) {
      check(false, std::string("scenario: ") + e.what());
    }
  }

  // Closed-form vs Monte-Carlo expected rate, exponential fading.
  for (double snr : {0.5, 5.0, 50.0}) {
    const McEstimate mc =
        mc_expected_rate(1.0, 1.0, snr, {0.0, seed}, 200000, true);
    const double cf = expected_log1p_exponential(snr) / std::log(2.0);
    check(std::abs(mc.rate_bps - cf) <= 4.0 * mc.std_error_bps + 1e-12,
          "MC rate matches closed form at snr " + std::to_string(snr));
    check(cf >= std::log2(1.0 + std::exp(-kEulerGamma) * snr),
          "closed form dominates the rate lower bound at snr " +
              std::to_string(snr));
  }

  // Surrogate sanity at one generic point.
  {
    const double x0 = 1.3, y0 = 0.7, z0 = 2.1, x = 2.0, y = 0.5, z = 3.0;
    const double h1 = log_quotient_lower_h1(x, y, z, x0, y0, z0);
    check(h1 <= std::log(1.0 + x / (y * z)) + 1e-12, "h1 is a lower bound");
    const double tight = log_quotient_lower_h1(x0, y0, z0, x0, y0, z0);
    check(std::abs(tight - std::log(1.0 + x0 / (y0 * z0))) <= 1e-10,
          "h1 is tight at the expansion point");
  }
  std::cout << (bad == 0 ? "validate: all checks passed\n"
                         : "validate: FAILURES present\n");
  return bad == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV relay planner: trajectory, bandwidth and power against "
               "latency and cache limits"};
  app.require_subcommand(1);

  std::string scenario_path, spec_path, out_dir = ".", mode = "serve";
  std::string duplex = "scenario", scheme = "proposed";
  std::uint64_t seed = 0;
  int devices = -1, slots = -1, verbosity = 0;
  double threshold = -1.0;

  auto* run = app.add_subcommand("run", "solve one scenario");
  run->add_option("--scenario", scenario_path, "scenario YAML file");
  run->add_option("--seed", seed, "generator seed (with --devices/--slots)");
  run->add_option("--devices", devices, "generate: number of devices");
  run->add_option("--slots", slots, "generate: number of time slots");
  run->add_option("--out-dir", out_dir, "output directory");
  run->add_option("--mode", mode, "serve | rate")
      ->check(CLI::IsMember({"serve", "rate"}));
  run->add_option("--duplex", duplex, "fd | hd | scenario")
      ->check(CLI::IsMember({"fd", "hd", "scenario"}));
  run->add_option("--scheme", scheme,
                  "proposed | fixed-trajectory | fixed-allocation")
      ->check(CLI::IsMember({"proposed", "fixed-trajectory", "fixed-allocation"}));
  run->add_option("--threshold", threshold, "rate mode: served-count floor");
  run->add_option("-v,--verbose", verbosity, "verbosity level");

  auto* sweep = app.add_subcommand("sweep", "batch parameter sweep");
  sweep->add_option("--spec", spec_path, "sweep spec YAML file")->required();
  sweep->add_option("--out-dir", out_dir, "output directory");

  auto* validate = app.add_subcommand("validate", "bound and oracle self-checks");
  validate->add_option("--scenario", scenario_path, "scenario YAML file");
  validate->add_option("--seed", seed, "Monte-Carlo seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed())
      return cmd_run(scenario_path, seed, devices, slots, out_dir, mode, duplex,
                     scheme, threshold, verbosity);
    if (sweep->parsed()) return cmd_sweep(spec_path, out_dir);
    return cmd_validate(scenario_path, seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
