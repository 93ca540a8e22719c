#include "uavplan/sweep.hpp"

#include <yaml-cpp/yaml.h>

#include <chrono>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <stdexcept>

#include "uavplan/sca.hpp"
#include "uavplan/units.hpp"

namespace uavplan {

namespace {

std::string fmt(double v) {
  std::ostringstream os;
  os << std::setprecision(12) << v;
  return os.str();
}

}  // namespace

bool parse_scheme_token(const std::string& token, DuplexMode& duplex,
                        Scheme& scheme) {
  if (token == "fd" || token == "hd")
    scheme = Scheme::Proposed;
  else if (token == "bfd1" || token == "bhd1")
    scheme = Scheme::FixedTrajectory;
  else if (token == "bfd2" || token == "bhd2")
    scheme = Scheme::FixedAllocation;
  else
    return false;
  duplex = token.find("hd") != std::string::npos ? DuplexMode::HD : DuplexMode::FD;
  return true;
}

void apply_parameter(Scenario& s, const std::string& name, double value) {
  if (name == "none") return;
  if (name == "cache_bits") {
    s.uav.cache_bits = value;
  } else if (name == "data_scale") {
    for (auto& d : s.devices) d.data_bits *= value;
  } else if (name == "uav_power_scale") {
    for (auto& p : s.uav.p_max_watts) p *= value;
  } else if (name == "device_power_scale") {
    for (auto& p : s.device_p_max_watts) p *= value;
  } else if (name == "bandwidth_hz") {
    s.channel.bandwidth_hz = value;
    s.channel.noise_watts = noise_from_bandwidth(value);
  } else if (name == "qos_threshold_bps") {
    s.qos_threshold_bps = value;
  } else {
    throw std::invalid_argument("sweep: unknown parameter '" + name + "'");
  }
}

SweepSpec load_sweep_spec(const std::string& path) {
  YAML::Node root = YAML::LoadFile(path);
  SweepSpec spec;
  if (root["scenario"]) spec.base_scenario_path = root["scenario"].as<std::string>();
  if (root["generator"]) {
    const auto& g = root["generator"];
    spec.gen_devices = g["devices"].as<int>();
    spec.gen_slots = g["slots"].as<int>();
    if (g["area"]) spec.gen_area = g["area"].as<double>();
  }
  if (spec.base_scenario_path.empty() && spec.gen_devices <= 0)
    throw std::runtime_error("sweep spec: need 'scenario' or 'generator'");
  if (root["parameter"]) spec.parameter = root["parameter"].as<std::string>();
  if (root["values"]) spec.values = root["values"].as<std::vector<double>>();
  if (root["schemes"]) spec.schemes = root["schemes"].as<std::vector<std::string>>();
  if (root["seeds"]) {
    spec.seeds.clear();
    for (const auto& n : root["seeds"]) spec.seeds.push_back(n.as<std::uint64_t>());
  }
  if (root["mode"]) spec.mode = root["mode"].as<std::string>();
  if (root["threshold"]) spec.threshold = root["threshold"].as<double>();
  if (spec.seeds.empty()) throw std::runtime_error("sweep spec: need >= 1 seed");
  if (spec.values.empty()) throw std::runtime_error("sweep spec: need >= 1 value");
  if (spec.mode != "serve" && spec.mode != "rate")
    throw std::runtime_error("sweep spec: mode must be serve or rate");
  for (const auto& t : spec.schemes) {
    DuplexMode d;
    Scheme sc;
    if (!parse_scheme_token(t, d, sc))
      throw std::runtime_error("sweep spec: unknown scheme '" + t + "'");
  }
  return spec;
}

Scenario sweep_scenario(const SweepSpec& spec, std::uint64_t seed, double value) {
  Scenario s = spec.base_scenario_path.empty()
                   ? make_random_scenario(seed, spec.gen_devices, spec.gen_slots,
                                          spec.gen_area)
                   : load_scenario(spec.base_scenario_path);
  apply_parameter(s, spec.parameter, value);
  return s;
}

RunOptions sweep_run_options(const SweepSpec& spec,
                             const std::string& scheme_token) {
  RunOptions opt;
  DuplexMode d;
  parse_scheme_token(scheme_token, d, opt.scheme);
  opt.goal = spec.mode == "rate" ? Objective::Rate : Objective::Serve;
  if (opt.goal == Objective::Rate) opt.lambda_floor = spec.threshold;
  return opt;
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  struct Job {
    std::string scheme;
    double value;
    std::uint64_t seed;
  };
  std::vector<Job> jobs;
  for (const auto& scheme : spec.schemes)
    for (double value : spec.values)
      for (std::uint64_t seed : spec.seeds) jobs.push_back({scheme, value, seed});

  std::vector<SweepRow> rows(jobs.size());
#pragma omp parallel for schedule(dynamic)
  for (int j = 0; j < static_cast<int>(jobs.size()); ++j) {
    const Job& job = jobs[j];
    SweepRow& row = rows[j];
    row.scheme = job.scheme;
    row.parameter = spec.parameter;
    row.value = job.value;
    row.seed = job.seed;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      Scenario s = sweep_scenario(spec, job.seed, job.value);
      DuplexMode duplex;
      Scheme scheme;
      parse_scheme_token(job.scheme, duplex, scheme);
      s.duplex = duplex;
      RunOptions opt = sweep_run_options(spec, job.scheme);
      RunReport rep = run_plan(s, opt);
      row.served_count = rep.num_served;
      row.served_pct = s.num_devices() > 0
                           ? 100.0 * rep.num_served / s.num_devices()
                           : 0.0;
      double achieved = 0.0;
      for (const auto& d : rep.verification.devices)
        if (d.served) achieved += std::min(d.ul_bits, d.dl_bits);
      row.achieved_bits = achieved;
      row.max_bits = rep.relay_throughput_bits;
      row.iterations = static_cast<int>(rep.trace.size());
      row.converged = rep.converged;
    } catch (const std::exception& e) {
      row.error = e.what();
    }
    row.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
  }
  return rows;
}

void write_sweep_csv(const std::vector<SweepRow>& rows,
                     const std::string& results_path,
                     const std::string& timings_path) {
  std::ofstream out(results_path);
  if (!out) throw std::runtime_error("sweep: cannot write " + results_path);
  out << "scheme,parameter,value,seed,served_pct,served_count,achieved_bits,"
         "max_bits,iterations,converged,error\n";
  for (const auto& r : rows) {
    std::string err = r.error;
    for (auto& c : err)
      if (c == ',' || c == '\n') c = ';';
    out << r.scheme << ',' << r.parameter << ',' << fmt(r.value) << ',' << r.seed
        << ',' << fmt(r.served_pct) << ',' << r.served_count << ','
        << fmt(r.achieved_bits) << ',' << fmt(r.max_bits) << ',' << r.iterations
        << ',' << (r.converged ? 1 : 0) << ',' << err << '\n';
  }
  if (timings_path.empty()) return;
  std::ofstream tout(timings_path);
  if (!tout) throw std::runtime_error("sweep: cannot write " + timings_path);
  tout << "scheme,parameter,value,seed,wall_seconds\n";
  for (const auto& r : rows)
    tout << r.scheme << ',' << r.parameter << ',' << fmt(r.value) << ','
         << r.seed << ',' << fmt(r.wall_seconds) << '\n';
}

void write_run_report(const RunReport& rep, const Scenario& s,
                      const std::string& report_path,
                      const std::string& trace_csv_path) {
  {
    std::ofstream out(report_path);
    if (!out) throw std::runtime_error("cannot write " + report_path);
    out << "uavplan run report\n";
    out << "devices: " << s.num_devices() << "\nslots: " << s.num_slots()
        << "\nduplex: " << (s.duplex == DuplexMode::FD ? "fd" : "hd") << "\n";
    out << "converged: " << (rep.converged ? "yes" : "no") << "\n";
    if (!rep.message.empty()) out << "message: " << rep.message << "\n";
    out << "iterations: " << rep.trace.size() << "\n";
    out << "served: " << rep.num_served << " / " << s.num_devices() << "\n";
    if (rep.lambda_floor_used >= 0.0)
      out << "served_floor: " << rep.lambda_floor_used << "\n";
    out << "relay_throughput_bits: " << fmt(rep.relay_throughput_bits) << "\n";
    out << "penalty: "
        << fmt(rep.trace.empty() ? 0.0 : rep.trace.back().penalty) << "\n";
    out << "worst_residual: " << fmt(rep.verification.worst()) << "\n";
    out << "served_ids:";
    for (std::size_t k = 0; k < rep.lambda_rounded.size(); ++k)
      if (rep.lambda_rounded[k] > 0.5) out << ' ' << s.devices[k].id;
    out << "\n";
  }
  std::ofstream out(trace_csv_path);
  if (!out) throw std::runtime_error("cannot write " + trace_csv_path);
  out << "iteration,mu,surrogate_at_expansion,solved_objective,true_objective,"
         "penalty,gap,newton_iterations,status,restart\n";
  for (const auto& t : rep.trace) {
    const char* st = t.status == SolveStatus::Optimal
                         ? "optimal"
                         : (t.status == SolveStatus::Infeasible ? "infeasible"
                                                                : "failure");
    out << t.iteration << ',' << fmt(t.mu) << ',' << fmt(t.surrogate_at_expansion)
        << ',' << fmt(t.solved_objective) << ',' << fmt(t.true_objective) << ','
        << fmt(t.penalty) << ',' << fmt(t.gap) << ',' << t.newton_iterations
        << ',' << st << ',' << (t.restart ? 1 : 0) << '\n';
  }
}

}  // namespace uavplan
