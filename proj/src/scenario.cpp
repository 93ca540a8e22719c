#include "uavplan/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <stdexcept>

#include "uavplan/rng.hpp"
#include "uavplan/units.hpp"

namespace uavplan {

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
  throw std::runtime_error("scenario: field '" + field + "': " + what);
}

Vec2 parse_vec2(const YAML::Node& n, const std::string& field) {
  if (!n || !n.IsSequence() || n.size() != 2) fail(field, "expected [x, y]");
  return Vec2(n[0].as<double>(), n[1].as<double>());
}

std::vector<double> parse_per_slot(const YAML::Node& n, int n_slots,
                                   const std::string& field, bool dbm) {
  std::vector<double> out;
  if (n.IsSequence()) {
    for (const auto& v : n) out.push_back(dbm ? dbm_to_watts(v.as<double>()) : v.as<double>());
    if (static_cast<int>(out.size()) != n_slots)
      fail(field, "per-slot list length does not match n_slots");
  } else {
    const double w = dbm ? dbm_to_watts(n.as<double>()) : n.as<double>();
    out.assign(n_slots, w);
  }
  return out;
}

}  // namespace

std::vector<int> Scenario::ul_window(const Device& d) const {
  std::vector<int> w;
  for (int n = d.slot_start; n <= d.slot_end; ++n) w.push_back(n);
  return w;
}

std::vector<int> Scenario::dl_window(const Device& d) const {
  std::vector<int> w;
  for (int n = d.slot_end + 1; n <= uav.n_slots; ++n) w.push_back(n);
  return w;
}

void Scenario::validate() const {
  const int N = uav.n_slots;
  if (N < 1) fail("uav.n_slots", "must be >= 1");
  if (channel.bandwidth_hz <= 0) fail("channel.bandwidth_hz", "must be > 0");
  if (channel.noise_watts <= 0) fail("channel.noise_watts", "must be > 0");
  if (channel.pathloss_exp < 2.0) fail("channel.pathloss_exp", "alpha must be >= 2");
  if (channel.rician_factor < 0) fail("channel.rician_factor", "must be >= 0");
  if (channel.rsi_coeff < 0 || channel.rsi_coeff >= 1.0)
    fail("channel.rsi_coeff", "rho^RSI must lie in [0, 1)");
  if (uav.altitude_m <= 0) fail("uav.altitude_m", "must be > 0");
  if (uav.v_max_mps <= 0) fail("uav.v_max_mps", "must be > 0");
  if (uav.slot_seconds <= 0) fail("uav.slot_seconds", "must be > 0");
  if (uav.cache_bits < 0) fail("uav.cache_bits", "must be >= 0");
  if (static_cast<int>(uav.p_max_watts.size()) != N)
    fail("uav.p_max_watts", "size must equal n_slots");
  if (static_cast<int>(device_p_max_watts.size()) != N)
    fail("device_p_max_watts", "size must equal n_slots");
  for (double p : uav.p_max_watts)
    if (p <= 0) fail("uav.p_max_watts", "entries must be > 0");
  for (double p : device_p_max_watts)
    if (p <= 0) fail("device_p_max_watts", "entries must be > 0");
  if (penalty_mu <= 0) fail("penalty_mu", "must be > 0");
  if (binary_tol <= 0) fail("binary_tol", "must be > 0");

  const double reach = (N - 1) * uav.max_step_m();
  if ((uav.start - uav.goal).norm() > reach + 1e-9)
    fail("uav.goal", "end location not reachable within (N-1)*delta_d");

  std::set<int> ids;
  for (const auto& d : devices) {
    std::ostringstream tag;
    tag << "devices[id=" << d.id << "]";
    if (!ids.insert(d.id).second) fail(tag.str() + ".id", "duplicate device id");
    if (d.data_bits <= 0) fail(tag.str() + ".data_bits", "must be > 0");
    if (d.slot_start < 1 || d.slot_start > d.slot_end || d.slot_end > N)
      fail(tag.str() + ".slot_start/slot_end", "need 1 <= n_start <= n_end <= N");
    if (d.position.x() < -area_m || d.position.x() > 2 * area_m ||
        d.position.y() < -area_m || d.position.y() > 2 * area_m)
      fail(tag.str() + ".position", "outside the configured area");
  }
  if (qos_threshold_bps && *qos_threshold_bps < 0)
    fail("qos_threshold_bps", "must be >= 0");
}

Scenario load_scenario(const std::string& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path);
  } catch (const std::exception& e) {
    throw std::runtime_error("scenario: cannot parse '" + path + "': " + e.what());
  }

  Scenario s;
  const YAML::Node ch = root["channel"];
  if (!ch) fail("channel", "missing section");
  s.channel.bandwidth_hz = ch["bandwidth_hz"].as<double>();
  if (ch["noise_dbm"])
    s.channel.noise_watts = dbm_to_watts(ch["noise_dbm"].as<double>());
  else if (ch["noise_watts"])
    s.channel.noise_watts = ch["noise_watts"].as<double>();
  else
    s.channel.noise_watts = noise_from_bandwidth(s.channel.bandwidth_hz);
  if (ch["ref_gain_db"])
    s.channel.ref_gain = db_to_linear(ch["ref_gain_db"].as<double>());
  else
    s.channel.ref_gain = ch["ref_gain"].as<double>();
  s.channel.pathloss_exp = ch["pathloss_exp"].as<double>();
  s.channel.rician_factor = ch["rician_factor"] ? ch["rician_factor"].as<double>() : 0.0;
  if (ch["rsi_db"])
    s.channel.rsi_coeff = db_to_linear(ch["rsi_db"].as<double>());
  else if (ch["rsi_coeff"])
    s.channel.rsi_coeff = ch["rsi_coeff"].as<double>();

  const YAML::Node uv = root["uav"];
  if (!uv) fail("uav", "missing section");
  s.uav.altitude_m = uv["altitude_m"].as<double>();
  s.uav.v_max_mps = uv["v_max_mps"].as<double>();
  s.uav.slot_seconds = uv["slot_seconds"].as<double>();
  s.uav.n_slots = uv["n_slots"].as<int>();
  s.uav.cache_bits = uv["cache_bits"].as<double>();
  s.uav.start = parse_vec2(uv["start"], "uav.start");
  s.uav.goal = parse_vec2(uv["goal"], "uav.goal");
  if (uv["p_max_dbm"])
    s.uav.p_max_watts = parse_per_slot(uv["p_max_dbm"], s.uav.n_slots, "uav.p_max_dbm", true);
  else
    s.uav.p_max_watts = parse_per_slot(uv["p_max_watts"], s.uav.n_slots, "uav.p_max_watts", false);

  s.gateway = parse_vec2(root["gateway"], "gateway");
  if (root["device_p_max_dbm"])
    s.device_p_max_watts =
        parse_per_slot(root["device_p_max_dbm"], s.uav.n_slots, "device_p_max_dbm", true);
  else
    s.device_p_max_watts =
        parse_per_slot(root["device_p_max_watts"], s.uav.n_slots, "device_p_max_watts", false);

  if (root["duplex"]) {
    const std::string m = root["duplex"].as<std::string>();
    if (m == "fd" || m == "FD")
      s.duplex = DuplexMode::FD;
    else if (m == "hd" || m == "HD")
      s.duplex = DuplexMode::HD;
    else
      fail("duplex", "expected fd or hd");
  }
  if (root["penalty_mu"]) s.penalty_mu = root["penalty_mu"].as<double>();
  if (root["binary_tol"]) s.binary_tol = root["binary_tol"].as<double>();
  if (root["qos_threshold_bps"]) s.qos_threshold_bps = root["qos_threshold_bps"].as<double>();
  if (root["area_m"]) s.area_m = root["area_m"].as<double>();

  const YAML::Node devs = root["devices"];
  if (!devs || !devs.IsSequence()) fail("devices", "missing device list");
  for (const auto& dn : devs) {
    Device d;
    d.id = dn["id"].as<int>();
    d.position = parse_vec2(dn["position"], "devices.position");
    d.data_bits = dn["data_bits"].as<double>();
    d.slot_start = dn["slot_start"].as<int>();
    d.slot_end = dn["slot_end"].as<int>();
    s.devices.push_back(d);
  }

  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  YAML::Emitter out;
  out.SetDoublePrecision(17);
  out << YAML::BeginMap;
  out << YAML::Key << "version" << YAML::Value << 1;
  out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "bandwidth_hz" << YAML::Value << s.channel.bandwidth_hz;
  out << YAML::Key << "noise_watts" << YAML::Value << s.channel.noise_watts;
  out << YAML::Key << "ref_gain" << YAML::Value << s.channel.ref_gain;
  out << YAML::Key << "pathloss_exp" << YAML::Value << s.channel.pathloss_exp;
  out << YAML::Key << "rician_factor" << YAML::Value << s.channel.rician_factor;
  out << YAML::Key << "rsi_coeff" << YAML::Value << s.channel.rsi_coeff;
  out << YAML::EndMap;
  out << YAML::Key << "uav" << YAML::Value << YAML::BeginMap;
  out << YAML::Key << "altitude_m" << YAML::Value << s.uav.altitude_m;
  out << YAML::Key << "v_max_mps" << YAML::Value << s.uav.v_max_mps;
  out << YAML::Key << "slot_seconds" << YAML::Value << s.uav.slot_seconds;
  out << YAML::Key << "n_slots" << YAML::Value << s.uav.n_slots;
  out << YAML::Key << "cache_bits" << YAML::Value << s.uav.cache_bits;
  out << YAML::Key << "p_max_watts" << YAML::Value << YAML::Flow << s.uav.p_max_watts;
  out << YAML::Key << "start" << YAML::Value << YAML::Flow
      << std::vector<double>{s.uav.start.x(), s.uav.start.y()};
  out << YAML::Key << "goal" << YAML::Value << YAML::Flow
      << std::vector<double>{s.uav.goal.x(), s.uav.goal.y()};
  out << YAML::EndMap;
  out << YAML::Key << "gateway" << YAML::Value << YAML::Flow
      << std::vector<double>{s.gateway.x(), s.gateway.y()};
  out << YAML::Key << "device_p_max_watts" << YAML::Value << YAML::Flow
      << s.device_p_max_watts;
  out << YAML::Key << "duplex" << YAML::Value
      << (s.duplex == DuplexMode::FD ? "fd" : "hd");
  out << YAML::Key << "penalty_mu" << YAML::Value << s.penalty_mu;
  out << YAML::Key << "binary_tol" << YAML::Value << s.binary_tol;
  if (s.qos_threshold_bps)
    out << YAML::Key << "qos_threshold_bps" << YAML::Value << *s.qos_threshold_bps;
  out << YAML::Key << "area_m" << YAML::Value << s.area_m;
  out << YAML::Key << "devices" << YAML::Value << YAML::BeginSeq;
  for (const auto& d : s.devices) {
    out << YAML::BeginMap;
    out << YAML::Key << "id" << YAML::Value << d.id;
    out << YAML::Key << "position" << YAML::Value << YAML::Flow
        << std::vector<double>{d.position.x(), d.position.y()};
    out << YAML::Key << "data_bits" << YAML::Value << d.data_bits;
    out << YAML::Key << "slot_start" << YAML::Value << d.slot_start;
    out << YAML::Key << "slot_end" << YAML::Value << d.slot_end;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq << YAML::EndMap;

  std::ofstream f(path);
  if (!f) throw std::runtime_error("scenario: cannot write '" + path + "'");
  f << out.c_str() << "\n";
}

Scenario make_random_scenario(std::uint64_t seed, int num_devices, int n_slots,
                              double area_m, double data_bits_lo, double data_bits_hi) {
  Scenario s;
  s.area_m = area_m;
  s.channel.bandwidth_hz = 20e6;
  s.channel.noise_watts = noise_from_bandwidth(20e6);
  s.channel.ref_gain = db_to_linear(-30.0);
  s.channel.pathloss_exp = 2.4;
  s.channel.rician_factor = 0.0;
  s.channel.rsi_coeff = db_to_linear(-80.0);
  s.uav.altitude_m = 100.0;
  s.uav.v_max_mps = 50.0;
  s.uav.slot_seconds = 0.5;
  s.uav.n_slots = n_slots;
  s.uav.p_max_watts.assign(n_slots, dbm_to_watts(18.0));
  s.device_p_max_watts.assign(n_slots, dbm_to_watts(10.0));
  // §V geometry scaled to the configured area (paper uses 500 m).
  const double f = area_m / 500.0;
  s.gateway = Vec2(0.0, 500.0 * f);
  s.uav.start = Vec2(500.0 * f, 200.0 * f);
  s.uav.goal = Vec2(300.0 * f, 0.0);
  // Short horizons cannot reach the reference goal; pull it toward the start
  // so the straight-line path uses at most 90% of the speed budget.
  const double reach = 0.9 * (n_slots - 1) * s.uav.max_step_m();
  const double dist = (s.uav.goal - s.uav.start).norm();
  if (dist > reach)
    s.uav.goal = s.uav.start + (s.uav.goal - s.uav.start) * (reach / dist);
  s.uav.cache_bits = 0.5 * num_devices * (data_bits_lo + data_bits_hi) / 2.0;

  CounterRng rng{seed};
  std::uint64_t c = 0;
  for (int k = 0; k < num_devices; ++k) {
    Device d;
    d.id = k + 1;
    d.position = Vec2(area_m * rng.uniform(c++), area_m * rng.uniform(c++));
    d.data_bits = data_bits_lo + (data_bits_hi - data_bits_lo) * rng.uniform(c++);
    // n_end uniform over the back two thirds of the horizon, n_start over the
    // front of the chosen window.
    const int n_end_min = std::max(1, n_slots / 3);
    const int n_end_max = std::max(n_end_min, n_slots - 2);
    d.slot_end = n_end_min +
                 static_cast<int>(rng.uniform(c++) * (n_end_max - n_end_min + 1));
    d.slot_end = std::min(d.slot_end, n_end_max);
    d.slot_start = 1 + static_cast<int>(rng.uniform(c++) * std::max(1, d.slot_end / 2));
    d.slot_start = std::min(d.slot_start, d.slot_end);
    s.devices.push_back(d);
  }
  s.validate();
  return s;
}

}  // namespace uavplan
