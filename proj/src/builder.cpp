#include "uavplan/builder.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "uavplan/sca.hpp"
#include "uavplan/units.hpp"

namespace uavplan {

namespace {

constexpr double kLn2 = 0.6931471805599453;

// Floor applied to expansion powers so the surrogate keeps a usable gradient
// when a previous iterate drove a power to (numerical) zero. The bound stays
// valid for any nonnegative expansion power.
constexpr double kPowerFloor = 1e-8;

std::vector<std::vector<double>> grid(int K, int N, double v = 0.0) {
  return std::vector<std::vector<double>>(K, std::vector<double>(N, v));
}

std::vector<std::vector<int>> igrid(int K, int N) {
  return std::vector<std::vector<int>>(K, std::vector<int>(N, -1));
}

struct VarStore {
  std::vector<double> lo, hi, warm;
  std::vector<std::string> names;

  int add(std::string name, double l, double h, double w) {
    lo.push_back(l);
    hi.push_back(h);
    warm.push_back(w);
    names.push_back(std::move(name));
    return static_cast<int>(lo.size()) - 1;
  }
  int size() const { return static_cast<int>(lo.size()); }
};

void check_shape(const Scenario& s, const Iterate& it) {
  const std::size_t K = s.devices.size();
  const std::size_t N = static_cast<std::size_t>(s.uav.n_slots);
  auto ok = [&](const std::vector<std::vector<double>>& g) {
    if (g.size() != K) return false;
    for (const auto& row : g)
      if (row.size() != N) return false;
    return true;
  };
  if (it.q.size() != N || it.lambda.size() != K || !ok(it.a1) || !ok(it.a2) ||
      !ok(it.p1) || !ok(it.p2) || !ok(it.z1) || !ok(it.z2) || !ok(it.t1) ||
      !ok(it.phi1) || !ok(it.phi2) || !ok(it.r1) || !ok(it.r2))
    throw std::invalid_argument("build_subproblem: iterate shape mismatch");
}

Scaling make_scaling(const Scenario& s) {
  Scaling sc;
  const auto& ch = s.channel;
  const auto& uav = s.uav;
  sc.len = uav.altitude_m;
  sc.z = std::pow(uav.altitude_m, ch.pathloss_exp);
  sc.noise = ch.noise_watts;
  sc.p1 = 0.0;
  for (double p : s.device_p_max_watts) sc.p1 = std::max(sc.p1, p);
  sc.p2 = 0.0;
  for (double p : uav.p_max_watts) sc.p2 = std::max(sc.p2, p);
  if (sc.p1 <= 0.0 || sc.p2 <= 0.0)
    throw std::invalid_argument("build_subproblem: nonpositive power budget");
  sc.rate = ch.bandwidth_hz;
  sc.bits = uav.slot_seconds * ch.bandwidth_hz;
  const double c = std::exp(-kEulerGamma) * ch.ref_gain;
  sc.gamma1 = c * sc.p1 / (sc.z * sc.noise);
  sc.gamma2 = c * sc.p2 / (sc.z * sc.noise);
  sc.rsi = ch.rsi_coeff * sc.p2 / sc.noise;
  return sc;
}

}  // namespace

Iterate make_iterate(const Scenario& s) {
  const int K = s.num_devices();
  const int N = s.num_slots();
  Iterate it;
  it.q.assign(N, Vec2::Zero());
  it.a1 = grid(K, N);
  it.a2 = grid(K, N);
  it.p1 = grid(K, N);
  it.p2 = grid(K, N);
  it.lambda.assign(K, 0.0);
  it.z1 = grid(K, N);
  it.z2 = grid(K, N);
  it.t1 = grid(K, N);
  it.phi1 = grid(K, N);
  it.phi2 = grid(K, N);
  it.r1 = grid(K, N);
  it.r2 = grid(K, N);
  return it;
}

BuiltProgram build_subproblem(const Scenario& s, const Iterate& exp_pt,
                              const BuildOptions& opt) {
  check_shape(s, exp_pt);
  const int K = s.num_devices();
  const int N = s.num_slots();
  const double alpha = s.channel.pathloss_exp;
  const bool hd = s.duplex == DuplexMode::HD;

  BuiltProgram bp;
  VariableLayout& L = bp.layout;
  L.K = K;
  L.N = N;
  L.hd = hd;
  L.has_t1 = !hd;
  L.scale = make_scaling(s);
  L.pathloss_exp = alpha;
  const Scaling& sc = L.scale;

  // Geometry-derived bounds (all in scaled units).
  double xlo = std::min(s.uav.start.x(), s.uav.goal.x());
  double xhi = std::max(s.uav.start.x(), s.uav.goal.x());
  double ylo = std::min(s.uav.start.y(), s.uav.goal.y());
  double yhi = std::max(s.uav.start.y(), s.uav.goal.y());
  auto grow = [&](const Vec2& w) {
    xlo = std::min(xlo, w.x());
    xhi = std::max(xhi, w.x());
    ylo = std::min(ylo, w.y());
    yhi = std::max(yhi, w.y());
  };
  grow(s.gateway);
  for (const auto& d : s.devices) grow(d.position);
  const double pad = std::max(s.area_m, 1.0);
  xlo -= pad;
  xhi += pad;
  ylo -= pad;
  yhi += pad;
  const double d_max_sq =
      ((xhi - xlo) * (xhi - xlo) + (yhi - ylo) * (yhi - ylo)) / (sc.len * sc.len);
  const double u_hi = 2.0 * std::sqrt(1.0 + d_max_sq);
  const double z_hi = 4.0 * std::pow(1.0 + d_max_sq, alpha / 2.0);
  const double t_hi = 2.0 * (1.0 + sc.rsi);
  const double phi_cap = 64.0;

  // Scaled device data and cache.
  std::vector<double> S(K);
  double S_sum = 0.0;
  for (int k = 0; k < K; ++k) {
    S[k] = s.devices[k].data_bits / sc.bits;
    S_sum += S[k];
  }
  const double C = s.uav.cache_bits / sc.bits;

  VarStore vs;
  auto tagkn = [](const char* base, int k, int n) {
    return std::string(base) + " k=" + std::to_string(k) + " n=" + std::to_string(n);
  };
  auto tagn = [](const char* base, int n) {
    return std::string(base) + " n=" + std::to_string(n);
  };
  auto tagk = [](const char* base, int k) {
    return std::string(base) + " k=" + std::to_string(k);
  };

  // --- Variables -----------------------------------------------------------
  L.qx.assign(N, -1);
  L.qy.assign(N, -1);
  for (int n = 0; n < N; ++n) {
    L.qx[n] = vs.add("qx[" + std::to_string(n) + "]", xlo / sc.len, xhi / sc.len,
                     exp_pt.q[n].x() / sc.len);
    L.qy[n] = vs.add("qy[" + std::to_string(n) + "]", ylo / sc.len, yhi / sc.len,
                     exp_pt.q[n].y() / sc.len);
  }

  L.a1 = igrid(K, N);
  L.a2 = igrid(K, N);
  L.p1 = igrid(K, N);
  L.p2 = igrid(K, N);
  for (int k = 0; k < K; ++k)
    for (int n = 0; n < N; ++n) {
      L.a1[k][n] = vs.add(tagkn("a1", k, n), 0.0, 1.0, exp_pt.a1[k][n]);
      L.a2[k][n] = vs.add(tagkn("a2", k, n), 0.0, 1.0, exp_pt.a2[k][n]);
      L.p1[k][n] = vs.add(tagkn("p1", k, n), 0.0, s.device_p_max_watts[n] / sc.p1,
                          exp_pt.p1[k][n] / sc.p1);
      L.p2[k][n] = vs.add(tagkn("p2", k, n), 0.0, s.uav.p_max_watts[n] / sc.p2,
                          exp_pt.p2[k][n] / sc.p2);
    }

  L.lambda.assign(K, -1);
  for (int k = 0; k < K; ++k)
    L.lambda[k] = vs.add(tagk("lambda", k), 0.0, 1.0, exp_pt.lambda[k]);

  L.z1 = igrid(K, N);
  L.z2 = igrid(K, N);
  L.t1 = igrid(K, N);
  L.phi1 = igrid(K, N);
  L.phi2 = igrid(K, N);
  L.r1 = igrid(K, N);
  L.r2 = igrid(K, N);
  L.s1 = igrid(K, N);
  L.s2 = igrid(K, N);
  L.u1 = igrid(K, N);
  L.u0.assign(N, -1);

  auto need_u0 = std::vector<bool>(N, false);

  for (int k = 0; k < K; ++k) {
    const Device& dev = s.devices[k];
    for (int n : s.ul_window(dev)) {
      const int i = n - 1;
      if (exp_pt.z1[k][i] / sc.z < kExpansionFloor ||
          (!hd && exp_pt.t1[k][i] / sc.noise < kExpansionFloor))
        throw std::domain_error("build_subproblem: degenerate expansion slack at " +
                                tagkn("ul", k, i));
      L.z1[k][i] = vs.add(tagkn("z1", k, i), 0.9, z_hi, exp_pt.z1[k][i] / sc.z);
      if (!hd)
        L.t1[k][i] =
            vs.add(tagkn("t1", k, i), 0.9, t_hi, exp_pt.t1[k][i] / sc.noise);
      L.phi1[k][i] = vs.add(tagkn("phi1", k, i), -phi_cap, phi_cap,
                            exp_pt.phi1[k][i] / sc.rate);
      L.r1[k][i] =
          vs.add(tagkn("r1", k, i), -phi_cap, phi_cap, exp_pt.r1[k][i] / sc.rate);
      L.s1[k][i] = vs.add(tagkn("s1", k, i), 0.0,
                          std::sqrt(s.device_p_max_watts[i] / sc.p1) + 1e-9,
                          std::sqrt(std::max(exp_pt.p1[k][i], 0.0) / sc.p1));
      L.u1[k][i] = vs.add(tagkn("u1", k, i), 0.9, u_hi,
                          std::pow(exp_pt.z1[k][i] / sc.z, 1.0 / alpha));
    }
    for (int n : s.dl_window(dev)) {
      const int i = n - 1;
      if (exp_pt.z2[k][i] / sc.z < kExpansionFloor)
        throw std::domain_error("build_subproblem: degenerate expansion slack at " +
                                tagkn("dl", k, i));
      need_u0[i] = true;
      L.z2[k][i] = vs.add(tagkn("z2", k, i), 0.9, z_hi, exp_pt.z2[k][i] / sc.z);
      L.phi2[k][i] = vs.add(tagkn("phi2", k, i), -phi_cap, phi_cap,
                            exp_pt.phi2[k][i] / sc.rate);
      L.r2[k][i] =
          vs.add(tagkn("r2", k, i), -phi_cap, phi_cap, exp_pt.r2[k][i] / sc.rate);
      L.s2[k][i] = vs.add(tagkn("s2", k, i), 0.0,
                          std::sqrt(s.uav.p_max_watts[i] / sc.p2) + 1e-9,
                          std::sqrt(std::max(exp_pt.p2[k][i], 0.0) / sc.p2));
    }
  }
  for (int n = 0; n < N; ++n)
    if (need_u0[n]) {
      const double dx = (exp_pt.q[n].x() - s.gateway.x()) / sc.len;
      const double dy = (exp_pt.q[n].y() - s.gateway.y()) / sc.len;
      L.u0[n] = vs.add(tagn("u0", n), 0.9, u_hi,
                       std::sqrt(1.0 + dx * dx + dy * dy) * 1.0000001);
    }

  // Aggregates, defined by equality rows; warm values computed in the same
  // association order as the rows so the equalities hold exactly.
  std::vector<double> w_r1sum(K, 0.0), w_r2sum(K, 0.0);
  std::vector<double> w_ul(N, 0.0), w_dl(N, 0.0);
  for (int k = 0; k < K; ++k) {
    for (int n : s.ul_window(s.devices[k])) {
      w_r1sum[k] += exp_pt.r1[k][n - 1] / sc.rate;
      w_ul[n - 1] += exp_pt.r1[k][n - 1] / sc.rate;
    }
    for (int n : s.dl_window(s.devices[k])) {
      w_r2sum[k] += exp_pt.r2[k][n - 1] / sc.rate;
      w_dl[n - 1] += exp_pt.r2[k][n - 1] / sc.rate;
    }
  }
  std::vector<double> w_suf(N, 0.0), w_pre(N, 0.0);
  for (int n = N - 1; n >= 0; --n)
    w_suf[n] = w_ul[n] + (n + 1 < N ? w_suf[n + 1] : 0.0);
  for (int n = 0; n < N; ++n) w_pre[n] = w_dl[n] + (n > 0 ? w_pre[n - 1] : 0.0);
  double w_lw = 0.0;
  for (int k = 0; k < K; ++k) w_lw += exp_pt.lambda[k] * S[k];

  const double sum_cap = phi_cap * N * std::max(K, 1) + 1.0;
  L.r1sum.assign(K, -1);
  L.r2sum.assign(K, -1);
  for (int k = 0; k < K; ++k) {
    L.r1sum[k] = vs.add(tagk("r1sum", k), -sum_cap, sum_cap, w_r1sum[k]);
    L.r2sum[k] = vs.add(tagk("r2sum", k), -sum_cap, sum_cap, w_r2sum[k]);
  }
  L.ul_slot.assign(N, -1);
  L.dl_slot.assign(N, -1);
  L.suf_ul.assign(N, -1);
  L.pre_dl.assign(N, -1);
  for (int n = 0; n < N; ++n) {
    L.ul_slot[n] = vs.add(tagn("ul_slot", n), -sum_cap, sum_cap, w_ul[n]);
    L.dl_slot[n] = vs.add(tagn("dl_slot", n), -sum_cap, sum_cap, w_dl[n]);
    L.suf_ul[n] = vs.add(tagn("suf_ul", n), -sum_cap, sum_cap, w_suf[n]);
    L.pre_dl[n] = vs.add(tagn("pre_dl", n), -sum_cap, sum_cap, w_pre[n]);
  }
  L.lam_weight = vs.add("lam_weight", -1.0, S_sum + 1.0, w_lw);

  if (opt.objective == Objective::Feasibility) {
    L.tau.assign(K, -1);
    double w_tau_bar = 1e300;
    for (int k = 0; k < K; ++k) {
      const double margin =
          std::min(w_r1sum[k], w_r2sum[k]) - exp_pt.lambda[k] * S[k];
      L.tau[k] = vs.add(tagk("tau", k), -(S_sum + sum_cap), sum_cap,
                        margin - 1e-6);
      w_tau_bar = std::min(w_tau_bar, margin - 1e-6);
    }
    L.tau_bar = vs.add("tau_bar", -(S_sum + sum_cap), sum_cap, w_tau_bar - 1e-6);
  }
  if (opt.objective == Objective::Rate) {
    L.rho.assign(K, -1);
    for (int k = 0; k < K; ++k)
      L.rho[k] = vs.add(tagk("rho", k), -sum_cap, sum_cap,
                        std::min(w_r1sum[k], w_r2sum[k]) - 1e-6);
  }

  ConicProgram& P = bp.program;
  L.num_vars = vs.size();
  P.num_vars = vs.size();
  P.lower_bounds = Eigen::Map<Eigen::VectorXd>(vs.lo.data(), vs.size());
  P.upper_bounds = Eigen::Map<Eigen::VectorXd>(vs.hi.data(), vs.size());
  P.warm_start = Eigen::Map<Eigen::VectorXd>(vs.warm.data(), vs.size());
  P.var_names = std::move(vs.names);
  P.objective = Eigen::VectorXd::Zero(P.num_vars);
  P.maximize = true;

  // Clamp the warm start into its box (powers at their maxima sit on the
  // boundary; the solver nudges further inward).
  for (int i = 0; i < P.num_vars; ++i)
    P.warm_start[i] = std::clamp(P.warm_start[i], P.lower_bounds[i], P.upper_bounds[i]);

  // --- Objective -----------------------------------------------------------
  if (opt.objective == Objective::Serve || opt.objective == Objective::Rate) {
    double pen_const = 0.0;
    for (int k = 0; k < K; ++k) {
      const double l0 = exp_pt.lambda[k];
      const double serve_w = opt.objective == Objective::Serve ? 1.0 : 0.0;
      P.objective[L.lambda[k]] = serve_w + opt.penalty_mu * (2.0 * l0 - 1.0);
      pen_const -= opt.penalty_mu * l0 * l0;
    }
    P.objective_constant = pen_const;
    if (opt.objective == Objective::Rate)
      for (int k = 0; k < K; ++k) P.objective[L.rho[k]] = 1.0;
  } else {
    P.objective[L.tau_bar] = 1.0;
  }

  // --- Equalities ----------------------------------------------------------
  auto add_eq = [&](AffineForm f, std::string tag) {
    P.equalities.push_back({std::move(f), std::move(tag)});
  };

  if (opt.fix_trajectory) {
    for (int n = 0; n < N; ++n) {
      AffineForm fx, fy;
      fx.add(L.qx[n], 1.0).constant = -exp_pt.q[n].x() / sc.len;
      fy.add(L.qy[n], 1.0).constant = -exp_pt.q[n].y() / sc.len;
      add_eq(std::move(fx), tagn("fixed-traj-x", n));
      add_eq(std::move(fy), tagn("fixed-traj-y", n));
    }
  } else {
    AffineForm e;
    e.add(L.qx[0], 1.0).constant = -s.uav.start.x() / sc.len;
    add_eq(std::move(e), "traj-start-x");
    e = {};
    e.add(L.qy[0], 1.0).constant = -s.uav.start.y() / sc.len;
    add_eq(std::move(e), "traj-start-y");
    e = {};
    e.add(L.qx[N - 1], 1.0).constant = -s.uav.goal.x() / sc.len;
    add_eq(std::move(e), "traj-goal-x");
    e = {};
    e.add(L.qy[N - 1], 1.0).constant = -s.uav.goal.y() / sc.len;
    add_eq(std::move(e), "traj-goal-y");
  }

  // Pinned allocations are substituted into the rows as constants after the
  // whole program is assembled, rather than carried as equality rows: pin
  // equalities couple hundreds of rigid directions into the Newton saddle
  // system and push its condition number past what double precision can
  // center against late in the barrier path.
  std::vector<std::pair<int, double>> pins;
  if (opt.fix_allocation) {
    for (int k = 0; k < K; ++k)
      for (int n = 0; n < N; ++n) {
        auto pin = [&](int var, double val) {
          // Shrink slightly so aggregate rows (slot bandwidth sum, power
          // budgets) that the pins would saturate keep a strict interior.
          val *= 1.0 - 1e-4;
          val = std::clamp(val, P.lower_bounds[var], P.upper_bounds[var]);
          pins.emplace_back(var, val);
        };
        pin(L.a1[k][n], exp_pt.a1[k][n]);
        pin(L.a2[k][n], exp_pt.a2[k][n]);
        pin(L.p1[k][n], exp_pt.p1[k][n] / sc.p1);
        pin(L.p2[k][n], exp_pt.p2[k][n] / sc.p2);
      }
  }

  for (int k = 0; k < K; ++k) {
    AffineForm f1, f2;
    f1.add(L.r1sum[k], 1.0);
    for (int n : s.ul_window(s.devices[k])) f1.add(L.r1[k][n - 1], -1.0);
    add_eq(std::move(f1), tagk("agg-r1sum", k));
    f2.add(L.r2sum[k], 1.0);
    for (int n : s.dl_window(s.devices[k])) f2.add(L.r2[k][n - 1], -1.0);
    add_eq(std::move(f2), tagk("agg-r2sum", k));
  }
  for (int n = 0; n < N; ++n) {
    AffineForm fu, fd;
    fu.add(L.ul_slot[n], 1.0);
    fd.add(L.dl_slot[n], 1.0);
    for (int k = 0; k < K; ++k) {
      if (L.r1[k][n] >= 0) fu.add(L.r1[k][n], -1.0);
      if (L.r2[k][n] >= 0) fd.add(L.r2[k][n], -1.0);
    }
    add_eq(std::move(fu), tagn("agg-ul-slot", n));
    add_eq(std::move(fd), tagn("agg-dl-slot", n));

    AffineForm fs, fp;
    fs.add(L.suf_ul[n], 1.0).add(L.ul_slot[n], -1.0);
    if (n + 1 < N) fs.add(L.suf_ul[n + 1], -1.0);
    add_eq(std::move(fs), tagn("agg-ul-suffix", n));
    fp.add(L.pre_dl[n], 1.0).add(L.dl_slot[n], -1.0);
    if (n > 0) fp.add(L.pre_dl[n - 1], -1.0);
    add_eq(std::move(fp), tagn("agg-dl-prefix", n));
  }
  {
    AffineForm f;
    f.add(L.lam_weight, 1.0);
    for (int k = 0; k < K; ++k) f.add(L.lambda[k], -S[k]);
    add_eq(std::move(f), "agg-lambda-weight");
  }

  // --- Shared per-slot constraints ----------------------------------------
  auto add_lin = [&](AffineForm f, std::string tag) {
    P.linear.push_back({std::move(f), std::move(tag)});
  };

  for (int n = 0; n < N; ++n) {
    AffineForm b1, b2, pw;
    b1.constant = -1.0;
    b2.constant = -1.0;
    pw.constant = -s.uav.p_max_watts[n] / sc.p2;
    for (int k = 0; k < K; ++k) {
      b1.add(L.a1[k][n], 1.0);
      b2.add(L.a2[k][n], 1.0);
      pw.add(L.p2[k][n], 1.0);
    }
    add_lin(std::move(b1), tagn("bw-sum-ul", n));
    add_lin(std::move(b2), tagn("bw-sum-dl", n));
    add_lin(std::move(pw), tagn("uav-power-sum", n));
  }

  if (!opt.fix_trajectory) {
    const double step = s.uav.max_step_m() / sc.len;
    for (int n = 1; n < N; ++n) {
      SocBlock blk;
      AffineForm vx, vy;
      vx.add(L.qx[n], 1.0).add(L.qx[n - 1], -1.0);
      vy.add(L.qy[n], 1.0).add(L.qy[n - 1], -1.0);
      blk.vec = {std::move(vx), std::move(vy)};
      blk.rhs.constant = step;
      blk.tag = tagn("speed", n);
      P.socs.push_back(std::move(blk));
    }
  }

  for (int n = 0; n < N; ++n) {
    AffineForm f;
    f.add(L.lam_weight, 1.0).constant = -C;
    if (n + 1 < N) f.add(L.suf_ul[n + 1], -1.0);
    if (n > 0) f.add(L.pre_dl[n - 1], -1.0);
    add_lin(std::move(f), tagn("cache", n));
  }

  // Gateway range epigraphs shared across devices.
  for (int n = 0; n < N; ++n)
    if (L.u0[n] >= 0) {
      SocBlock blk;
      AffineForm c0, vx, vy;
      c0.constant = 1.0;
      vx.add(L.qx[n], 1.0).constant = -s.gateway.x() / sc.len;
      vy.add(L.qy[n], 1.0).constant = -s.gateway.y() / sc.len;
      blk.vec = {std::move(c0), std::move(vx), std::move(vy)};
      blk.rhs.add(L.u0[n], 1.0);
      blk.tag = tagn("range-gw", n);
      P.socs.push_back(std::move(blk));
    }

  // u <= z^{1/alpha}; collapses to a quadratic when alpha == 2.
  auto add_cone_link = [&](int u_var, int z_var, std::string tag) {
    if (alpha == 2.0) {
      QuadBlock q;
      AffineForm sq;
      sq.add(u_var, 1.0);
      q.squares.push_back(std::move(sq));
      q.lin.add(z_var, -1.0);
      q.tag = std::move(tag);
      P.quads.push_back(std::move(q));
    } else {
      PowBlock pb;
      pb.small.add(u_var, 1.0);
      pb.big.add(z_var, 1.0);
      pb.theta = 1.0 / alpha;
      pb.tag = std::move(tag);
      P.pows.push_back(std::move(pb));
    }
  };

  // DC rate link: r_hat <= taylor lower bound of a*phi at (a0, phi0).
  auto add_dc_link = [&](int r_var, int a_var, int phi_var, double a0, double phi0,
                         std::string tag) {
    const double s0 = a0 + phi0;
    QuadBlock q;
    AffineForm sq;
    sq.add(a_var, 0.5).add(phi_var, -0.5);
    q.squares.push_back(std::move(sq));
    q.lin.add(r_var, 1.0)
        .add(a_var, -0.5 * s0)
        .add(phi_var, -0.5 * s0)
        .constant = 0.25 * s0 * s0;
    q.tag = std::move(tag);
    P.quads.push_back(std::move(q));
  };

  const double qos = s.qos_threshold_bps ? *s.qos_threshold_bps / sc.rate : -1.0;

  for (int k = 0; k < K; ++k) {
    const Device& dev = s.devices[k];
    const Vec2 w = dev.position / sc.len;

    for (int n : s.ul_window(dev)) {
      const int i = n - 1;
      // range: u1 >= ||(1, q - w)||, then u1 <= z1^{1/alpha}
      {
        SocBlock blk;
        AffineForm c0, vx, vy;
        c0.constant = 1.0;
        vx.add(L.qx[i], 1.0).constant = -w.x();
        vy.add(L.qy[i], 1.0).constant = -w.y();
        blk.vec = {std::move(c0), std::move(vx), std::move(vy)};
        blk.rhs.add(L.u1[k][i], 1.0);
        blk.tag = tagkn("range-ul", k, i);
        P.socs.push_back(std::move(blk));
      }
      add_cone_link(L.u1[k][i], L.z1[k][i], tagkn("cone-ul", k, i));

      // sqrt-power cone: s1^2 <= p1
      {
        QuadBlock q;
        AffineForm sq;
        sq.add(L.s1[k][i], 1.0);
        q.squares.push_back(std::move(sq));
        q.lin.add(L.p1[k][i], -1.0);
        q.tag = tagkn("sqrt-ul", k, i);
        P.quads.push_back(std::move(q));
      }

      const double p0 = std::max(exp_pt.p1[k][i] / sc.p1, kPowerFloor);
      const double z0 = exp_pt.z1[k][i] / sc.z;

      if (hd) {
        AffineForm f;
        const double g0 = sc.gamma1 * p0 / z0;
        const double xi_const = std::log2(1.0 + g0) - g0 / kLn2;
        const double c5 = 2.0 * sc.gamma1 * std::sqrt(p0) / (z0 * kLn2);
        const double c6 = sc.gamma1 * p0 / ((sc.gamma1 * p0 + z0) * z0 * kLn2);
        f.add(L.phi1[k][i], 1.0)
            .add(L.s1[k][i], -c5)
            .add(L.p1[k][i], c6 * sc.gamma1)
            .add(L.z1[k][i], c6)
            .constant = -xi_const;
        add_lin(std::move(f), tagkn("sur-ul", k, i));
      } else {
        // self-interference slack: t1 >= 1 + rsi * sum_{k* != k} p2_{k*}
        {
          AffineForm f;
          f.add(L.t1[k][i], -1.0).constant = 1.0;
          for (int kk = 0; kk < K; ++kk)
            if (kk != k) f.add(L.p2[kk][i], sc.rsi);
          add_lin(std::move(f), tagkn("rsi", k, i));
        }
        const double t0 = exp_pt.t1[k][i] / sc.noise;
        const double d0 = z0 * t0;
        const double g0 = sc.gamma1 * p0 / d0;
        const double xi1 = std::log2(1.0 + g0) - g0 / kLn2;
        const double c2 = 2.0 * sc.gamma1 * std::sqrt(p0) / (d0 * kLn2);
        const double c3 =
            sc.gamma1 * p0 / ((sc.gamma1 * p0 + d0) * d0 * kLn2);
        QuadBlock q;
        AffineForm sqt, sqz;
        sqt.add(L.t1[k][i], std::sqrt(c3 * z0 / (2.0 * t0)));
        sqz.add(L.z1[k][i], std::sqrt(c3 * t0 / (2.0 * z0)));
        q.squares = {std::move(sqt), std::move(sqz)};
        q.lin.add(L.phi1[k][i], 1.0)
            .add(L.s1[k][i], -c2)
            .add(L.p1[k][i], c3 * sc.gamma1)
            .constant = -xi1;
        q.tag = tagkn("sur-ul", k, i);
        P.quads.push_back(std::move(q));
      }

      add_dc_link(L.r1[k][i], L.a1[k][i], L.phi1[k][i], exp_pt.a1[k][i],
                  exp_pt.phi1[k][i] / sc.rate, tagkn("dc-ul", k, i));
      if (qos >= 0.0) {
        AffineForm f;
        f.add(L.a1[k][i], qos).add(L.r1[k][i], -1.0);
        add_lin(std::move(f), tagkn("qos-ul", k, i));
      }
    }

    for (int n : s.dl_window(dev)) {
      const int i = n - 1;
      add_cone_link(L.u0[i], L.z2[k][i], tagkn("cone-dl", k, i));
      {
        QuadBlock q;
        AffineForm sq;
        sq.add(L.s2[k][i], 1.0);
        q.squares.push_back(std::move(sq));
        q.lin.add(L.p2[k][i], -1.0);
        q.tag = tagkn("sqrt-dl", k, i);
        P.quads.push_back(std::move(q));
      }
      const double p0 = std::max(exp_pt.p2[k][i] / sc.p2, kPowerFloor);
      const double z0 = exp_pt.z2[k][i] / sc.z;
      const double g0 = sc.gamma2 * p0 / z0;
      const double xi4 = std::log2(1.0 + g0) - g0 / kLn2;
      const double c5 = 2.0 * sc.gamma2 * std::sqrt(p0) / (z0 * kLn2);
      const double c6 = sc.gamma2 * p0 / ((sc.gamma2 * p0 + z0) * z0 * kLn2);
      AffineForm f;
      f.add(L.phi2[k][i], 1.0)
          .add(L.s2[k][i], -c5)
          .add(L.p2[k][i], c6 * sc.gamma2)
          .add(L.z2[k][i], c6)
          .constant = -xi4;
      add_lin(std::move(f), tagkn("sur-dl", k, i));

      add_dc_link(L.r2[k][i], L.a2[k][i], L.phi2[k][i], exp_pt.a2[k][i],
                  exp_pt.phi2[k][i] / sc.rate, tagkn("dc-dl", k, i));
      if (qos >= 0.0) {
        AffineForm fq;
        fq.add(L.a2[k][i], qos).add(L.r2[k][i], -1.0);
        add_lin(std::move(fq), tagkn("qos-dl", k, i));
      }
    }

    // Timeout rows: lambda_k S_k <= |window| * (window total rate).
    const double ul_len = static_cast<double>(s.ul_window(dev).size());
    const double dl_len = static_cast<double>(s.dl_window(dev).size());
    {
      AffineForm f;
      f.add(L.lambda[k], S[k]).add(L.r1sum[k], -ul_len);
      add_lin(std::move(f), tagk("rt-ul", k));
    }
    {
      AffineForm f;
      f.add(L.lambda[k], S[k]).add(L.r2sum[k], -dl_len);
      add_lin(std::move(f), tagk("rt-dl", k));
    }

    if (opt.objective == Objective::Feasibility) {
      AffineForm f1, f2, fm;
      f1.add(L.tau[k], 1.0).add(L.r1sum[k], -1.0).add(L.lambda[k], S[k]);
      add_lin(std::move(f1), tagk("margin-ul", k));
      f2.add(L.tau[k], 1.0).add(L.r2sum[k], -1.0).add(L.lambda[k], S[k]);
      add_lin(std::move(f2), tagk("margin-dl", k));
      fm.add(L.tau_bar, 1.0).add(L.tau[k], -1.0);
      add_lin(std::move(fm), tagk("margin-min", k));
    } else {
      AffineForm f1, f2;
      f1.add(L.lambda[k], S[k]).add(L.r1sum[k], -1.0);
      add_lin(std::move(f1), tagk("service-ul", k));
      f2.add(L.lambda[k], S[k]).add(L.r2sum[k], -1.0);
      add_lin(std::move(f2), tagk("service-dl", k));
    }

    if (opt.objective == Objective::Rate) {
      AffineForm f1, f2;
      f1.add(L.rho[k], 1.0).add(L.r1sum[k], -1.0);
      add_lin(std::move(f1), tagk("rate-epi-ul", k));
      f2.add(L.rho[k], 1.0).add(L.r2sum[k], -1.0);
      add_lin(std::move(f2), tagk("rate-epi-dl", k));
    }
  }

  // Total relayed data must cover the served demand (FD formulations only).
  if (!hd) {
    AffineForm f;
    f.add(L.lam_weight, 1.0);
    for (int k = 0; k < K; ++k) f.add(L.r2sum[k], -1.0);
    add_lin(std::move(f), "dl-total-demand");
  }

  if (opt.objective == Objective::Rate && opt.lambda_floor >= 0.0) {
    if (opt.lambda_floor > K + 1e-9)
      throw std::invalid_argument("build_subproblem: lambda floor exceeds K");
    AffineForm f;
    f.constant = opt.lambda_floor;
    for (int k = 0; k < K; ++k) f.add(L.lambda[k], -1.0);
    add_lin(std::move(f), "serve-floor");
  }

  // --- Bookkeeping counts (model-level, not solver-level) ------------------
  auto& mc = P.modeling;
  const long KN = static_cast<long>(K) * N;
  if (!hd) {
    mc.variable_groups = {
        {"trajectory waypoints", 2L * N},
        {"per-slot bandwidth and power totals", 3L * N},
        {"bandwidth shares", 2 * KN},
        {"transmit powers", 2 * KN},
        {"range and interference slacks", 3 * KN},
        {"spectral-efficiency bounds", 2 * KN},
        {"per-slot rate bounds", 2 * KN},
        {"windowed rate bounds", 2 * KN},
        {"windowed throughput bounds", 2 * KN},
        {"service indicators", static_cast<long>(K)},
    };
    mc.constraint_groups = {
        {"bandwidth totals", 2L * N},
        {"bandwidth boxes", 2L * N},
        {"trajectory speed", static_cast<long>(N)},
        {"relay power total", static_cast<long>(N)},
        {"cache occupancy", static_cast<long>(N)},
        {"device power boxes", KN},
        {"range cones", 2 * KN},
        {"interference slacks", KN},
        {"spectral-efficiency surrogates", 2 * KN},
        {"rate surrogates", 2 * KN},
        {"timeouts", 2L * K},
        {"service coverage", 2L * K},
    };
  } else {
    mc.variable_groups = {
        {"trajectory waypoints", 2L * N},
        {"per-slot power totals", static_cast<long>(N)},
        {"bandwidth shares", 2 * KN},
        {"transmit powers", 2 * KN},
        {"range slacks", 2 * KN},
        {"spectral-efficiency bounds", 2 * KN},
        {"per-slot rate bounds", 2 * KN},
        {"windowed rate bounds", 2 * KN},
        {"service indicators", static_cast<long>(K)},
    };
    mc.constraint_groups = {
        {"bandwidth totals", 2L * N},
        {"bandwidth boxes", 2L * N},
        {"trajectory speed", static_cast<long>(N)},
        {"relay power total", static_cast<long>(N)},
        {"cache occupancy", static_cast<long>(N)},
        {"device power boxes", KN},
        {"range cones", 2 * KN},
        {"sqrt-power links", KN},
        {"spectral-efficiency surrogates", 2 * KN},
        {"rate surrogates", 2 * KN},
        {"timeouts", 2L * K},
        {"service coverage", 2L * K},
    };
  }

  if (!pins.empty()) {
    std::vector<double> pinval(P.num_vars,
                               std::numeric_limits<double>::quiet_NaN());
    for (const auto& [v, val] : pins) pinval[v] = val;
    auto fold = [&](AffineForm& f) {
      std::size_t w = 0;
      for (auto& [v, c] : f.terms) {
        if (!std::isnan(pinval[v]))
          f.constant += c * pinval[v];
        else
          f.terms[w++] = {v, c};
      }
      f.terms.resize(w);
    };
    for (auto& b : P.linear) fold(b.expr);
    for (auto& b : P.equalities) fold(b.expr);
    for (auto& b : P.quads) {
      for (auto& sq : b.squares) fold(sq);
      fold(b.lin);
    }
    for (auto& b : P.socs) {
      for (auto& v2 : b.vec) fold(v2);
      fold(b.rhs);
    }
    for (auto& b : P.pows) {
      fold(b.small);
      fold(b.big);
    }
    // Each pinned variable keeps only a tight private box centered on its
    // pin: it decouples from the Newton system entirely (zero gradient at
    // the box center, no off-diagonal Hessian entries) and extracts at the
    // pinned value to within the box half-width.
    for (const auto& [v, val] : pins) {
      P.objective_constant += P.objective[v] * val;
      P.objective[v] = 0.0;
      P.lower_bounds[v] = val - 1e-6;
      P.upper_bounds[v] = val + 1e-6;
      P.warm_start[v] = val;
    }
  }

  return bp;
}

Iterate extract_iterate(const VariableLayout& L, const Eigen::VectorXd& x) {
  if (x.size() != L.num_vars)
    throw std::invalid_argument("extract_iterate: point size mismatch");
  const Scaling& sc = L.scale;
  Iterate it;
  it.q.assign(L.N, Vec2::Zero());
  it.a1 = grid(L.K, L.N);
  it.a2 = grid(L.K, L.N);
  it.p1 = grid(L.K, L.N);
  it.p2 = grid(L.K, L.N);
  it.lambda.assign(L.K, 0.0);
  it.z1 = grid(L.K, L.N);
  it.z2 = grid(L.K, L.N);
  it.t1 = grid(L.K, L.N);
  it.phi1 = grid(L.K, L.N);
  it.phi2 = grid(L.K, L.N);
  it.r1 = grid(L.K, L.N);
  it.r2 = grid(L.K, L.N);

  for (int n = 0; n < L.N; ++n)
    it.q[n] = Vec2(x[L.qx[n]] * sc.len, x[L.qy[n]] * sc.len);
  for (int k = 0; k < L.K; ++k) {
    it.lambda[k] = x[L.lambda[k]];
    for (int n = 0; n < L.N; ++n) {
      it.a1[k][n] = x[L.a1[k][n]];
      it.a2[k][n] = x[L.a2[k][n]];
      it.p1[k][n] = x[L.p1[k][n]] * sc.p1;
      it.p2[k][n] = x[L.p2[k][n]] * sc.p2;
      if (L.z1[k][n] >= 0) it.z1[k][n] = x[L.z1[k][n]] * sc.z;
      if (L.z2[k][n] >= 0) it.z2[k][n] = x[L.z2[k][n]] * sc.z;
      if (L.t1[k][n] >= 0) it.t1[k][n] = x[L.t1[k][n]] * sc.noise;
      if (L.phi1[k][n] >= 0) it.phi1[k][n] = x[L.phi1[k][n]] * sc.rate;
      if (L.phi2[k][n] >= 0) it.phi2[k][n] = x[L.phi2[k][n]] * sc.rate;
      if (L.r1[k][n] >= 0) it.r1[k][n] = x[L.r1[k][n]] * sc.rate;
      if (L.r2[k][n] >= 0) it.r2[k][n] = x[L.r2[k][n]] * sc.rate;
    }
  }
  return it;
}

}  // namespace uavplan
