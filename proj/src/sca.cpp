#include "uavplan/sca.hpp"

#include <cmath>
#include <stdexcept>

#include "uavplan/units.hpp"

namespace uavplan {

namespace {

void require_positive(double v, const char* name) {
  if (!(v > 0.0)) throw std::domain_error(std::string("sca: ") + name + " must be > 0");
}

void require_floor(double v, const char* name) {
  require_positive(v, name);
  if (v < kExpansionFloor)
    throw std::domain_error(std::string("sca: expansion value ") + name +
                            " below degeneracy floor");
}

}  // namespace

double sqrt_bilinear_upper(double x, double y, double x0, double y0) {
  require_positive(x, "x");
  require_positive(y, "y");
  require_floor(x0, "x0");
  require_floor(y0, "y0");
  return (std::sqrt(x0) / (2.0 * std::sqrt(y0))) * y +
         (std::sqrt(y0) / (2.0 * std::sqrt(x0))) * x;
}

double log_quotient_lower_h1_raw(double x, double y, double z, double x0, double y0,
                                 double z0) {
  require_positive(x, "x");
  require_positive(y, "y");
  require_positive(z, "z");
  require_floor(x0, "x0");
  require_floor(y0, "y0");
  require_floor(z0, "z0");
  const double d0 = y0 * z0;
  return std::log(1.0 + x0 / d0) - x0 / d0 + 2.0 * std::sqrt(x0) * std::sqrt(x) / d0 -
         x0 * (x + y * z) / (d0 * (x0 + d0));
}

double log_quotient_lower_h1(double x, double y, double z, double x0, double y0,
                             double z0) {
  require_positive(x, "x");
  require_positive(y, "y");
  require_positive(z, "z");
  require_floor(x0, "x0");
  require_floor(y0, "y0");
  require_floor(z0, "z0");
  const double d0 = y0 * z0;
  const double yz_ub = (y0 / (2.0 * z0)) * z * z + (z0 / (2.0 * y0)) * y * y;
  return std::log(1.0 + x0 / d0) - x0 / d0 + 2.0 * std::sqrt(x0) * std::sqrt(x) / d0 -
         x0 * (x + yz_ub) / (d0 * (x0 + d0));
}

double log_ratio_lower_h2(double x, double z, double x0, double z0) {
  require_positive(x, "x");
  require_positive(z, "z");
  require_floor(x0, "x0");
  require_floor(z0, "z0");
  return std::log(1.0 + x0 / z0) - x0 / z0 + 2.0 * std::sqrt(x0) * std::sqrt(x) / z0 -
         x0 * (x + z) / (z0 * (x0 + z0));
}

XiTerms xi_terms_fd(const XiPoint& point, const XiPoint& exp_pt,
                    const ChannelParams& params) {
  require_floor(exp_pt.p1, "p1^(j)");
  require_floor(exp_pt.z1, "z1^(j)");
  require_floor(exp_pt.t1, "t1^(j)");
  require_floor(exp_pt.p2, "p2^(j)");
  require_floor(exp_pt.z2, "z2^(j)");
  const double c = std::exp(-kEulerGamma) * params.ref_gain;
  const double ln2 = std::log(2.0);
  const double s2 = params.noise_watts;

  XiTerms out;
  const double d1 = exp_pt.z1 * exp_pt.t1;
  out.xi[0] = std::log2(1.0 + c * exp_pt.p1 / d1) - c * exp_pt.p1 / (d1 * ln2);
  out.xi[1] = c * 2.0 * std::sqrt(exp_pt.p1) * std::sqrt(point.p1) / (d1 * ln2);
  out.xi[2] = c * exp_pt.p1 / ((c * exp_pt.p1 + d1) * d1 * ln2) *
              (c * point.p1 + exp_pt.z1 * point.t1 * point.t1 / (2.0 * exp_pt.t1) +
               exp_pt.t1 * point.z1 * point.z1 / (2.0 * exp_pt.z1));

  const double d2 = exp_pt.z2 * s2;
  out.xi[3] = std::log2(1.0 + c * exp_pt.p2 / d2) - c * exp_pt.p2 / (d2 * ln2);
  out.xi[4] = c * 2.0 * std::sqrt(exp_pt.p2) * std::sqrt(point.p2) / (d2 * ln2);
  out.xi[5] = (c * exp_pt.p2 / (c * exp_pt.p2 + d2)) * (c * point.p2 + point.z2 * s2) /
              (d2 * ln2);

  out.phi1_bar_bps = params.bandwidth_hz * (out.xi[0] + out.xi[1] - out.xi[2]);
  out.phi2_bar_bps = params.bandwidth_hz * (out.xi[3] + out.xi[4] - out.xi[5]);
  return out;
}

double phi1_exact_bps(double p1, double z1, double t1, const ChannelParams& params) {
  const double c = std::exp(-kEulerGamma) * params.ref_gain;
  return params.bandwidth_hz * std::log2(1.0 + c * p1 / (z1 * t1));
}

double phi2_exact_bps(double p2, double z2, const ChannelParams& params) {
  const double c = std::exp(-kEulerGamma) * params.ref_gain;
  return params.bandwidth_hz * std::log2(1.0 + c * p2 / (z2 * params.noise_watts));
}

double bilinear_dc_lower(double a, double phi, double a0, double phi0) {
  const double s0 = a0 + phi0;
  const double d = a - phi;
  return 0.25 * s0 * s0 + 0.5 * s0 * (a - a0 + phi - phi0) - 0.25 * d * d;
}

double penalty_value(const std::vector<double>& lambda) {
  double p = 0.0;
  for (double l : lambda) {
    if (l < -1e-12 || l > 1.0 + 1e-12)
      throw std::domain_error("penalty_value: lambda outside [0, 1]");
    p += l * (l - 1.0);
  }
  return p;
}

double penalty_linearized(const std::vector<double>& lambda,
                          const std::vector<double>& lambda0) {
  if (lambda.size() != lambda0.size())
    throw std::invalid_argument("penalty_linearized: size mismatch");
  double p = 0.0;
  for (std::size_t k = 0; k < lambda.size(); ++k) {
    if (lambda[k] < -1e-12 || lambda[k] > 1.0 + 1e-12 || lambda0[k] < -1e-12 ||
        lambda0[k] > 1.0 + 1e-12)
      throw std::domain_error("penalty_linearized: lambda outside [0, 1]");
    p += lambda[k] * (2.0 * lambda0[k] - 1.0) - lambda0[k] * lambda0[k];
  }
  return p;
}

}  // namespace uavplan
