#pragma once

#include <array>
#include <vector>

#include "uavplan/scenario.hpp"

namespace uavplan {

// Expansion-point denominators below this floor are a degenerate iterate and
// raise std::domain_error; the driver perturbs before rebuilding.
inline constexpr double kExpansionFloor = 1e-12;

// Convex upper bound of sqrt(x*y) at (x0, y0); tight when x/x0 = y/y0.
double sqrt_bilinear_upper(double x, double y, double x0, double y0);

// Concave lower bound of ln(1 + x/(y*z)) at (x0, y0, z0), nats. The y*z term
// is replaced by its bilinear upper bound, so the result is jointly concave.
double log_quotient_lower_h1(double x, double y, double z, double x0, double y0,
                             double z0);

// Pre-substitution form: the raw bound with the bilinear y*z kept; composing
// it with sqrt_bilinear_upper reproduces log_quotient_lower_h1.
double log_quotient_lower_h1_raw(double x, double y, double z, double x0, double y0,
                                 double z0);

// Concave lower bound of ln(1 + x/z) at (x0, z0), nats.
double log_ratio_lower_h2(double x, double z, double x0, double z0);

struct XiPoint {
  double p1 = 0, z1 = 0, t1 = 0;  // UL tuple
  double p2 = 0, z2 = 0;          // DL tuple (denominator z2 * sigma^2)
};

struct XiTerms {
  std::array<double, 6> xi{};  // Xi_1..Xi_6 in order
  double phi1_bar_bps = 0.0;   // B*(Xi1 + Xi2 - Xi3)
  double phi2_bar_bps = 0.0;   // B*(Xi4 + Xi5 - Xi6)
};

XiTerms xi_terms_fd(const XiPoint& point, const XiPoint& exp_pt,
                    const ChannelParams& params);

// Exact spectral-efficiency terms the Xi expansion lower-bounds, bits/s.
double phi1_exact_bps(double p1, double z1, double t1, const ChannelParams& params);
double phi2_exact_bps(double p2, double z2, const ChannelParams& params);

// Taylor lower bound of the bilinear product a*phi via its DC split; tight and
// gradient-matching at (a0, phi0).
double bilinear_dc_lower(double a, double phi, double a0, double phi0);

// P(lambda) = sum lambda_k (lambda_k - 1), nonpositive on [0,1]^K.
double penalty_value(const std::vector<double>& lambda);

// Linearization of P at lambda0; a global lower bound, tight at lambda0.
double penalty_linearized(const std::vector<double>& lambda,
                          const std::vector<double>& lambda0);

}  // namespace uavplan
