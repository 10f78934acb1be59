#pragma once

#include "iiadapt/estimator.hpp"
#include "iiadapt/plant.hpp"

#include <array>

namespace iiadapt {

struct SeaPhysical {
  double m = 1.0, mu_v = 1.0, c_f = 1.0, c_b = 0.1, L = 0.1, R = 1.0;
  double Q0 = 1.25, p = 1.0;  // true values, harness only
  double Q0_l = 0.5, Q0_u = 2.0, p_lo = 0.5, p_hi = 1.5;

  void validate_constants() const;
  void validate() const;  // also checks Q0, p against their bounds
};

struct SeaNormal {
  double b1 = 0, b2 = 0, b3 = 0, p_star = 0;
  double l_theta = 0;
  Vec theta;  // (θ1, θ2)
  ParameterSet theta_set;
};

// Normal-form constants from the known bounds only (θ left empty).
SeaNormal sea_normal_constants(const SeaPhysical& phys);
SeaNormal sea_to_normal(const SeaPhysical& phys);
// (Q0, p) represented by θ; no bound check.
std::pair<double, double> sea_theta_to_physical(const SeaNormal& nf, const Vec& theta);

// Scalar SEA model in normal form, with the saturation data used by the estimator.
struct SeaModel {
  double b1 = 0, b2 = 0, b3 = 0, p_star = 0;
  double l_theta = 0;
  SatParams sat;
  GammaSParams gs;
  ParameterSet theta_set;

  static SeaModel make(const SeaNormal& nf, double l_s, double eps_s, double gamma_margin = 0.1);

  double phi(double t1, double t2, double y) const;
  std::array<double, 2> dphi_dtheta(double t1, double t2, double y) const;
  double dphi_dy(double t1, double t2, double y) const;
  std::array<double, 2> varsigma(double y) const;
  std::array<double, 2> dvarsigma(double y) const;
};

struct SeaRef {
  double d, d1, d2, d3;  // d_r and its first three derivatives
};

// d_r(t) = exp(sin t).
SeaRef sea_reference(double t);

// Generic views (n=3, m=1, q=2); ς(x) places the scalar shaping vector in the x2 column.
Plant sea_plant(const SeaModel& model);
ShapingFns sea_shaping(const SeaModel& model);
Reference sea_generic_reference(double t_max);

// M1(x_r) = M0·v vᵀ with v = (b2, log|x_r1|).
Mat sea_M1(const SeaModel& model, double M0, double xr1);
// Largest M0 for which the monotonicity inequality holds with θ ∈ Θ, |θ'| ≤ l_s, d_r ∈ [e⁻¹, e].
double sea_M0(const SeaModel& model);

// Constants of the backstepping gain construction, estimated numerically.
struct SeaDesignConstants {
  double delta1 = 0, delta2 = 0;     // |φ̃_s| ≤ (δ1|e1|^(2p*+2) + δ2)γ_s(|θ̃|)
  double rho0 = 0, rho1 = 0, rho2 = 0;  // |∂τ3/∂e2·φ̃_s| ≤ ρ0γ_s + ρ1|e1|^(4p*+6) + ρ2|e2|^(4p*+2)
  double g = 0;                      // γ_s(√(γ_{θ̃,1}(s)/a1))² ≤ g² s
  double a1 = 0, a_star = 0, tau_est = 0;
  GainFn kappa2 = GainFn::zero();
};

// Armature voltage reconstructed from the normal-form input.
double sea_input_voltage(const SeaPhysical& phys, double u, double x2, double x3);

}  // namespace iiadapt
