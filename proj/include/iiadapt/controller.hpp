#pragma once

#include "iiadapt/estimator.hpp"
#include "iiadapt/sea.hpp"

#include <array>
#include <functional>
#include <string>
#include <vector>

namespace iiadapt {

struct IdealLaw {
  std::function<Vec(const Vec& xr, const Vec& dxr, const Vec& theta_arg, const Vec& e)> psi;
  std::function<double(double t, const Vec& e)> V_err;
  std::function<Vec(double t, const Vec& e)> dVerr_de;
  GainFn alpha1, alpha2, alpha3, alpha4;
};

// ψ(x_r, ẋ_r, satv(θ̂+β(e,x_r)), e).
Vec nominal_u(const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& e, const ShapingFns& shaping,
              const SatParams& sat, const IdealLaw& law);
// Same law with β replaced by β_a = ς(ê+x_r)e.
Vec nominal_u_filtered(const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& e_hat, const Vec& e,
                       const VarsigmaFn& varsigma, const SatParams& sat, const IdealLaw& law);

// η = k_d·[(∂V_err/∂e)·g1(e+x_r)]ᵀ.
Vec damping(double t, const Vec& xr, const Vec& e, const Plant& plant, const IdealLaw& law, double k_d);

Vec robust_u(double t, const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& e, const ShapingFns& shaping,
             const SatParams& sat, const IdealLaw& law, const Plant& plant, double k_d);

// ---------------------------------------------------------------------------
// Backstepping controller for the actuator case.

enum class E2Exponent {
  Consistent,  // |e2|^(2p*+1) in both τ3 and u
  Literal      // |e2|^(4p*+4) in the feedforward term of u
};

struct SeaGains {
  double k1 = 2.0, k21 = 5.0, k22 = 10.0;
  double k31 = 50.0, k32 = 100.0, k33 = 100.0;
  double k_d = 0.0;
  E2Exponent e2_exponent = E2Exponent::Consistent;
};

struct SeaEstimatorConfig {
  bool filtered = false;
  double k_dz = 1.0;
  FilterGain K = FilterGain::linear(1.0);
};

double sea_tau2(double e1, double dr_dot, double k1);
double sea_f2(double x2, double dr_dot, double dr_ddot, double b3, double k1);
double sea_tau3(double e1, double e2, double d_r, double dr_dot, double dr_ddot, const std::array<double, 2>& theta_hat,
                const std::array<double, 2>& beta, const SeaModel& model, const SeaGains& gains);

// Every quantity computed by the controller and estimator at one instant.
struct SeaTerms {
  double e1 = 0, e2 = 0, e3 = 0;
  double tau2 = 0, tau3 = 0, f2 = 0;
  std::array<double, 2> beta{}, w{}, vartheta{};
  double phi_hat = 0;
  double dtau3_dt = 0, dtau3_de1 = 0, dtau3_de2 = 0, dtau3_dehat = 0;
  std::array<double, 2> dtau3_dthat{};
  std::array<double, 2> theta_hat_dot{};
  double eps = 0, ehat_dot = 0;
  double e1_dot = 0;
  double u_bar = 0, eta = 0, u = 0;
};

// Only measurable signals enter: time (through d_r), x, θ̂ and the filter state ê1.
SeaTerms sea_terms(const SeaModel& model, const SeaGains& gains, const SeaEstimatorConfig& est, double t,
                   const std::array<double, 3>& x, const std::array<double, 2>& theta_hat, double e_hat1 = 0.0);

double sea_u(const SeaModel& model, const SeaGains& gains, const SeaEstimatorConfig& est, double t,
             const std::array<double, 3>& x, const std::array<double, 2>& theta_hat, double e_hat1 = 0.0);

// Gain conditions of the backstepping design; returns human-readable warnings (empty if all hold).
std::vector<std::string> sea_gain_warnings(const SeaGains& gains, const SeaDesignConstants& c, double l_gamma);

}  // namespace iiadapt
