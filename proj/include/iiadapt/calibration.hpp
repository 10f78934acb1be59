#pragma once

#include "iiadapt/gain_network.hpp"
#include "iiadapt/lyapunov.hpp"
#include "iiadapt/simulation.hpp"

#include <optional>
#include <vector>

namespace iiadapt {

// ---------------------------------------------------------------------------
// Actuator case: sampled bound functions and design constants.

struct SeaBoundOptions {
  double e_work = 0.25;  // |e1|, |e2| range where the constant parts δ2, ρ0 must dominate
  double e_max = 50.0;   // largest error radius sampled
  int radii = 160;       // log-spaced radii in (0, e_max]
  int theta_grid = 9;    // per axis over the saturation cube
  int d_grid = 33;       // samples of d_r ∈ [e⁻¹, e]
  double inflation = 1.05;
  double strict_slope = 1e-9;
};

struct SeaBounds {
  GainFn kappa1;  // sup |∂φ/∂ϑ| at y = d_r + e1, |e1| ≤ r (class SN)
  GainFn kappa2;  // sup ‖Ψ(ϑ,d_r) − Ψ(ϑ,d_r+e1)‖, Ψ = ς∇φᵀ (class K)
  GainFn varrho1, varrho2, varrho3;
  double varrho1_star = 0.0;
  double delta1 = 0, delta2 = 0;
  double rho0 = 0, rho1 = 0, rho2 = 0;
};

SeaBounds sea_bounds(const SeaModel& model, const SeaGains& gains, const SeaBoundOptions& opts = {});

// H(t,θ̃) = ς(d_r)[φ(sat(θ+θ̃),d_r) − φ(θ,d_r)] − k_dz dz(θ̃+θ) with its Jacobian. Harness only.
AuxField sea_aux_field(const SeaModel& model, const Vec& theta, double k_dz);

struct SeaCalibrationOptions {
  SeaBoundOptions bounds;
  ASampleSpec a_spec{200, 3, 6.283185307179586, 1e-3, 3.0, 0.95, 1.05};
  double delta = 6.283185307179586;
  int vest_steps = 20000;
  double tau_est = 1.5;
};

struct SeaCalibration {
  SeaBounds bounds;
  AConstants a;
  SeaDesignConstants constants;
  VestEvaluator vest;
  GainFn sigma;  // decrease-implication threshold, evaluated at |e1|
  GammaSParams gs;
  double tau_est = 1.5;
  std::vector<std::string> gain_warnings;
};

SeaCalibration calibrate_sea(const ClosedLoop& cl, const SeaCalibrationOptions& opts = {});

// g² = sup_s γ_s(τ a* l_γ κ2(√s))²/s.
double sea_g(const GammaSParams& gs, double a_star, double tau_est, const GainFn& kappa2);

// Nodes e1, e2, theta_tilde, e3 with the eight gains of the backstepping design.
GainNetwork sea_gain_network(const SeaGains& gains, const SeaDesignConstants& c, const GammaSParams& gs);

// μ of the PE condition for M1 = M0·v vᵀ along d_r = exp(sin t).
PeReport sea_pe(const SeaModel& model, double M0, double delta = 6.283185307179586, int grid = 64);

// ---------------------------------------------------------------------------
// Filter-based variant.

Theorem4Inputs sea_theorem4_inputs(const SeaCalibration& cal, double tau_err_prime = 2.0, double tau_err = 3.0);

// c·r^p ≥ floor(r) on [r_lo, r_hi], p from a grid, c inflated.
FilterPowerTerm fit_power_law(const GainFn& floor, double r_lo = 1e-4, double r_hi = 10.0, double inflation = 1.05);

// Replaces K1, K2 by calibrated power laws when estimator.calibrate_K is set.
Scenario resolve_scenario(const Scenario& s, const SeaCalibration* cal = nullptr);

// ---------------------------------------------------------------------------
// Lyapunov checks along closed-loop runs.

VclInputs sea_vcl_inputs(const SeaCalibration& cal, double tau1 = 2.5, double tau2 = 2.5);

// Every stride-th logged state; e_norm is |e1| for the actuator case and |e| otherwise.
std::vector<Lemma3Sample> lemma3_samples(const ClosedLoop& cl, const RawTrajectory& raw, std::size_t stride);

struct VclSample {
  double t = 0, joint_norm = 0;
  double V_err = 0, V_est = 0, V_cl = 0;
  double Verr_dot = 0, Vest_dot = 0, Vcl_dot = 0;
};

std::vector<VclSample> vcl_samples(const ClosedLoop& cl, const RawTrajectory& raw, std::size_t stride,
                                   const VestEvaluator& ev, const SumLyapunov& vcl);

LyapunovProbe make_probe(const VestEvaluator& ev, const SumLyapunov* vcl);

// ---------------------------------------------------------------------------
// Demo plant: generic bounds and the closed-form gain condition.

struct ExpDiagCalibration {
  BoundFns bounds;
  AConstants a;
  VestEvaluator vest;
  ConditionReport condition;
};

ExpDiagCalibration calibrate_expdiag(const ClosedLoop& cl, double k_dz, int vest_steps = 2000,
                                     std::size_t a_samples = 200);

}  // namespace iiadapt
