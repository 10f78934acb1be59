#pragma once

#include "iiadapt/estimator.hpp"
#include "iiadapt/plant.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace iiadapt {

struct MonotonicityOptions {
  std::size_t samples = 20000;
  std::uint64_t seed = 11;
  double tol = 1e-9;
  // Skip the l_s > √q·l_θ precondition (the actuator case cannot meet it together with its saturation cap).
  bool allow_small_ls = false;
};

struct MonotonicityReport {
  double max_violation_upper = -kInf;  // max of θ̃ᵀM1θ̃ − θ̃ᵀς[φ(θ')−φ(θ)]
  double max_violation_lower = -kInf;  // max of −θ̃ᵀM1θ̃
  std::size_t samples = 0;
  std::size_t violations = 0;
  bool pass = false;
};

// θ ∈ Θ, θ' ∈ B_{l_s}, x_r from reference_points.
MonotonicityReport check_monotonicity(const Plant& plant, const VarsigmaFn& varsigma, const M1Fn& M1,
                                      const SatParams& sat, const std::vector<Vec>& reference_points,
                                      const MonotonicityOptions& opts = {});

struct PeReport {
  double mu = 0.0;
  double t_argmin = 0.0;
  double max_error_estimate = 0.0;
  Mat window_at_argmin;
  bool pass = false;
};

// min over t_grid of λ_min(∫_t^{t+δ} M1(x_r) + M1(x_r)ᵀ dτ), by adaptive Gauss–Kronrod quadrature.
PeReport check_pe(const M1Fn& M1, const std::function<Vec(double)>& x_r, double delta,
                  const std::vector<double>& t_grid, double abs_tol = 1e-9);

// Auxiliary vector field H(t, θ̃) and its Jacobian, evaluated in place (J row-major q×q, may be null).
struct AuxField {
  int q = 0;
  std::function<void(double t, const double* tilde, double* H, double* J)> eval;
};

// Aux field built from the generic plant description. Harness only: uses the true θ.
AuxField make_aux_field(const Plant& plant, const Reference& ref, const ShapingFns& shaping, const SatParams& sat,
                        const Vec& theta, double k_dz);
// H = −θ̃, for tests.
AuxField linear_test_field(int q, double rate = 1.0);

struct VestValue {
  double V = 0.0;
  Vec grad;      // ∂V_est/∂θ̃
  Vec phi_end;   // Φ(t+δ; t, θ̃)
  double max_norm_increase = 0.0;  // max over steps of |Φ(τ+h)| − |Φ(τ)|
};

// V_est(t, θ̃) = ∫_t^{t+δ} |Φ(τ; t, θ̃)|² dτ along θ̃' = H(τ, θ̃).
class VestEvaluator {
 public:
  VestEvaluator(AuxField field, double delta, int steps = 2000);

  double operator()(double t, const Vec& tilde) const;
  // Value, gradient (variational flow) and end point.
  VestValue eval(double t, const Vec& tilde, bool with_gradient = true) const;
  // ∂V/∂t + ∂V/∂θ̃·θ̃' for a given θ̃'. Along the auxiliary flow this is |Φ(t+δ)|² − |θ̃|².
  double derivative(double t, const Vec& tilde, const Vec& tilde_dot) const;
  Vec H(double t, const Vec& tilde) const;
  Mat jacobian(double t, const Vec& tilde) const;

  double delta() const { return delta_; }
  int steps() const { return steps_; }
  int q() const { return field_.q; }

 private:
  AuxField field_;
  double delta_;
  int steps_;
};

struct AConstants {
  double a1 = 0, a2 = 0, a3 = 0, a4 = 0, a_star = 0;
  double a1_raw = 0, a3_raw = 0, a4_raw = 0;
  double h = 0;               // sampled bound on ‖∂H/∂θ̃‖
  double a4_closed_form = 0;  // window formula with the sampled h
  std::size_t samples = 0;
  std::size_t refine_evaluations = 0;
  std::size_t upper_bound_violations = 0;  // V_est > δ|θ̃|²
};

struct ASampleSpec {
  std::size_t samples = 400;
  std::uint64_t seed = 3;
  double t_max = 6.283185307179586;
  double r_min = 1e-3, r_max = 3.0;
  double deflation = 0.95, inflation = 1.05;
  // Worst samples of each ratio are refined by a local pattern search over (t, direction).
  std::size_t refine = 3;
  int refine_iters = 30;
};

double a_star_from(double a1, double a2, double a3, double a4);

AConstants estimate_a_constants(const VestEvaluator& ev, const ASampleSpec& spec = {});

// One logged closed-loop state for the implication check.
struct Lemma3Sample {
  double t = 0;
  Vec tilde;
  Vec tilde_dot;  // actual θ̃' from the closed-loop right-hand side
  double e_norm = 0;
};

struct Lemma3Report {
  std::size_t samples = 0;
  std::size_t active = 0;  // states where V_est ≥ σ(|e|)
  std::size_t violations = 0;
  double worst_excess = -kInf;  // max of V̇_est + rate·|θ̃|² over active states
  bool pass = false;
};

// V_est ≥ σ(|e|) ⇒ V̇_est ≤ −(a3(τ_est−1)/τ_est)|θ̃|².
Lemma3Report check_lemma3_implication(const VestEvaluator& ev, const GainFn& sigma,
                                      const std::vector<Lemma3Sample>& samples, double a3, double tau_est);

// σ_{θ̃,e}(s) = a1(τ_est a* l_γ)²κ2(s)².
GainFn lemma3_sigma(double a1, double a_star, double l_gamma, double tau_est, const GainFn& kappa2);

// Sum-type Lyapunov function V_cl = ∫₀^{V_err} λ_err + ∫₀^{V_est} λ_est.
struct VclInputs {
  GainFn alpha1, alpha2, alpha4, kappa1, kappa2;
  GammaSParams gs;
  AConstants a;
  double tau1 = 2.5, tau2 = 2.5, tau_err = 6.25;
  // ρ_err⊖ is +∞ above the range of ρ_err; there the integrand is held at this argument.
  double ominus_cap = 1e6;
};

class SumLyapunov {
 public:
  explicit SumLyapunov(VclInputs in);

  double lambda_err(double s) const;
  double lambda_est(double s) const;
  // ∫₀^v λ (adaptive Gauss–Kronrod).
  double integral_err(double v) const;
  double integral_est(double v) const;
  double value(double V_err, double V_est) const { return integral_err(V_err) + integral_est(V_est); }
  double derivative(double V_err, double V_est, double Verr_dot, double Vest_dot) const {
    return lambda_err(V_err) * Verr_dot + lambda_est(V_est) * Vest_dot;
  }
  // Guaranteed decrease rate of the final estimate, as a function of (|e|, |θ̃|, V_err, V_est).
  double decrease_bound(double e_norm, double tilde_norm, double V_err, double V_est) const;
  std::size_t capped_evaluations() const { return capped_; }

 private:
  double rho_err(double s) const;
  // Cumulative integrals on a log grid, filled on first use.
  struct Table {
    std::vector<double> cum;
    bool ready = false;
  };
  template <class F>
  double tabulated(Table& tab, F lambda, double v) const;
  VclInputs in_;
  GainFn a1inv_;
  std::vector<double> grid_;
  mutable Table err_tab_, est_tab_;
  mutable std::size_t capped_ = 0;
};

SumLyapunov build_vcl(const VclInputs& in);

}  // namespace iiadapt
