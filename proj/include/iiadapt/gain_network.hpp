#pragma once

#include "iiadapt/comparison.hpp"

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace iiadapt {

// Digraph of ISS subsystems. The edge j→i carries γ_{i,j}.
class GainNetwork {
 public:
  double s_min = 1e-8;
  double s_max = 1e8;
  int samples = 200;

  int add_node(const std::string& label);
  // γ_{to,from}; must be of class K or K∞.
  void add_edge(int from, int to, GainFn gain);
  void add_edge(const std::string& from, const std::string& to, GainFn gain);

  int size() const { return static_cast<int>(nodes_.size()); }
  int index(const std::string& label) const;
  const std::string& label(int i) const { return nodes_.at(static_cast<std::size_t>(i)); }
  const GainFn* edge(int from, int to) const;
  std::vector<int> successors(int from) const;
  const std::map<std::pair<int, int>, GainFn>& edges() const { return edges_; }

 private:
  std::vector<std::string> nodes_;
  std::map<std::pair<int, int>, GainFn> edges_;
};

// Each simple cycle once, starting at its smallest node and following edge direction.
std::vector<std::vector<int>> enumerate_simple_cycles(const GainNetwork& net);

// Cycle gain for c = (c0, c1, ..., c_{r-1}): the edge c0→c1 is applied first, the closing edge last.
GainFn cycle_gain(const GainNetwork& net, const std::vector<int>& cycle);

struct CycleCheck {
  std::vector<int> nodes;
  double min_margin = kInf;  // min over the grid of (s − composed(s))/s
  double argmin_s = 0.0;
  bool saturated_tail = false;  // composed limit lies below s_max, so the tail passes automatically
  bool pass = false;
  std::vector<std::pair<double, double>> samples;  // (s, composed(s))
};

struct Certificate {
  std::vector<CycleCheck> cycles;
  double s_min = 0, s_max = 0;
  int samples = 0;
  bool pass = false;

  std::string text(const GainNetwork& net) const;
  std::string csv(const GainNetwork& net) const;
};

Certificate certify(const GainNetwork& net);
// Same check for a single cycle.
CycleCheck certify_cycle(const GainNetwork& net, const std::vector<int>& cycle);

std::vector<double> log_grid(double lo, double hi, int count);

// ---------------------------------------------------------------------------
// Closed-form gain conditions.

enum class ConditionMode {
  Theorem2,    // α3 ≥ τ_err γ_s∘(a* l_γ κ2)∘α1⁻¹∘α2 · α4 · κ1
  Corollary1,  // same, additionally τ_err > 4 for the sum-type Lyapunov function
  Robust,      // l_γκ2 replaced by κ̄2 = l_γκ2 + ν
  Filtered     // κ2 replaced by ϱ2
};

struct ConditionInputs {
  GainFn alpha1, alpha2, alpha3, alpha4;
  GainFn kappa1, kappa2;
  GainFn gamma_s;
  double a_star = 0.0;
  double l_gamma = 0.0;
  double tau_err = 2.0;
  std::optional<GainFn> nu;    // robust mode
  std::optional<GainFn> rho2;  // filtered mode
};

struct ConditionReport {
  ConditionMode mode = ConditionMode::Theorem2;
  double min_slack = kInf;           // min of α3(s) − rhs(s)
  double min_relative_slack = kInf;  // min of (α3(s) − rhs(s))/α3(s)
  double worst_s = 0.0;
  std::size_t violations = 0;
  bool vcl_constructible = false;  // τ_err > 4 (corollary mode)
  bool pass = false;
  std::vector<std::pair<double, double>> samples;  // (s, rhs(s))
};

// κ̄2 = l_γκ2 + ν with ν(s) = [κ3κ4 + κ4*κ3 + κ3*κ4]².
GainFn kappa_bar2(const GainFn& kappa2, double l_gamma, const GainFn& kappa3, const GainFn& kappa4,
                  double kappa3_star, double kappa4_star);

ConditionReport check_theorem2_condition(const ConditionInputs& in, ConditionMode mode,
                                         const std::vector<double>& grid);

// Gain objects of the filter-based design.
struct Theorem4Inputs {
  double a1 = 0.0, a_star = 0.0, l_gamma = 0.0;
  GainFn rho1, rho2, rho3;
  double rho1_star = 0.0;
  GainFn alpha1;
  GammaSParams gs;
  double tau_est = 1.5, tau_err_prime = 2.0, tau_err = 3.0;
};

struct Theorem4Gains {
  GainFn g_theta_e;    // γ̌_{θ̃,e}
  GainFn g_theta_eps;  // γ̌_{θ̃,ε}
  GainFn g_e_theta;    // γ̌_{e,θ̃}
  GainFn pi_eps_theta;
  GainFn pi_eps_e;
  GainFn g_eps_e;      // γ̌_{ε,e}
  GainFn g_eps_theta;  // γ̌_{ε,θ̃}
  double mu_prime = 0.0;
  // Lower bounds on ε·K1(ε)/|ε| and ε·K2(ε)/|ε| as functions of |ε|.
  GainFn k1_floor, k2_floor;
};

Theorem4Gains theorem4_gains(const Theorem4Inputs& in);
// Network with nodes e, θ̃, ε and the five gains above.
GainNetwork theorem4_network(const Theorem4Gains& g);

}  // namespace iiadapt
