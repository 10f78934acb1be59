#pragma once

#include "iiadapt/expdiag.hpp"
#include "iiadapt/scenario.hpp"

#include <functional>
#include <memory>
#include <string>
#include <vector>

namespace iiadapt {

// One logged instant of a closed loop.
struct Sample {
  Vec x, e, theta_hat, theta_tilde, eps_e, u, d;
};

struct Trajectory {
  int n = 0, m = 0, q = 0;
  std::vector<double> t;
  std::vector<Vec> x, e, theta_hat, theta_tilde, eps_e, u, d;
  std::vector<double> V_err, V_est, V_cl;  // NaN when not computed
  bool blowup = false;
  std::string message;

  std::size_t size() const { return t.size(); }
  std::vector<std::string> columns() const;
};

// Optional Lyapunov values logged next to the states.
struct LyapunovProbe {
  std::function<double(double t, const Vec& e, const Vec& tilde)> V_est;
  std::function<double(double t, const Vec& e, const Vec& tilde)> V_cl;
};

// Closed loop of plant, controller, estimator and optional filter. The true θ lives here only for
// the plant right-hand side and for logging θ̃; the control and update laws see measured signals.
class ClosedLoop {
 public:
  explicit ClosedLoop(const Scenario& s);

  int n() const;
  int m() const;
  int q() const;
  int dim() const;
  bool is_sea() const;
  bool filtered() const;
  const Vec& theta() const;

  Vec initial_state() const;
  void rhs(double t, const Vec& z, Vec& dz) const;
  Sample observe(double t, const Vec& z) const;
  // dθ̃/dt along the closed loop (central difference in the flow direction).
  Vec tilde_rate(double t, const Vec& z) const;

  // Actuator case internals (is_sea() only).
  const SeaModel& sea_model() const;
  const SeaGains& sea_gains() const;
  const SeaEstimatorConfig& sea_estimator() const;
  // Demo plant internals (!is_sea() only).
  const ExpDiag& expdiag() const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

Trajectory run_closed_loop(const Scenario& s, const LyapunovProbe* probe = nullptr);

// Also returns the raw integrator states, for post-processing that needs the full state.
Trajectory run_closed_loop(const Scenario& s, RawTrajectory& raw, const LyapunovProbe* probe = nullptr);

std::string to_csv(const Trajectory& tr);
void emit_csv(const Trajectory& tr, const std::string& path);
// Dimensions are recovered from the header.
Trajectory parse_csv(const std::string& text);

struct ConvergenceMetrics {
  double sup_e1 = 0, sup_e = 0, sup_tilde = 0, sup_joint = 0;
  double final_e1 = 0, final_tilde = 0;
  std::size_t samples = 0;
  bool blowup = false;
};

// Suprema over samples with t ≥ settle.
ConvergenceMetrics convergence_metrics(const Trajectory& tr, double settle);

// Runs the actuator scenario and reports the settle-window metrics.
ConvergenceMetrics reproduce_figures(const Scenario& s);

}  // namespace iiadapt
