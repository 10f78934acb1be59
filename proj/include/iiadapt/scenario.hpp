#pragma once

#include "iiadapt/controller.hpp"
#include "iiadapt/integrator.hpp"
#include "iiadapt/sea.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace iiadapt {

struct DisturbanceSpec {
  enum class Kind { Zero, Sine, Step, Table };
  Kind kind = Kind::Zero;
  double amp = 0.0, freq = 1.0;  // sine: amp·sin(freq·t)
  double time = 0.0, value = 0.0;  // step: value for t ≥ time
  std::vector<double> table_t, table_d;  // linear interpolation, held constant outside

  double operator()(double t) const;
};

struct SeaScenario {
  SeaPhysical physical;
  std::vector<double> theta{0.2, 0.4};  // true parameter, harness only
  double l_s = 0.76, eps_s = 0.4, gamma_margin = 0.1;
};

struct ExpDiagScenario {
  std::vector<double> theta{0.3, -0.2};
  double k_e = 20.0, l_s = 1.1, eps_s = 0.5;
};

struct ControllerSpec {
  enum class Variant { Nominal, Robust, Sea };
  Variant variant = Variant::Sea;
  SeaGains sea;  // k_d is shared with the robust law
};

struct FilterPowerTerm {
  double c = 0.0, p = 1.0;
};

struct EstimatorSpec {
  enum class Variant { PdeBeta, Filtered };
  Variant variant = Variant::PdeBeta;
  double k_dz = 10.0;
  double k_eps = 5.0;
  FilterPowerTerm K1, K2;
  bool calibrate_K = false;  // replace K1, K2 by the calibrated power laws
};

struct LyapunovSpec {
  bool enabled = false;
  int vest_steps = 20000;
  double tau_est = 1.5;
  double tau1 = 2.5, tau2 = 2.5;
  std::size_t a_samples = 200;
};

struct SmallGainSpec {
  double s_min = 1e-8, s_max = 1e8;
  int samples = 200;
};

struct Scenario {
  enum class PlantKind { Sea, ExpDiag };
  PlantKind plant = PlantKind::Sea;
  std::string name;
  SeaScenario sea;
  ExpDiagScenario expdiag;
  ControllerSpec controller;
  EstimatorSpec estimator;
  DisturbanceSpec disturbance;
  IntegratorSpec integrator;
  double start_time = 0.0;  // initial time t0
  double horizon = 60.0;     // final time
  // Initial conditions. For the actuator case e0 are backstepping errors; otherwise x0 − x_r(t0).
  std::optional<std::vector<double>> x0, e0, theta_hat0, e_hat0;
  std::uint64_t seed = 1;
  LyapunovSpec lyapunov;
  SmallGainSpec smallgain;
  double settle_time = 40.0;

  void validate() const;
};

// Strict parser: unknown keys and wrong types are rejected.
Scenario parse_scenario(const std::string& json_text);
Scenario load_scenario(const std::string& path);
std::string dump_scenario(const Scenario& s);

// Sets a numeric field addressed by a dotted path (e.g. "controller.k_d"); used by sweeps.
void set_scenario_param(Scenario& s, const std::string& path, double value);

}  // namespace iiadapt
