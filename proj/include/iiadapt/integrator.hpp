#pragma once

#include "iiadapt/comparison.hpp"

#include <functional>
#include <string>
#include <vector>

namespace iiadapt {

struct IntegratorSpec {
  enum class Method { RK4, RK45 };
  Method method = Method::RK4;
  double step = 1e-4;       // rk4
  double rtol = 1e-8;       // rk45
  double atol = 1e-10;      // rk45
  double max_step = 1e-2;   // rk45
  double min_step = 1e-14;  // rk45 underflow threshold
  double log_interval = 0.01;
  double blowup_norm = 1e12;

  void validate() const;
};

using Rhs = std::function<void(double t, const Vec& z, Vec& dz)>;

struct RawTrajectory {
  std::vector<double> t;
  std::vector<Vec> z;
  bool blowup = false;
  std::string message;
  std::size_t steps = 0;
};

// Samples are recorded at t0 and every log_interval (and at T).
RawTrajectory integrate(const Rhs& rhs, const Vec& z0, double t0, double T, const IntegratorSpec& spec);

// Single classical RK4 step.
void rk4_step(const Rhs& rhs, double t, double h, Vec& z, Vec& k1, Vec& k2, Vec& k3, Vec& k4, Vec& tmp);

}  // namespace iiadapt
