#pragma once

#include "iiadapt/controller.hpp"
#include "iiadapt/estimator.hpp"
#include "iiadapt/plant.hpp"

namespace iiadapt {

// Two-state demo plant with exponential parameter dependence:
//   ẋ = (0.5x2, −0.5x1) + (x1e^{θ1}, x2e^{θ2}) + u,  Θ = [−0.5, 0.5]²,
// tracking x_r = (1.5 + sin t, 1.5 + cos t) with ς(x) = diag(x).
struct ExpDiag {
  Plant plant;
  Reference ref;
  ShapingFns shaping;
  IdealLaw law;
  SatParams sat;
  GammaSParams gs;
  M1Fn M1;
  double k_e = 0.0;
};

ExpDiag make_expdiag(double k_e = 20.0, double t_max = 100.0, double l_s = 1.1, double eps_s = 0.5);

}  // namespace iiadapt
