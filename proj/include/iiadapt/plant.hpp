#pragma once

#include "iiadapt/comparison.hpp"

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace iiadapt {

// Known compact parameter set: an axis-aligned box or a centred ball.
struct ParameterSet {
  enum class Kind { Box, Ball };
  Kind kind = Kind::Ball;
  Vec lo, hi;         // box
  double radius = 0;  // ball
  int q = 0;

  static ParameterSet box(Vec lo, Vec hi);
  static ParameterSet ball(int q, double radius);

  // max |θ| over the set (attained at a vertex for boxes).
  double max_norm() const;
  bool contains(const Vec& theta, double tol = 0.0) const;
  std::vector<Vec> vertices() const;
  // Maps unit coordinates (q of them for a box, ball_dims(q) for a ball) into the set.
  Vec point(const double* u) const;
  int unit_dims() const;
};

struct Plant {
  int n = 0, m = 0, q = 0;
  std::function<Vec(const Vec& x)> f1;
  std::function<Vec(const Vec& theta, const Vec& x)> phi;
  std::function<Mat(const Vec& theta, const Vec& x)> dphi_dtheta;
  std::function<Mat(const Vec& x)> g1;
  ParameterSet theta_set;
  double l_theta = 0.0;
  std::string name;

  // Dimension and l_θ checks; throws on failure.
  void validate() const;
};

// Max relative mismatch between dphi_dtheta and central differences of phi.
double check_parameter_jacobian(const Plant& plant, const std::vector<Vec>& thetas, const std::vector<Vec>& xs,
                                double h = 1e-6);

struct Reference {
  std::function<Vec(double t)> x_r;
  std::function<Vec(double t)> dx_r;
  double r1 = 0.0;
  double t_max = 0.0;

  // Checks |x_r| <= r1 and dx_r against finite differences on a uniform grid.
  void validate(int samples = 1000) const;
};

Vec plant_rhs(const Plant& plant, const Vec& x, const Vec& theta, const Vec& u, const Vec& d);
Vec plant_rhs(const Plant& plant, const Vec& x, const Vec& theta, const Vec& u);

Vec error_rhs(const Plant& plant, const Reference& ref, const Vec& e, double t, const Vec& theta, const Vec& u,
              const Vec& d);
Vec error_rhs(const Plant& plant, const Reference& ref, const Vec& e, double t, const Vec& theta, const Vec& u);

// φ(satv(θ†+θ‡),x) − φ(satv(θ†),x).
Vec tilde_phi_s(const Plant& plant, const Vec& theta_dag, const Vec& theta_ddag, const Vec& x,
                const SatParams& p);

using VarsigmaFn = std::function<Mat(const Vec& x)>;

struct KappaOptions {
  std::size_t samples = 4096;
  std::uint64_t seed = 20240611;
  double inflation = 1.05;
  // Slope added to K-class estimates so that they are strictly increasing.
  double strict_slope = 1e-9;
  VarsigmaFn varsigma;                // required for κ2 and κ4
  std::vector<Vec> reference_points;  // when non-empty, replaces the ball B_{r1}
};

struct BoundFns {
  GainFn kappa1, kappa2, kappa3, kappa4;
  double kappa3_star = 0.0;
  double kappa4_star = 0.0;
};

// which = 1..4. Returns the inflated, running-max piecewise-linear estimate on {0} ∪ radius_grid.
GainFn estimate_kappa(const Plant& plant, const Reference& ref, const SatParams& sat, int which,
                      const std::vector<double>& radius_grid, const KappaOptions& opts = {});
double estimate_kappa_star(const Plant& plant, const Reference& ref, int which, const KappaOptions& opts = {});
BoundFns estimate_bounds(const Plant& plant, const Reference& ref, const SatParams& sat,
                         const std::vector<double>& radius_grid, const KappaOptions& opts = {});

// Spectral norm of a small dense matrix.
double spectral_norm(const Mat& a);

}  // namespace iiadapt
