#pragma once

#include "iiadapt/plant.hpp"

#include <functional>
#include <optional>

namespace iiadapt {

struct ShapingFns {
  VarsigmaFn varsigma;  // q×n
  // Closed-form β(e, x_r) with ∂β/∂e = ς(e+x_r); optional.
  std::function<Vec(const Vec& e, const Vec& xr)> beta;
  std::function<Mat(const Vec& e, const Vec& xr)> dbeta_de;
  std::function<Mat(const Vec& e, const Vec& xr)> dbeta_dxr;
  // ∂[ς(x) w]/∂x at fixed w (q×n); needed by the filtered estimator.
  std::function<Mat(const Vec& x, const Vec& w)> dvarsigma;

  bool has_beta() const { return static_cast<bool>(beta) && dbeta_de && dbeta_dxr; }
};

struct EstimatorState {
  Vec theta_hat;
  Vec e_hat;  // filtered variant only
};

struct DeadzoneGain {
  double k_dz = 0.0;
  double k_dz_star = 0.0;
  double r3 = 0.0;
  double r4 = 0.0;
  double m1_max = 0.0;
};

// K(ε) = k_eps·ε + c1|ε|^(p1−1)ε + c2|ε|^(p2−1)ε.
struct FilterGain {
  double k_eps = 1.0;
  double c1 = 0.0, p1 = 1.0;
  double c2 = 0.0, p2 = 1.0;

  Vec operator()(const Vec& eps) const;
  static FilterGain linear(double k_eps) { return FilterGain{k_eps, 0.0, 1.0, 0.0, 1.0}; }
};

// Max |∂β/∂e − ς(e+x_r)| over the samples (central differences).
double check_beta_pde(const ShapingFns& shaping, const std::vector<Vec>& es, const std::vector<Vec>& xrs,
                      double h = 1e-6);

// θ̂ − θ + β(e, x_r). Diagnostic: the true θ is only available to the harness.
Vec estimation_error(const Vec& theta_hat, const Vec& theta_true, const Vec& e, const Vec& xr,
                     const ShapingFns& shaping);

Vec estimator_rhs(const Vec& theta_hat, const Vec& e, const Vec& xr, const Vec& dxr, const Vec& u,
                  const Plant& plant, const ShapingFns& shaping, const SatParams& sat, double k_dz);

// −ς(x_r)φ̃_s(θ,θ̃,x_r) − k_dz·dzv(θ̃+θ).
Vec H_field(const Plant& plant, const Vec& theta, const Vec& tilde, const Vec& xr, const ShapingFns& shaping,
            const SatParams& sat, double k_dz);
// ∂H/∂θ̃.
Mat H_jacobian(const Plant& plant, const Vec& theta, const Vec& tilde, const Vec& xr, const ShapingFns& shaping,
               const SatParams& sat, double k_dz);

// ς(ê+x_r)·e.
Vec beta_a(const Vec& e, const Vec& e_hat, const Vec& xr, const VarsigmaFn& varsigma);

// K(e−ê) + f1(x) + φ(satv(θ̂+β_a),x) + g1(x)u − ẋ_r.
Vec filter_rhs(const Vec& e_hat, const Vec& x, const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& u,
               const Plant& plant, const VarsigmaFn& varsigma, const SatParams& sat, const FilterGain& K);

Vec estimator_filtered_rhs(const EstimatorState& state, const Vec& x, const Vec& xr, const Vec& dxr, const Vec& u,
                           const Plant& plant, const ShapingFns& shaping, const SatParams& sat, double k_dz,
                           const FilterGain& K);

using M1Fn = std::function<Mat(const Vec& xr)>;

struct KdzOptions {
  std::size_t samples = 20000;
  std::uint64_t seed = 7;
  double inflation = 1.05;
  double k_dz_config = 0.0;
  std::vector<Vec> reference_points;  // when non-empty, replaces B_{r1}
};

// Estimates r3, r4 and max‖M1‖ by sampling, then k_dz* = inflation·(r3·r4/(2l_θ+1) + r3·max‖M1‖).
DeadzoneGain select_kdz(const Plant& plant, const Reference& ref, const ShapingFns& shaping, const SatParams& sat,
                        const M1Fn& M1, const KdzOptions& opts = {});

}  // namespace iiadapt
