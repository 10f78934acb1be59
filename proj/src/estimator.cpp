#include "iiadapt/estimator.hpp"

#include "iiadapt/errors.hpp"
#include "iiadapt/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace iiadapt {

Vec FilterGain::operator()(const Vec& eps) const {
  const double r = eps.norm();
  Vec out = k_eps * eps;
  if (r > 0.0) {
    if (c1 != 0.0) out += c1 * std::pow(r, p1 - 1.0) * eps;
    if (c2 != 0.0) out += c2 * std::pow(r, p2 - 1.0) * eps;
  }
  return out;
}

double check_beta_pde(const ShapingFns& shaping, const std::vector<Vec>& es, const std::vector<Vec>& xrs, double h) {
  if (!shaping.has_beta()) throw PreconditionError("check_beta_pde: beta missing");
  double worst = 0.0;
  for (const Vec& e : es) {
    for (const Vec& xr : xrs) {
      const Mat S = shaping.varsigma(e + xr);
      Mat fd(S.rows(), S.cols());
      for (Eigen::Index j = 0; j < e.size(); ++j) {
        Vec ep = e, em = e;
        ep[j] += h;
        em[j] -= h;
        fd.col(j) = (shaping.beta(ep, xr) - shaping.beta(em, xr)) / (2.0 * h);
      }
      worst = std::max(worst, (fd - S).cwiseAbs().maxCoeff());
      worst = std::max(worst, (shaping.dbeta_de(e, xr) - S).cwiseAbs().maxCoeff());
    }
  }
  return worst;
}

Vec estimation_error(const Vec& theta_hat, const Vec& theta_true, const Vec& e, const Vec& xr,
                     const ShapingFns& shaping) {
  if (!shaping.beta) throw PreconditionError("estimation_error: beta missing");
  return theta_hat - theta_true + shaping.beta(e, xr);
}

Vec estimator_rhs(const Vec& theta_hat, const Vec& e, const Vec& xr, const Vec& dxr, const Vec& u,
                  const Plant& plant, const ShapingFns& shaping, const SatParams& sat, double k_dz) {
  if (!shaping.has_beta()) throw PreconditionError("estimator_rhs: beta Jacobians missing");
  const Vec x = e + xr;
  const Vec w = theta_hat + shaping.beta(e, xr);
  const Vec edot_hat = plant.f1(x) + plant.phi(satv(w, sat), x) + plant.g1(x) * u - dxr;
  return -shaping.dbeta_de(e, xr) * edot_hat - shaping.dbeta_dxr(e, xr) * dxr - k_dz * dzv(w, sat.l_theta);
}

Vec H_field(const Plant& plant, const Vec& theta, const Vec& tilde, const Vec& xr, const ShapingFns& shaping,
            const SatParams& sat, double k_dz) {
  return -shaping.varsigma(xr) * tilde_phi_s(plant, theta, tilde, xr, sat) - k_dz * dzv(tilde + theta, sat.l_theta);
}

Mat H_jacobian(const Plant& plant, const Vec& theta, const Vec& tilde, const Vec& xr, const ShapingFns& shaping,
               const SatParams& sat, double k_dz) {
  const Vec w = theta + tilde;
  const Mat J = plant.dphi_dtheta(satv(w, sat), xr) * satv_derivative(w, sat).asDiagonal();
  Mat out = -shaping.varsigma(xr) * J;
  out.diagonal() -= k_dz * dzv_derivative(w, sat.l_theta);
  return out;
}

Vec beta_a(const Vec& e, const Vec& e_hat, const Vec& xr, const VarsigmaFn& varsigma) {
  return varsigma(e_hat + xr) * e;
}

Vec filter_rhs(const Vec& e_hat, const Vec& x, const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& u,
               const Plant& plant, const VarsigmaFn& varsigma, const SatParams& sat, const FilterGain& K) {
  const Vec e = x - xr;
  const Vec w = theta_hat + beta_a(e, e_hat, xr, varsigma);
  return K(e - e_hat) + plant.f1(x) + plant.phi(satv(w, sat), x) + plant.g1(x) * u - dxr;
}

Vec estimator_filtered_rhs(const EstimatorState& state, const Vec& x, const Vec& xr, const Vec& dxr, const Vec& u,
                           const Plant& plant, const ShapingFns& shaping, const SatParams& sat, double k_dz,
                           const FilterGain& K) {
  if (!shaping.dvarsigma) throw PreconditionError("estimator_filtered_rhs: dvarsigma missing");
  const Vec e = x - xr;
  const Vec xs = state.e_hat + xr;
  const Mat S = shaping.varsigma(xs);
  const Vec w = state.theta_hat + S * e;
  const Vec edot_hat = plant.f1(x) + plant.phi(satv(w, sat), x) + plant.g1(x) * u - dxr;
  const Vec ehat_dot = filter_rhs(state.e_hat, x, xr, dxr, state.theta_hat, u, plant, shaping.varsigma, sat, K);
  // ∂β_a/∂ê and ∂β_a/∂x_r coincide: both enter through ς(ê+x_r).
  const Mat dS = shaping.dvarsigma(xs, e);
  return -S * edot_hat - dS * (ehat_dot + dxr) - k_dz * dzv(w, sat.l_theta);
}

DeadzoneGain select_kdz(const Plant& plant, const Reference& ref, const ShapingFns& shaping, const SatParams& sat,
                        const M1Fn& M1, const KdzOptions& opts) {
  sat.validate();
  const int q = plant.q, n = plant.n;
  const double l_theta = sat.l_theta;
  const double r_out = sat.l_s + 4.0 * (l_theta + 1.0) + plant.theta_set.max_norm();
  const int dth = plant.theta_set.unit_dims();
  const int dref = opts.reference_points.empty() ? ball_dims(n) : 1;
  auto pick_ref = [&](const double* u) -> Vec {
    if (opts.reference_points.empty()) return ball_point(u, n, ref.r1);
    const std::size_t k = std::min(opts.reference_points.size() - 1,
                                   static_cast<std::size_t>(u[0] * opts.reference_points.size()));
    return opts.reference_points[k];
  };

  DeadzoneGain out;
  // r3: smallest r with r(θ'−θ)ᵀdzv(θ') ≥ |θ'−θ|² for θ ∈ Θ, |θ'| > l_s.
  {
    Halton h(dth + ball_dims(q) + 1, opts.seed);
    std::vector<Vec> thetas = plant.theta_set.vertices();
    double r3 = 0.0;
    for (std::size_t i = 0; i < opts.samples; ++i) {
      const auto& u = h.next();
      const Vec th = (i < thetas.size()) ? thetas[i] : plant.theta_set.point(u.data());
      Vec dir = ball_point(u.data() + dth, q, 1.0);
      if (dir.norm() < 1e-12) continue;
      dir.normalize();
      const double rad = sat.l_s * (1.0 + 1e-9) + u[dth + ball_dims(q)] * (r_out - sat.l_s);
      const Vec tp = rad * dir;
      const Vec d = tp - th;
      const double num = d.squaredNorm();
      const double den = d.dot(dzv(tp, l_theta));
      if (!(den > 0.0)) {
        throw NumericError("select_kdz: r3 unbounded on samples (l_s too close to l_theta)");
      }
      r3 = std::max(r3, num / den);
    }
    out.r3 = r3;
  }
  // r4: sup |ς(x_r)φ̃_s(θ, θ'−θ, x_r)|; φ̃_s only sees satv(θ'), which ranges over the cube of half-width l_s+ε_s/2.
  {
    Halton h(dth + q + dref, opts.seed + 1);
    const Vec hi = Vec::Constant(q, sat.bound());
    double r4 = 0.0, m1 = 0.0;
    for (std::size_t i = 0; i < opts.samples; ++i) {
      const auto& u = h.next();
      const Vec th = plant.theta_set.point(u.data());
      const Vec vt = box_point(u.data() + dth, -hi, hi);
      const Vec xr = pick_ref(u.data() + dth + q);
      const Vec v = shaping.varsigma(xr) * (plant.phi(vt, xr) - plant.phi(th, xr));
      r4 = std::max(r4, v.norm());
      m1 = std::max(m1, spectral_norm(M1(xr)));
    }
    out.r4 = r4;
    out.m1_max = m1;
  }
  out.k_dz_star = opts.inflation * (out.r3 * out.r4 / (2.0 * l_theta + 1.0) + out.r3 * out.m1_max);
  out.k_dz = std::max(opts.k_dz_config, out.k_dz_star);
  return out;
}

}  // namespace iiadapt
