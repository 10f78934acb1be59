#include "iiadapt/lyapunov.hpp"

#include "iiadapt/errors.hpp"
#include "iiadapt/sampling.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>

namespace iiadapt {

MonotonicityReport check_monotonicity(const Plant& plant, const VarsigmaFn& varsigma, const M1Fn& M1,
                                      const SatParams& sat, const std::vector<Vec>& reference_points,
                                      const MonotonicityOptions& opts) {
  sat.validate();
  if (reference_points.empty()) throw ParameterError("check_monotonicity: no reference points");
  if (!opts.allow_small_ls && !(sat.l_s > std::sqrt(static_cast<double>(plant.q)) * plant.l_theta)) {
    throw PreconditionError("check_monotonicity: requires l_s > sqrt(q)*l_theta");
  }
  const int q = plant.q;
  const int dth = plant.theta_set.unit_dims();
  Halton h(dth + ball_dims(q), opts.seed);
  MonotonicityReport r;
  for (std::size_t k = 0; k < opts.samples; ++k) {
    const auto& u = h.next();
    const Vec theta = plant.theta_set.point(u.data());
    const Vec theta_p = ball_point(u.data() + dth, q, sat.l_s);
    const Vec& xr = reference_points[k % reference_points.size()];
    const Vec d = theta_p - theta;
    const double lhs = d.dot(varsigma(xr) * (plant.phi(theta_p, xr) - plant.phi(theta, xr)));
    const double mid = d.dot(M1(xr) * d);
    const double v_up = mid - lhs, v_lo = -mid;
    r.max_violation_upper = std::max(r.max_violation_upper, v_up);
    r.max_violation_lower = std::max(r.max_violation_lower, v_lo);
    if (v_up > opts.tol || v_lo > opts.tol) ++r.violations;
    ++r.samples;
  }
  r.pass = r.violations == 0;
  return r;
}

PeReport check_pe(const M1Fn& M1, const std::function<Vec(double)>& x_r, double delta,
                  const std::vector<double>& t_grid, double abs_tol) {
  if (!(delta > 0.0)) throw ParameterError("check_pe: delta must be positive");
  if (t_grid.empty()) throw ParameterError("check_pe: empty time grid");
  using boost::math::quadrature::gauss_kronrod;
  const int q = static_cast<int>(M1(x_r(t_grid.front())).rows());
  PeReport rep;
  rep.mu = kInf;
  for (double t : t_grid) {
    Mat W(q, q);
    for (int i = 0; i < q; ++i) {
      for (int j = i; j < q; ++j) {
        auto f = [&](double tau) {
          const Mat m = M1(x_r(tau));
          return m(i, j) + m(j, i);
        };
        double err = 0.0;
        const double v = gauss_kronrod<double, 61>::integrate(f, t, t + delta, 15, 1e-14, &err);
        if (!std::isfinite(v) || err > abs_tol) throw NumericError("check_pe: quadrature did not converge");
        rep.max_error_estimate = std::max(rep.max_error_estimate, err);
        W(i, j) = v;
        W(j, i) = v;
      }
    }
    const double lmin = Eigen::SelfAdjointEigenSolver<Mat>(W, Eigen::EigenvaluesOnly).eigenvalues().minCoeff();
    if (lmin < rep.mu) {
      rep.mu = lmin;
      rep.t_argmin = t;
      rep.window_at_argmin = W;
    }
  }
  rep.pass = rep.mu > 0.0;
  return rep;
}

AuxField make_aux_field(const Plant& plant, const Reference& ref, const ShapingFns& shaping, const SatParams& sat,
                        const Vec& theta, double k_dz) {
  AuxField f;
  f.q = plant.q;
  f.eval = [plant, ref, shaping, sat, theta, k_dz](double t, const double* tl, double* H, double* J) {
    const Vec tilde = Eigen::Map<const Vec>(tl, plant.q);
    const Vec xr = ref.x_r(t);
    Eigen::Map<Vec>(H, plant.q) = H_field(plant, theta, tilde, xr, shaping, sat, k_dz);
    if (J) {
      const Mat Jm = H_jacobian(plant, theta, tilde, xr, shaping, sat, k_dz);
      for (int i = 0; i < plant.q; ++i)
        for (int j = 0; j < plant.q; ++j) J[i * plant.q + j] = Jm(i, j);
    }
  };
  return f;
}

AuxField linear_test_field(int q, double rate) {
  AuxField f;
  f.q = q;
  f.eval = [q, rate](double, const double* tl, double* H, double* J) {
    for (int i = 0; i < q; ++i) H[i] = -rate * tl[i];
    if (J) {
      for (int i = 0; i < q * q; ++i) J[i] = 0.0;
      for (int i = 0; i < q; ++i) J[i * q + i] = -rate;
    }
  };
  return f;
}

VestEvaluator::VestEvaluator(AuxField field, double delta, int steps)
    : field_(std::move(field)), delta_(delta), steps_(steps) {
  if (!(delta > 0.0) || steps < 1 || field_.q < 1 || !field_.eval) {
    throw ParameterError("VestEvaluator: need delta > 0, steps >= 1 and a field");
  }
}

Vec VestEvaluator::H(double t, const Vec& tilde) const {
  Vec out(field_.q);
  field_.eval(t, tilde.data(), out.data(), nullptr);
  return out;
}

Mat VestEvaluator::jacobian(double t, const Vec& tilde) const {
  const int q = field_.q;
  Vec h(q);
  std::vector<double> J(static_cast<std::size_t>(q * q));
  field_.eval(t, tilde.data(), h.data(), J.data());
  Mat out(q, q);
  for (int i = 0; i < q; ++i)
    for (int j = 0; j < q; ++j) out(i, j) = J[static_cast<std::size_t>(i * q + j)];
  return out;
}

double VestEvaluator::operator()(double t, const Vec& tilde) const { return eval(t, tilde, false).V; }

VestValue VestEvaluator::eval(double t, const Vec& tilde, bool with_gradient) const {
  const int q = field_.q;
  if (tilde.size() != q) throw DimensionError("VestEvaluator: dimension mismatch");
  // Augmented state: Φ (q), ∫|Φ|² (1), and with the gradient S = ∂Φ/∂θ̃ (q×q) and ∫2SᵀΦ (q).
  const int n = with_gradient ? 1 + 2 * q + q * q : q + 1;
  std::vector<double> z(static_cast<std::size_t>(n), 0.0), k1(z), k2(z), k3(z), k4(z), tmp(z);
  std::vector<double> J(static_cast<std::size_t>(q * q));
  for (int i = 0; i < q; ++i) z[static_cast<std::size_t>(i)] = tilde[i];
  if (with_gradient) {
    for (int i = 0; i < q; ++i) z[static_cast<std::size_t>(q + 1 + i * q + i)] = 1.0;
  }
  auto rhs = [&](double tau, const std::vector<double>& s, std::vector<double>& d) {
    field_.eval(tau, s.data(), d.data(), with_gradient ? J.data() : nullptr);
    double nn = 0.0;
    for (int i = 0; i < q; ++i) nn += s[static_cast<std::size_t>(i)] * s[static_cast<std::size_t>(i)];
    d[static_cast<std::size_t>(q)] = nn;
    if (!with_gradient) return;
    const double* S = s.data() + q + 1;
    double* dS = d.data() + q + 1;
    for (int i = 0; i < q; ++i)
      for (int j = 0; j < q; ++j) {
        double acc = 0.0;
        for (int k = 0; k < q; ++k) acc += J[static_cast<std::size_t>(i * q + k)] * S[k * q + j];
        dS[i * q + j] = acc;
      }
    double* dg = d.data() + q + 1 + q * q;
    for (int j = 0; j < q; ++j) {
      double acc = 0.0;
      for (int i = 0; i < q; ++i) acc += S[i * q + j] * s[static_cast<std::size_t>(i)];
      dg[j] = 2.0 * acc;
    }
  };
  const double h = delta_ / steps_;
  VestValue out;
  double prev_norm = tilde.norm();
  for (int k = 0; k < steps_; ++k) {
    const double tau = t + h * k;
    rhs(tau, z, k1);
    for (int i = 0; i < n; ++i) tmp[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + 0.5 * h * k1[static_cast<std::size_t>(i)];
    rhs(tau + 0.5 * h, tmp, k2);
    for (int i = 0; i < n; ++i) tmp[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + 0.5 * h * k2[static_cast<std::size_t>(i)];
    rhs(tau + 0.5 * h, tmp, k3);
    for (int i = 0; i < n; ++i) tmp[static_cast<std::size_t>(i)] = z[static_cast<std::size_t>(i)] + h * k3[static_cast<std::size_t>(i)];
    rhs(tau + h, tmp, k4);
    for (int i = 0; i < n; ++i) {
      const auto u = static_cast<std::size_t>(i);
      z[u] += (h / 6.0) * (k1[u] + 2.0 * k2[u] + 2.0 * k3[u] + k4[u]);
    }
    double nn = 0.0;
    for (int i = 0; i < q; ++i) nn += z[static_cast<std::size_t>(i)] * z[static_cast<std::size_t>(i)];
    nn = std::sqrt(nn);
    if (!std::isfinite(nn)) throw NumericError("VestEvaluator: auxiliary flow blew up");
    out.max_norm_increase = std::max(out.max_norm_increase, nn - prev_norm);
    prev_norm = nn;
  }
  out.V = z[static_cast<std::size_t>(q)];
  out.phi_end = Eigen::Map<const Vec>(z.data(), q);
  if (with_gradient) out.grad = Eigen::Map<const Vec>(z.data() + 1 + q + q * q, q);
  return out;
}

double VestEvaluator::derivative(double t, const Vec& tilde, const Vec& tilde_dot) const {
  const VestValue v = eval(t, tilde, true);
  return v.phi_end.squaredNorm() - tilde.squaredNorm() + v.grad.dot(tilde_dot - H(t, tilde));
}

double a_star_from(double a1, double a2, double a3, double a4) {
  if (!(a1 > 0.0 && a2 > 0.0 && a3 > 0.0 && a4 >= 0.0)) throw ParameterError("a*: constants must be positive");
  return std::sqrt(a2) * a4 / (std::sqrt(a1) * a3);
}

namespace {

struct ASample {
  double t = 0;
  Vec tilde;
  double value = 0;
};

// Keeps the n entries with the smallest value.
void keep_smallest(std::vector<ASample>& best, std::size_t n, ASample s) {
  if (n == 0) return;
  if (best.size() < n) {
    best.push_back(std::move(s));
  } else {
    auto worst = std::max_element(best.begin(), best.end(),
                                  [](const ASample& a, const ASample& b) { return a.value < b.value; });
    if (s.value >= worst->value) return;
    *worst = std::move(s);
  }
}

// Coordinate pattern search minimising f(t, θ̃) on the sphere |θ̃| = r.
template <class F>
double pattern_search(F f, ASample s, double t_max, int iters, std::size_t& evals) {
  const double r = s.tilde.norm();
  const int q = static_cast<int>(s.tilde.size());
  double dt = 0.05 * t_max, dd = 0.1;
  for (int it = 0; it < iters && (dt > 1e-6 * t_max || dd > 1e-6); ++it) {
    bool moved = false;
    auto attempt = [&](double t, Vec th) {
      th *= r / th.norm();
      const double v = f(t, th);
      ++evals;
      if (v < s.value) {
        s = {t, std::move(th), v};
        moved = true;
      }
    };
    attempt(s.t + dt, s.tilde);
    attempt(s.t - dt, s.tilde);
    for (int i = 0; i < q; ++i) {
      for (double sg : {1.0, -1.0}) {
        Vec th = s.tilde;
        th[i] += sg * dd * r;
        attempt(s.t, th);
      }
    }
    if (!moved) {
      dt *= 0.5;
      dd *= 0.5;
    }
  }
  return s.value;
}

}  // namespace

AConstants estimate_a_constants(const VestEvaluator& ev, const ASampleSpec& spec) {
  const int q = ev.q();
  Halton hal(2 + ball_dims(q), spec.seed);
  AConstants c;
  c.a2 = ev.delta();
  c.a1_raw = kInf;
  c.a3_raw = kInf;
  std::vector<ASample> low1, low3, high4;
  const double lr0 = std::log(spec.r_min), lr1 = std::log(spec.r_max);
  for (std::size_t k = 0; k < spec.samples; ++k) {
    const auto& u = hal.next();
    const double t = u[0] * spec.t_max;
    const double r = std::exp(lr0 + (lr1 - lr0) * u[1]);
    const Vec dir = ball_point(u.data() + 2, q, 1.0);
    if (dir.norm() < 1e-9) continue;
    const Vec tilde = r * dir.normalized();
    const VestValue v = ev.eval(t, tilde, true);
    const double r2 = r * r;
    c.a1_raw = std::min(c.a1_raw, v.V / r2);
    if (v.V > ev.delta() * r2 * (1.0 + 1e-12)) ++c.upper_bound_violations;
    const double dec = (r2 - v.phi_end.squaredNorm()) / r2;
    c.a3_raw = std::min(c.a3_raw, dec);
    c.a4_raw = std::max(c.a4_raw, v.grad.norm() / r);
    keep_smallest(low1, spec.refine, {t, tilde, v.V / r2});
    keep_smallest(low3, spec.refine, {t, tilde, dec});
    keep_smallest(high4, spec.refine, {t, tilde, -v.grad.norm() / r});
    c.h = std::max(c.h, spectral_norm(ev.jacobian(t, tilde)));
    ++c.samples;
  }
  // Narrow weakly excited cones are easy to miss by sampling alone.
  auto ratio1 = [&ev](double t, const Vec& th) { return ev.eval(t, th, false).V / th.squaredNorm(); };
  auto ratio3 = [&ev](double t, const Vec& th) {
    const double r2 = th.squaredNorm();
    return (r2 - ev.eval(t, th, false).phi_end.squaredNorm()) / r2;
  };
  auto ratio4 = [&ev](double t, const Vec& th) { return -ev.eval(t, th, true).grad.norm() / th.norm(); };
  for (const auto& s : low1) c.a1_raw = std::min(c.a1_raw, pattern_search(ratio1, s, spec.t_max, spec.refine_iters, c.refine_evaluations));
  for (const auto& s : low3) c.a3_raw = std::min(c.a3_raw, pattern_search(ratio3, s, spec.t_max, spec.refine_iters, c.refine_evaluations));
  for (const auto& s : high4) c.a4_raw = std::max(c.a4_raw, -pattern_search(ratio4, s, spec.t_max, spec.refine_iters, c.refine_evaluations));
  c.a1 = spec.deflation * c.a1_raw;
  c.a3 = spec.deflation * c.a3_raw;
  c.a4 = spec.inflation * c.a4_raw;
  if (!(c.a1 > 0.0 && c.a3 > 0.0)) {
    throw NumericError("estimate_a_constants: no uniform decay of the auxiliary flow on the samples");
  }
  c.a_star = a_star_from(c.a1, c.a2, c.a3, c.a4);
  const double k = (2.0 * c.h * c.a2 - c.a3) / (2.0 * c.a2);
  c.a4_closed_form = 2.0 * std::sqrt(c.a2 / c.a1) * std::expm1(k * c.a2) / k;
  return c;
}

GainFn lemma3_sigma(double a1, double a_star, double l_gamma, double tau_est, const GainFn& kappa2) {
  const double c = a1 * std::pow(tau_est * a_star * l_gamma, 2);
  const double lim = kappa2.sup_limit() < kInf ? c * kappa2.sup_limit() * kappa2.sup_limit() : kInf;
  return GainFn::unchecked(kappa2.tag(), [c, kappa2](double s) { return c * std::pow(kappa2(s), 2); }, lim,
                           "sigma_theta_e");
}

Lemma3Report check_lemma3_implication(const VestEvaluator& ev, const GainFn& sigma,
                                      const std::vector<Lemma3Sample>& samples, double a3, double tau_est) {
  if (!(tau_est > 1.0)) throw ParameterError("lemma3: tau_est must exceed 1");
  const double rate = a3 * (tau_est - 1.0) / tau_est;
  Lemma3Report r;
  for (const auto& s : samples) {
    ++r.samples;
    const double n2 = s.tilde.squaredNorm();
    if (n2 == 0.0) continue;
    const VestValue v = ev.eval(s.t, s.tilde, true);
    if (!(v.V >= sigma(s.e_norm))) continue;
    ++r.active;
    const double vdot = v.phi_end.squaredNorm() - n2 + v.grad.dot(s.tilde_dot - ev.H(s.t, s.tilde));
    const double excess = vdot + rate * n2;
    r.worst_excess = std::max(r.worst_excess, excess / n2);
    if (excess > 1e-10 * std::max(1.0, n2)) ++r.violations;
  }
  r.pass = r.violations == 0;
  return r;
}

namespace {

template <class F>
double integrate_on(F f, double a, double b, unsigned depth = 10) {
  if (!(b > a)) return 0.0;
  double err = 0.0;
  // Mapped to [0, 1]: the library compares the unscaled error against a scaled tolerance, so
  // short intervals would otherwise always recurse to the depth limit.
  const double w = b - a;
  auto g = [&f, a, w](double u) { return f(a + w * u); };
  // The integrands go through bisection inverses (relative accuracy 1e-10), so a tighter
  // tolerance only drives the recursion to its depth limit.
  return w * boost::math::quadrature::gauss_kronrod<double, 31>::integrate(g, 0.0, 1.0, depth, 1e-7, &err);
}

template <class F>
double integrate0(F f, double v) {
  return integrate_on(f, 0.0, v);
}

std::vector<double> log_points(double lo, double hi, int count) {
  std::vector<double> g(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = lo * std::pow(hi / lo, static_cast<double>(i) / (count - 1));
  return g;
}

}  // namespace

SumLyapunov::SumLyapunov(VclInputs in) : in_(std::move(in)) {
  if (!(in_.tau1 > 2.0 && in_.tau2 > 2.0)) throw ParameterError("build_vcl: tau1 and tau2 must exceed 2");
  if (!(in_.tau_err >= in_.tau1 * in_.tau2)) throw ParameterError("build_vcl: need tau_err >= tau1*tau2");
  if (!(in_.a.a1 > 0.0 && in_.a.a3 > 0.0)) throw ParameterError("build_vcl: a-constants not calibrated");
  a1inv_ = inverse_fn(in_.alpha1);
  grid_ = log_points(1e-14, 1e8, 441);
}

double SumLyapunov::rho_err(double s) const {
  const double r = a1inv_(in_.alpha2(s));
  return in_.tau1 * gamma_s(in_.a.a_star * in_.tau2 * in_.gs.l_gamma() * in_.kappa2(r), in_.gs);
}

double SumLyapunov::lambda_err(double s) const {
  // σ_est∘α1⁻¹ · ζ_est∘ρ_est⁻¹∘τ2σ_est∘α1⁻¹ with σ_est = a4 l_γ κ2, ρ_est = a3·Id, ζ_est = Id.
  const double sig = in_.a.a4 * in_.gs.l_gamma() * in_.kappa2(a1inv_(s));
  return sig * in_.tau2 * sig / in_.a.a3;
}

double SumLyapunov::lambda_est(double s) const {
  // σ_err∘α̲_est⁻¹ · ζ_err∘ρ_err⊖∘τ1σ_err∘α̲_est⁻¹ with σ_err = γ_s, α̲_est = a1·s², ζ_err = α4·κ1.
  const double sig = gamma_s(std::sqrt(std::max(s, 0.0) / in_.a.a1), in_.gs);
  const double target = in_.tau1 * sig;
  const GainFn rho = GainFn::unchecked(GainFn::Tag::K, [this](double v) { return rho_err(v); },
                                       in_.tau1 * in_.gs.l_gamma(), "rho_err");
  double r = ominus(rho, target);
  if (!(r <= in_.ominus_cap)) {
    r = in_.ominus_cap;
    ++capped_;
  }
  return sig * in_.alpha4(r) * in_.kappa1(r);
}


template <class F>
double SumLyapunov::tabulated(Table& tab, F lambda, double v) const {
  if (!(v > 0.0)) return 0.0;
  if (!tab.ready) {
    tab.cum.assign(grid_.size(), 0.0);
    tab.cum[0] = integrate0(lambda, grid_[0]);
    for (std::size_t k = 1; k < grid_.size(); ++k) tab.cum[k] = tab.cum[k - 1] + integrate_on(lambda, grid_[k - 1], grid_[k]);
    tab.ready = true;
  }
  if (v <= grid_.front()) return integrate0(lambda, v);
  const std::size_t k =
      static_cast<std::size_t>(std::upper_bound(grid_.begin(), grid_.end(), v) - grid_.begin()) - 1;
  // One fixed rule on the partial cell keeps v ↦ ∫₀^v monotone and cheap.
  return tab.cum[k] + integrate_on(lambda, grid_[k], v, 0);
}

double SumLyapunov::integral_err(double v) const {
  return tabulated(err_tab_, [this](double s) { return lambda_err(s); }, v);
}

double SumLyapunov::integral_est(double v) const {
  return tabulated(est_tab_, [this](double s) { return lambda_est(s); }, v);
}

double SumLyapunov::decrease_bound(double e_norm, double tilde_norm, double V_err, double V_est) const {
  const double zeta_err = in_.alpha4(e_norm) * in_.kappa1(e_norm);
  return (in_.tau1 - 2.0) / in_.tau1 * lambda_err(V_err) * zeta_err * rho_err(e_norm) +
         (in_.tau2 - 2.0) / in_.tau2 * lambda_est(V_est) * tilde_norm * in_.a.a3 * tilde_norm;
}

SumLyapunov build_vcl(const VclInputs& in) { return SumLyapunov(in); }

}  // namespace iiadapt
