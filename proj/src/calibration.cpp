#include "iiadapt/calibration.hpp"

#include "iiadapt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace iiadapt {

namespace {

constexpr double kTwoPi = 6.283185307179586;

double spectral2(double a, double b, double c, double d) {
  const double f = a * a + b * b + c * c + d * d;
  const double det = a * d - b * c;
  return std::sqrt(0.5 * (f + std::sqrt(std::max(0.0, f * f - 4.0 * det * det))));
}

std::vector<double> linspace(double lo, double hi, int n) {
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
  return v;
}

std::vector<double> running_max(std::vector<double> v) {
  for (std::size_t k = 1; k < v.size(); ++k) v[k] = std::max(v[k], v[k - 1]);
  return v;
}

GainFn square_law() {
  return GainFn::make(GainFn::Tag::Kinf, [](double s) { return s * s; }, kInf, "s^2");
}

}  // namespace

SeaBounds sea_bounds(const SeaModel& model, const SeaGains& gains, const SeaBoundOptions& o) {
  if (!(o.e_work > 0.0 && o.e_max > o.e_work && o.radii >= 2 && o.theta_grid >= 2 && o.d_grid >= 2)) {
    throw ParameterError("sea_bounds: bad sampling options");
  }
  const double B = model.sat.bound();
  const auto th = linspace(-B, B, o.theta_grid);
  const auto ds = linspace(std::exp(-1.0), std::exp(1.0), o.d_grid);

  std::vector<double> radii{0.0};
  for (double r : log_grid(1e-4, o.e_max, o.radii)) radii.push_back(r);
  radii.push_back(o.e_work);
  std::sort(radii.begin(), radii.end());
  radii.erase(std::unique(radii.begin(), radii.end()), radii.end());
  const std::size_t nr = radii.size();

  // Pointwise suprema over ϑ in the saturation cube and d_r ∈ [e⁻¹, e], maximised over the sign of e1.
  std::vector<double> F(nr, 0.0), P(nr, 0.0), D(nr, 0.0);
  for (std::size_t k = 0; k < nr; ++k) {
    for (double sign : {-1.0, 1.0}) {
      const double e1 = sign * radii[k];
      for (double d : ds) {
        const double y = d + e1;
        const auto s0 = model.varsigma(d);
        const auto s1 = model.varsigma(y);
        const double ns1 = std::hypot(s1[0], s1[1]);
        for (double t1 : th) {
          for (double t2 : th) {
            const auto g0 = model.dphi_dtheta(t1, t2, d);
            const auto g1 = model.dphi_dtheta(t1, t2, y);
            const double n1 = std::hypot(g1[0], g1[1]);
            F[k] = std::max(F[k], n1);
            P[k] = std::max(P[k], n1 * ns1);
            D[k] = std::max(D[k], spectral2(s0[0] * g0[0] - s1[0] * g1[0], s0[0] * g0[1] - s1[0] * g1[1],
                                            s0[1] * g0[0] - s1[1] * g1[0], s0[1] * g0[1] - s1[1] * g1[1]));
          }
        }
      }
    }
  }

  SeaBounds b;
  const double inf = o.inflation;
  std::vector<double> k1 = running_max(F), k2 = running_max(D);
  for (std::size_t k = 0; k < nr; ++k) {
    k1[k] *= inf;
    k2[k] = inf * k2[k] + o.strict_slope * radii[k];
  }
  b.kappa1 = piecewise_linear(GainFn::Tag::SN, radii, k1, "kappa1");
  b.kappa2 = piecewise_linear(GainFn::Tag::K, radii, k2, "kappa2");
  b.varrho1_star = k1[0];
  std::vector<double> v1(nr);
  for (std::size_t k = 0; k < nr; ++k) v1[k] = k1[k] - k1[0] + o.strict_slope * radii[k];
  b.varrho1 = piecewise_linear(GainFn::Tag::K, radii, v1, "varrho1");
  b.varrho2 = b.kappa2;

  // ϱ3: |ς(y) − ς(y−ε)|·|∇φ(ϑ,y)| over |e1| ≤ e_work; |∇φ| peaks at a corner of the cube.
  std::vector<double> R3(nr, 0.0);
  const std::vector<double> corners{-B, 0.0, B};
  const auto e1s = linspace(-o.e_work, o.e_work, 5);
  for (std::size_t k = 1; k < nr; ++k) {
    for (double sign : {-1.0, 1.0}) {
      const double eps = sign * radii[k];
      for (double e1 : e1s) {
        for (double d : ds) {
          const double y = d + e1;
          const auto sa = model.varsigma(y);
          const auto sb = model.varsigma(y - eps);
          const double dn = std::hypot(sa[0] - sb[0], sa[1] - sb[1]);
          for (double t1 : corners) {
            for (double t2 : corners) {
              const auto g = model.dphi_dtheta(t1, t2, y);
              R3[k] = std::max(R3[k], dn * std::hypot(g[0], g[1]));
            }
          }
        }
      }
    }
  }
  R3 = running_max(R3);
  for (std::size_t k = 0; k < nr; ++k) R3[k] = inf * R3[k] + o.strict_slope * radii[k];
  b.varrho3 = piecewise_linear(GainFn::Tag::K, radii, R3, "varrho3");

  const double p = model.p_star;
  const double l_gamma = model.gs.l_gamma();
  double fw = 0.0;
  for (std::size_t k = 0; k < nr && radii[k] <= o.e_work; ++k) fw = std::max(fw, F[k]);
  b.delta2 = inf * fw;
  for (std::size_t k = 1; k < nr; ++k) {
    b.delta1 = std::max(b.delta1, std::max(0.0, F[k] - b.delta2) / std::pow(radii[k], 2.0 * p + 2.0));
  }
  b.delta1 *= inf;

  const double a = 2.0 * p + 1.0;
  const double c = std::abs(gains.k1 + 0.5 - model.b3);
  auto F2 = [&](std::size_t i, double e2) {
    return (gains.k21 + gains.k22 * (a + 1.0) * std::pow(e2, a) + c + P[i]) * F[i];
  };
  for (std::size_t k = 0; k < nr && radii[k] <= o.e_work; ++k) b.rho0 = std::max(b.rho0, F2(k, o.e_work));
  b.rho0 *= inf;
  double r12 = 0.0;
  for (std::size_t i = 0; i < nr; ++i) {
    for (std::size_t j = 0; j < nr; ++j) {
      if (i == 0 && j == 0) continue;
      const double excess = std::max(0.0, F2(i, radii[j]) - b.rho0);
      if (excess == 0.0) continue;
      r12 = std::max(r12, excess * l_gamma / (std::pow(radii[i], 4.0 * p + 6.0) + std::pow(radii[j], 4.0 * p + 2.0)));
    }
  }
  b.rho1 = b.rho2 = inf * r12;
  return b;
}

AuxField sea_aux_field(const SeaModel& model, const Vec& theta, double k_dz) {
  if (theta.size() != 2) throw DimensionError("sea_aux_field: theta must have two entries");
  AuxField f;
  f.q = 2;
  const double th0 = theta[0], th1 = theta[1];
  f.eval = [model, th0, th1, k_dz](double t, const double* tl, double* H, double* J) {
    const double d = sea_reference(t).d;
    const auto sg = model.varsigma(d);
    const double w0 = th0 + tl[0], w1 = th1 + tl[1];
    const double v0 = sat(w0, model.sat), v1 = sat(w1, model.sat);
    const double diff = model.phi(v0, v1, d) - model.phi(th0, th1, d);
    const double lt = model.sat.l_theta;
    H[0] = sg[0] * diff - k_dz * dz(w0, lt);
    H[1] = sg[1] * diff - k_dz * dz(w1, lt);
    if (J) {
      const auto g = model.dphi_dtheta(v0, v1, d);
      const double c0 = g[0] * sat_derivative(w0, model.sat), c1 = g[1] * sat_derivative(w1, model.sat);
      J[0] = sg[0] * c0 - k_dz * dz_derivative(w0, lt);
      J[1] = sg[0] * c1;
      J[2] = sg[1] * c0;
      J[3] = sg[1] * c1 - k_dz * dz_derivative(w1, lt);
    }
  };
  return f;
}

double sea_g(const GammaSParams& gs, double a_star, double tau_est, const GainFn& kappa2) {
  const double c = tau_est * a_star * gs.l_gamma();
  double best = 0.0;
  for (double s : log_grid(1e-12, 1e12, 2401)) {
    const double v = gamma_s(c * kappa2(std::sqrt(s)), gs);
    best = std::max(best, v * v / s);
  }
  return std::sqrt(best);
}

SeaCalibration calibrate_sea(const ClosedLoop& cl, const SeaCalibrationOptions& opts) {
  const SeaModel& model = cl.sea_model();
  const SeaGains& gains = cl.sea_gains();
  SeaCalibration c{sea_bounds(model, gains, opts.bounds),
                   AConstants{},
                   SeaDesignConstants{},
                   VestEvaluator(sea_aux_field(model, cl.theta(), cl.sea_estimator().k_dz), opts.delta,
                                 opts.vest_steps),
                   GainFn::zero(),
                   model.gs,
                   opts.tau_est,
                   {}};
  c.a = estimate_a_constants(c.vest, opts.a_spec);
  SeaDesignConstants& k = c.constants;
  k.delta1 = c.bounds.delta1;
  k.delta2 = c.bounds.delta2;
  k.rho0 = c.bounds.rho0;
  k.rho1 = c.bounds.rho1;
  k.rho2 = c.bounds.rho2;
  k.a1 = c.a.a1;
  k.a_star = c.a.a_star;
  k.tau_est = opts.tau_est;
  k.kappa2 = c.bounds.kappa2;
  k.g = sea_g(c.gs, k.a_star, k.tau_est, k.kappa2);
  c.sigma = lemma3_sigma(k.a1, k.a_star, c.gs.l_gamma(), k.tau_est, k.kappa2);
  c.gain_warnings = sea_gain_warnings(gains, k, c.gs.l_gamma());
  return c;
}

GainNetwork sea_gain_network(const SeaGains& gains, const SeaDesignConstants& c, const GammaSParams& gs) {
  if (!(gains.k1 > 0.0)) throw ParameterError("sea_gain_network: k1 must be positive");
  if (!(gains.k21 > 2.5 && gains.k31 > 1.5)) throw ParameterError("sea_gain_network: need k21 > 2.5 and k31 > 1.5");
  if (!(c.a1 > 0.0 && c.a_star > 0.0 && c.tau_est > 1.0)) throw ParameterError("sea_gain_network: constants not calibrated");
  using T = GainFn::Tag;
  GainNetwork net;
  const int e1 = net.add_node("e1"), e2 = net.add_node("e2"), th = net.add_node("theta_tilde"),
            e3 = net.add_node("e3");
  const double a1 = c.a1;
  const double lg2 = gs.l_gamma() * gs.l_gamma();
  auto through_vtheta = [gs, a1, lg2](double coef, const char* name) {
    return GainFn::make(
        T::K,
        [gs, a1, coef](double s) {
          const double v = gamma_s(std::sqrt(s / a1), gs);
          return coef * v * v;
        },
        coef * lg2, name);
  };
  net.add_edge(e2, e1, GainFn::linear(1.0 / (gains.k1 * gains.k1)));
  net.add_edge(e1, e2, GainFn::identity());
  net.add_edge(th, e2, through_vtheta(c.delta2 * c.delta2 / std::pow(gains.k21 - 2.5, 2), "gamma_2_theta"));
  net.add_edge(e3, e2, GainFn::linear(0.5));
  net.add_edge(e1, e3, GainFn::identity());
  net.add_edge(th, e3, through_vtheta(c.rho0 * c.rho0 / std::pow(gains.k31 - 1.5, 2), "gamma_3_theta"));
  net.add_edge(e2, e3, GainFn::identity());
  const double cc = a1 * std::pow(c.tau_est * c.a_star * gs.l_gamma(), 2);
  const GainFn k2 = c.kappa2;
  const double lim = k2.sup_limit() < kInf ? cc * k2.sup_limit() * k2.sup_limit() : kInf;
  net.add_edge(e1, th, GainFn::make(T::K, [cc, k2](double s) { return cc * std::pow(k2(std::sqrt(s)), 2); }, lim,
                                    "gamma_theta_1"));
  return net;
}

PeReport sea_pe(const SeaModel& model, double M0, double delta, int grid) {
  if (grid < 1) throw ParameterError("sea_pe: grid must be positive");
  std::vector<double> ts;
  for (int i = 0; i < grid; ++i) ts.push_back(kTwoPi * i / grid);
  const M1Fn M1 = [model, M0](const Vec& xr) { return sea_M1(model, M0, xr[0]); };
  return check_pe(
      M1, [](double t) { return Vec::Constant(1, sea_reference(t).d); }, delta, ts);
}

Theorem4Inputs sea_theorem4_inputs(const SeaCalibration& cal, double tau_err_prime, double tau_err) {
  Theorem4Inputs in;
  in.a1 = cal.a.a1;
  in.a_star = cal.a.a_star;
  in.l_gamma = cal.gs.l_gamma();
  in.rho1 = cal.bounds.varrho1;
  in.rho2 = cal.bounds.varrho2;
  in.rho3 = cal.bounds.varrho3;
  in.rho1_star = cal.bounds.varrho1_star;
  in.alpha1 = square_law();
  in.gs = cal.gs;
  in.tau_est = cal.tau_est;
  in.tau_err_prime = tau_err_prime;
  in.tau_err = tau_err;
  return in;
}

FilterPowerTerm fit_power_law(const GainFn& floor, double r_lo, double r_hi, double inflation) {
  if (!(r_lo > 0.0 && r_hi > r_lo)) throw ParameterError("fit_power_law: bad range");
  const auto rs = log_grid(r_lo, r_hi, 200);
  std::vector<double> fs;
  for (double r : rs) {
    const double f = floor(r);
    if (!std::isfinite(f)) throw NumericError("fit_power_law: floor is not finite on the range");
    fs.push_back(f);
  }
  FilterPowerTerm best{kInf, 1.0};
  double best_ratio = kInf;
  for (double p = 1.0; p <= 8.0 + 1e-12; p += 0.25) {
    double c = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) c = std::max(c, fs[i] / std::pow(rs[i], p));
    c *= inflation;
    double ratio = 0.0;
    for (std::size_t i = 0; i < rs.size(); ++i) {
      if (fs[i] > 0.0) ratio = std::max(ratio, c * std::pow(rs[i], p) / fs[i]);
    }
    if (ratio < best_ratio) {
      best_ratio = ratio;
      best = {c, p};
    }
  }
  return best;
}

Scenario resolve_scenario(const Scenario& s, const SeaCalibration* cal) {
  if (!s.estimator.calibrate_K) return s;
  if (s.plant != Scenario::PlantKind::Sea || s.estimator.variant != EstimatorSpec::Variant::Filtered) {
    throw ConfigError("estimator.calibrate_K needs the actuator plant with the filtered estimator");
  }
  Scenario out = s;
  out.estimator.calibrate_K = false;
  std::optional<SeaCalibration> local;
  if (!cal) {
    SeaCalibrationOptions o;
    o.vest_steps = s.lyapunov.vest_steps;
    o.a_spec.samples = s.lyapunov.a_samples;
    o.tau_est = s.lyapunov.tau_est;
    local.emplace(calibrate_sea(ClosedLoop(out), o));
    cal = &*local;
  }
  const Theorem4Gains g = theorem4_gains(sea_theorem4_inputs(*cal));
  out.estimator.K1 = fit_power_law(g.k1_floor);
  out.estimator.K2 = fit_power_law(g.k2_floor);
  return out;
}

VclInputs sea_vcl_inputs(const SeaCalibration& cal, double tau1, double tau2) {
  VclInputs in;
  in.alpha1 = square_law();
  in.alpha2 = in.alpha1;
  in.alpha4 = GainFn::linear(2.0);
  in.kappa1 = cal.bounds.kappa1;
  in.kappa2 = cal.bounds.kappa2;
  in.gs = cal.gs;
  in.a = cal.a;
  in.tau1 = tau1;
  in.tau2 = tau2;
  in.tau_err = tau1 * tau2;
  return in;
}

std::vector<Lemma3Sample> lemma3_samples(const ClosedLoop& cl, const RawTrajectory& raw, std::size_t stride) {
  if (stride == 0) throw ParameterError("lemma3_samples: stride must be positive");
  std::vector<Lemma3Sample> out;
  for (std::size_t i = 0; i < raw.t.size(); i += stride) {
    const Sample s = cl.observe(raw.t[i], raw.z[i]);
    Lemma3Sample l;
    l.t = raw.t[i];
    l.tilde = s.theta_tilde;
    l.tilde_dot = cl.tilde_rate(raw.t[i], raw.z[i]);
    l.e_norm = cl.is_sea() ? std::abs(s.e[0]) : s.e.norm();
    out.push_back(std::move(l));
  }
  return out;
}

std::vector<VclSample> vcl_samples(const ClosedLoop& cl, const RawTrajectory& raw, std::size_t stride,
                                   const VestEvaluator& ev, const SumLyapunov& vcl) {
  if (stride == 0) throw ParameterError("vcl_samples: stride must be positive");
  std::vector<VclSample> out;
  const double h = 1e-6;
  Vec dz;
  for (std::size_t i = 0; i < raw.t.size(); i += stride) {
    const double t = raw.t[i];
    const Vec& z = raw.z[i];
    const Sample s = cl.observe(t, z);
    cl.rhs(t, z, dz);
    const Vec edot = (cl.observe(t + h, z + h * dz).e - cl.observe(t - h, z - h * dz).e) / (2.0 * h);
    const Vec tdot = cl.tilde_rate(t, z);
    const VestValue v = ev.eval(t, s.theta_tilde, true);
    VclSample o;
    o.t = t;
    o.joint_norm = std::hypot(s.e.norm(), s.theta_tilde.norm());
    o.V_err = s.e.squaredNorm();
    o.V_est = v.V;
    o.V_cl = vcl.value(o.V_err, o.V_est);
    o.Verr_dot = 2.0 * s.e.dot(edot);
    o.Vest_dot = v.phi_end.squaredNorm() - s.theta_tilde.squaredNorm() + v.grad.dot(tdot - ev.H(t, s.theta_tilde));
    o.Vcl_dot = vcl.derivative(o.V_err, o.V_est, o.Verr_dot, o.Vest_dot);
    out.push_back(o);
  }
  return out;
}

LyapunovProbe make_probe(const VestEvaluator& ev, const SumLyapunov* vcl) {
  LyapunovProbe p;
  p.V_est = [ev](double t, const Vec&, const Vec& tilde) { return ev(t, tilde); };
  if (vcl) {
    const SumLyapunov v = *vcl;
    p.V_cl = [ev, v](double t, const Vec& e, const Vec& tilde) { return v.value(e.squaredNorm(), ev(t, tilde)); };
  }
  return p;
}

ExpDiagCalibration calibrate_expdiag(const ClosedLoop& cl, double k_dz, int vest_steps, std::size_t a_samples) {
  const ExpDiag& ed = cl.expdiag();
  KappaOptions ko;
  ko.varsigma = ed.shaping.varsigma;
  ko.samples = 2048;
  const BoundFns bounds = estimate_bounds(ed.plant, ed.ref, ed.sat, log_grid(1e-3, 10.0, 40), ko);
  VestEvaluator ev(make_aux_field(ed.plant, ed.ref, ed.shaping, ed.sat, cl.theta(), k_dz), kTwoPi, vest_steps);
  ASampleSpec spec;
  spec.samples = a_samples;
  const AConstants a = estimate_a_constants(ev, spec);
  ConditionInputs in;
  in.alpha1 = ed.law.alpha1;
  in.alpha2 = ed.law.alpha2;
  in.alpha3 = ed.law.alpha3;
  in.alpha4 = ed.law.alpha4;
  in.kappa1 = bounds.kappa1;
  in.kappa2 = bounds.kappa2;
  in.gamma_s = gamma_s_fn(ed.gs);
  in.a_star = a.a_star;
  in.l_gamma = ed.gs.l_gamma();
  in.tau_err = 6.25;
  ConditionReport rep = check_theorem2_condition(in, ConditionMode::Corollary1, log_grid(1e-4, 1e2, 200));
  return ExpDiagCalibration{bounds, a, ev, rep};
}

}  // namespace iiadapt
