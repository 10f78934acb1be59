#include "iiadapt/expdiag.hpp"

#include "iiadapt/errors.hpp"

#include <cmath>

namespace iiadapt {

ExpDiag make_expdiag(double k_e, double t_max, double l_s, double eps_s) {
  if (!(k_e > 0.0)) throw ParameterError("expdiag: k_e must be positive");
  ExpDiag d;
  d.k_e = k_e;
  Plant& p = d.plant;
  p.n = 2;
  p.m = 2;
  p.q = 2;
  p.name = "expdiag";
  p.f1 = [](const Vec& x) {
    Vec f(2);
    f << 0.5 * x[1], -0.5 * x[0];
    return f;
  };
  p.phi = [](const Vec& th, const Vec& x) {
    Vec f(2);
    f << x[0] * std::exp(th[0]), x[1] * std::exp(th[1]);
    return f;
  };
  p.dphi_dtheta = [](const Vec& th, const Vec& x) {
    Mat J = Mat::Zero(2, 2);
    J(0, 0) = x[0] * std::exp(th[0]);
    J(1, 1) = x[1] * std::exp(th[1]);
    return J;
  };
  p.g1 = [](const Vec&) { return Mat::Identity(2, 2); };
  p.theta_set = ParameterSet::box(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5));
  p.l_theta = p.theta_set.max_norm();
  p.validate();

  d.ref.x_r = [](double t) {
    Vec x(2);
    x << 1.5 + std::sin(t), 1.5 + std::cos(t);
    return x;
  };
  d.ref.dx_r = [](double t) {
    Vec x(2);
    x << std::cos(t), -std::sin(t);
    return x;
  };
  d.ref.r1 = 1.5 * std::sqrt(2.0) + 1.0;
  d.ref.t_max = t_max;

  d.shaping.varsigma = [](const Vec& x) -> Mat { return x.asDiagonal(); };
  d.shaping.beta = [](const Vec& e, const Vec& xr) -> Vec {
    return (0.5 * e.array().square() + xr.array() * e.array()).matrix();
  };
  d.shaping.dbeta_de = [](const Vec& e, const Vec& xr) -> Mat { return (e + xr).asDiagonal(); };
  d.shaping.dbeta_dxr = [](const Vec& e, const Vec&) -> Mat { return e.asDiagonal(); };
  d.shaping.dvarsigma = [](const Vec&, const Vec& w) -> Mat { return w.asDiagonal(); };

  d.sat = SatParams{l_s, eps_s, p.l_theta};
  d.sat.validate();
  d.gs = GammaSParams::from_sat(d.sat, p.q);

  const Plant plant = p;
  d.law.psi = [plant, k_e](const Vec& xr, const Vec& dxr, const Vec& th, const Vec& e) -> Vec {
    const Vec x = e + xr;
    return -plant.f1(x) - plant.phi(th, x) + dxr - k_e * e;
  };
  d.law.V_err = [](double, const Vec& e) { return e.squaredNorm(); };
  d.law.dVerr_de = [](double, const Vec& e) -> Vec { return 2.0 * e; };
  d.law.alpha1 = GainFn::make(GainFn::Tag::Kinf, [](double s) { return s * s; }, kInf, "s^2");
  d.law.alpha2 = d.law.alpha1;
  d.law.alpha3 = GainFn::make(GainFn::Tag::Kinf, [k_e](double s) { return 2.0 * k_e * s * s; }, kInf, "2k_e s^2");
  d.law.alpha4 = GainFn::linear(2.0);

  const double c = std::exp(-l_s);
  d.M1 = [c](const Vec& xr) -> Mat { return c * xr.array().square().matrix().asDiagonal(); };
  return d;
}

}  // namespace iiadapt
