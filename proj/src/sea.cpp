#include "iiadapt/sea.hpp"

#include "iiadapt/errors.hpp"

#include <algorithm>
#include <cmath>

namespace iiadapt {

namespace {

constexpr double kLogGuard = 1e-12;

double safe_abs(double y) { return std::max(std::abs(y), kLogGuard); }

}  // namespace

void SeaPhysical::validate_constants() const {
  if (!(m > 0 && mu_v > 0 && c_f > 0 && c_b > 0 && L > 0 && R > 0)) {
    throw ParameterError("sea: physical constants must be positive");
  }
  if (!(Q0_l > 0 && Q0_u >= Q0_l && p_lo > 0 && p_hi >= p_lo)) throw ParameterError("sea: bad parameter bounds");
}

void SeaPhysical::validate() const {
  validate_constants();
  if (Q0 < Q0_l || Q0 > Q0_u) throw ParameterError("sea: Q0 outside its bounds");
  if (p < p_lo || p > p_hi) throw ParameterError("sea: p outside its bounds");
}

SeaNormal sea_normal_constants(const SeaPhysical& phys) {
  phys.validate_constants();
  SeaNormal nf;
  const double s = phys.Q0_l + phys.Q0_u;
  nf.b1 = s / (2.0 * phys.m);
  nf.b2 = (2.0 / phys.p_lo) * std::max(std::log(2.0 * phys.Q0_u / s), std::log(s / (2.0 * phys.Q0_l)));
  nf.b3 = phys.mu_v / phys.m;
  nf.p_star = 0.5 * (phys.p_hi + phys.p_lo);
  nf.l_theta = 0.5 * phys.p_hi;
  Vec hi(2);
  hi << 0.5 * phys.p_lo, 0.5 * (phys.p_hi - phys.p_lo);
  nf.theta_set = ParameterSet::box(-hi, hi);
  return nf;
}

SeaNormal sea_to_normal(const SeaPhysical& phys) {
  phys.validate();
  SeaNormal nf = sea_normal_constants(phys);
  nf.theta = Vec(2);
  nf.theta << std::log(2.0 * phys.Q0 / (phys.Q0_l + phys.Q0_u)) / nf.b2, phys.p - nf.p_star;
  return nf;
}

std::pair<double, double> sea_theta_to_physical(const SeaNormal& nf, const Vec& theta) {
  // b1·exp(b2θ1) = Q0/m and θ2 + p* = p.
  const double q0_over_m = nf.b1 * std::exp(nf.b2 * theta[0]);
  return {q0_over_m, theta[1] + nf.p_star};
}

SeaModel SeaModel::make(const SeaNormal& nf, double l_s, double eps_s, double gamma_margin) {
  SeaModel m;
  m.b1 = nf.b1;
  m.b2 = nf.b2;
  m.b3 = nf.b3;
  m.p_star = nf.p_star;
  m.l_theta = nf.l_theta;
  m.theta_set = nf.theta_set;
  m.sat = SatParams{l_s, eps_s, nf.l_theta};
  m.sat.validate();
  if (!(m.sat.bound() < nf.p_star)) throw ParameterError("sea: saturation level must stay below p*");
  m.gs = GammaSParams::from_sat(m.sat, 2, gamma_margin);
  return m;
}

double SeaModel::phi(double t1, double t2, double y) const {
  return b1 * y * std::exp(b2 * t1) * std::pow(std::abs(y), t2 + p_star);
}

std::array<double, 2> SeaModel::dphi_dtheta(double t1, double t2, double y) const {
  const double f = phi(t1, t2, y);
  return {b2 * f, std::log(safe_abs(y)) * f};
}

double SeaModel::dphi_dy(double t1, double t2, double y) const {
  return b1 * std::exp(b2 * t1) * (t2 + p_star + 1.0) * std::pow(std::abs(y), t2 + p_star);
}

std::array<double, 2> SeaModel::varsigma(double y) const { return {-y * b2, -y * std::log(safe_abs(y))}; }

std::array<double, 2> SeaModel::dvarsigma(double y) const { return {-b2, -(std::log(safe_abs(y)) + 1.0)}; }

SeaRef sea_reference(double t) {
  const double s = std::sin(t), c = std::cos(t);
  const double d = std::exp(s);
  return {d, c * d, (c * c - s) * d, (c * c * c - 3.0 * s * c - c) * d};
}

Plant sea_plant(const SeaModel& model) {
  Plant p;
  p.n = 3;
  p.m = 1;
  p.q = 2;
  p.name = "sea";
  const double b3 = model.b3;
  p.f1 = [b3](const Vec& x) {
    Vec f(3);
    f << x[1], -b3 * x[1] + x[2], 0.0;
    return f;
  };
  p.phi = [model](const Vec& th, const Vec& x) {
    Vec f = Vec::Zero(3);
    f[1] = -model.phi(th[0], th[1], x[0]);
    return f;
  };
  p.dphi_dtheta = [model](const Vec& th, const Vec& x) {
    Mat J = Mat::Zero(3, 2);
    const auto d = model.dphi_dtheta(th[0], th[1], x[0]);
    J(1, 0) = -d[0];
    J(1, 1) = -d[1];
    return J;
  };
  p.g1 = [](const Vec&) {
    Mat g = Mat::Zero(3, 1);
    g(2, 0) = 1.0;
    return g;
  };
  p.theta_set = model.theta_set;
  p.l_theta = model.l_theta;
  return p;
}

ShapingFns sea_shaping(const SeaModel& model) {
  ShapingFns s;
  s.varsigma = [model](const Vec& x) {
    Mat S = Mat::Zero(2, 3);
    const auto v = model.varsigma(x[0]);
    S(0, 1) = v[0];
    S(1, 1) = v[1];
    return S;
  };
  s.dvarsigma = [model](const Vec& x, const Vec& w) {
    Mat D = Mat::Zero(2, 3);
    const auto dv = model.dvarsigma(x[0]);
    D(0, 0) = dv[0] * w[1];
    D(1, 0) = dv[1] * w[1];
    return D;
  };
  return s;
}

Reference sea_generic_reference(double t_max) {
  Reference r;
  r.x_r = [](double t) {
    const SeaRef s = sea_reference(t);
    Vec x = Vec::Zero(3);
    x[0] = s.d;
    return x;
  };
  r.dx_r = [](double t) {
    const SeaRef s = sea_reference(t);
    Vec x = Vec::Zero(3);
    x[0] = s.d1;
    return x;
  };
  r.r1 = std::exp(1.0);
  r.t_max = t_max;
  return r;
}

Mat sea_M1(const SeaModel& model, double M0, double xr1) {
  Eigen::Vector2d v(model.b2, std::log(safe_abs(xr1)));
  return M0 * (v * v.transpose());
}

double sea_M0(const SeaModel& model) {
  // ς ∂φ/∂θ = b1 e^{b2ϑ1}|y|^{ϑ2+p*+2} v vᵀ; its smallest scalar factor over |ϑ| ≤ l_s and
  // y ∈ [e⁻¹, e] is attained at y = e⁻¹ and ϑ = −l_s (b2, −1)/|(b2, −1)|.
  const double lmin = -model.sat.l_s * std::hypot(model.b2, 1.0) - model.p_star - 2.0;
  return model.b1 * std::exp(lmin);
}

double sea_input_voltage(const SeaPhysical& phys, double u, double x2, double x3) {
  // u = (c_f/(mL))V_in − (R/L)x3 − (c_f c_b/(mL))x2 with x3 = (c_f/m)i.
  return (phys.m * phys.L / phys.c_f) * (u + (phys.R / phys.L) * x3 + (phys.c_f * phys.c_b / (phys.m * phys.L)) * x2);
}

}  // namespace iiadapt
