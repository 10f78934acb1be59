#include "iiadapt/controller.hpp"

#include "iiadapt/errors.hpp"

#include <cmath>
#include <sstream>

namespace iiadapt {

Vec nominal_u(const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& e, const ShapingFns& shaping,
              const SatParams& sat, const IdealLaw& law) {
  if (!shaping.beta) throw PreconditionError("nominal_u: beta missing");
  return law.psi(xr, dxr, satv(theta_hat + shaping.beta(e, xr), sat), e);
}

Vec nominal_u_filtered(const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& e_hat, const Vec& e,
                       const VarsigmaFn& varsigma, const SatParams& sat, const IdealLaw& law) {
  return law.psi(xr, dxr, satv(theta_hat + beta_a(e, e_hat, xr, varsigma), sat), e);
}

Vec damping(double t, const Vec& xr, const Vec& e, const Plant& plant, const IdealLaw& law, double k_d) {
  if (k_d == 0.0) return Vec::Zero(plant.m);
  return k_d * (law.dVerr_de(t, e).transpose() * plant.g1(e + xr)).transpose();
}

Vec robust_u(double t, const Vec& xr, const Vec& dxr, const Vec& theta_hat, const Vec& e, const ShapingFns& shaping,
             const SatParams& sat, const IdealLaw& law, const Plant& plant, double k_d) {
  return nominal_u(xr, dxr, theta_hat, e, shaping, sat, law) - damping(t, xr, e, plant, law, k_d);
}

// ---------------------------------------------------------------------------

double sea_tau2(double e1, double dr_dot, double k1) {
  if (!(k1 > 1.0)) throw ParameterError("sea_tau2: k1 must exceed 1");
  return -(k1 + 0.5) * e1 + dr_dot;
}

double sea_f2(double x2, double dr_dot, double dr_ddot, double b3, double k1) {
  return (k1 + 0.5 - b3) * x2 - (k1 + 0.5) * dr_dot - dr_ddot;
}

double sea_tau3(double e1, double e2, double d_r, double dr_dot, double dr_ddot, const std::array<double, 2>& theta_hat,
                const std::array<double, 2>& beta, const SeaModel& model, const SeaGains& gains) {
  const double x2 = e2 + sea_tau2(e1, dr_dot, gains.k1);
  const double f2 = sea_f2(x2, dr_dot, dr_ddot, model.b3, gains.k1);
  const double a = 2.0 * model.p_star + 1.0;
  const double v1 = sat(theta_hat[0] + beta[0], model.sat);
  const double v2 = sat(theta_hat[1] + beta[1], model.sat);
  return -gains.k21 * e2 - gains.k22 * e2 * std::pow(std::abs(e2), a) - f2 + model.phi(v1, v2, e1 + d_r);
}

SeaTerms sea_terms(const SeaModel& model, const SeaGains& gains, const SeaEstimatorConfig& est, double t,
                   const std::array<double, 3>& x, const std::array<double, 2>& theta_hat, double e_hat1) {
  const SeaRef r = sea_reference(t);
  const double k = gains.k1 + 0.5;
  const double c = k - model.b3;
  const double p = model.p_star;
  SeaTerms s;
  s.e1 = x[0] - r.d;
  s.tau2 = sea_tau2(s.e1, r.d1, gains.k1);
  s.e2 = x[1] - s.tau2;
  s.f2 = sea_f2(x[1], r.d1, r.d2, model.b3, gains.k1);

  const double y = x[0];
  const double ysig = est.filtered ? r.d + e_hat1 : y;
  const auto sg = model.varsigma(ysig);
  const auto dsg = model.dvarsigma(ysig);
  std::array<double, 2> sp{};
  for (int i = 0; i < 2; ++i) {
    s.beta[i] = sg[i] * s.e2;
    s.w[i] = theta_hat[i] + s.beta[i];
    s.vartheta[i] = sat(s.w[i], model.sat);
    sp[i] = sat_derivative(s.w[i], model.sat);
  }
  s.phi_hat = model.phi(s.vartheta[0], s.vartheta[1], y);
  const auto dphi = model.dphi_dtheta(s.vartheta[0], s.vartheta[1], y);
  const double dphi_y = model.dphi_dy(s.vartheta[0], s.vartheta[1], y);
  const std::array<double, 2> G{dphi[0] * sp[0], dphi[1] * sp[1]};

  const double a = 2.0 * p + 1.0;
  const double ae2 = std::abs(s.e2);
  s.tau3 = -gains.k21 * s.e2 - gains.k22 * s.e2 * std::pow(ae2, a) - s.f2 + s.phi_hat;
  s.e3 = x[2] - s.tau3;

  const double G_sg = G[0] * sg[0] + G[1] * sg[1];
  const double G_dsg_e2 = (G[0] * dsg[0] + G[1] * dsg[1]) * s.e2;
  s.dtau3_de2 = -gains.k21 - gains.k22 * (a + 1.0) * std::pow(ae2, a) - c + G_sg;
  s.dtau3_de1 = c * k + dphi_y + (est.filtered ? 0.0 : G_dsg_e2);
  s.dtau3_dehat = est.filtered ? G_dsg_e2 : 0.0;
  s.dtau3_dt = model.b3 * r.d2 + r.d3 + dphi_y * r.d1 + G_dsg_e2 * r.d1;
  s.dtau3_dthat = G;

  s.e1_dot = x[1] - r.d1;
  double xs_dot = x[1];  // d/dt of the ς argument, d_r + e1
  if (est.filtered) {
    s.eps = s.e1 - e_hat1;
    s.ehat_dot = est.K(Vec::Constant(1, s.eps))[0] + s.e1_dot;
    xs_dot = s.ehat_dot + r.d1;
  }
  const double e2dot_hat = x[2] - s.phi_hat + s.f2;
  for (int i = 0; i < 2; ++i) {
    s.theta_hat_dot[i] = -sg[i] * e2dot_hat - dsg[i] * s.e2 * xs_dot - est.k_dz * dz(s.w[i], model.sat.l_theta);
  }

  const double ae3 = std::abs(s.e3);
  s.u_bar = -(gains.k31 + gains.k32 * std::pow(ae3, 4.0 * p + 5.0) + gains.k33 * std::pow(ae3, 4.0 * p + 1.0)) * s.e3;
  const double a_ff = gains.e2_exponent == E2Exponent::Consistent ? a : 4.0 * p + 4.0;
  const double e2dot_nom = s.e3 - gains.k21 * s.e2 - gains.k22 * s.e2 * std::pow(ae2, a_ff);
  s.eta = 2.0 * gains.k_d * s.e3;
  s.u = s.u_bar + s.dtau3_dt + s.dtau3_de1 * s.e1_dot + G[0] * s.theta_hat_dot[0] + G[1] * s.theta_hat_dot[1] +
        s.dtau3_de2 * e2dot_nom + s.dtau3_dehat * s.ehat_dot - s.eta;
  return s;
}

double sea_u(const SeaModel& model, const SeaGains& gains, const SeaEstimatorConfig& est, double t,
             const std::array<double, 3>& x, const std::array<double, 2>& theta_hat, double e_hat1) {
  return sea_terms(model, gains, est, t, x, theta_hat, e_hat1).u;
}

std::vector<std::string> sea_gain_warnings(const SeaGains& gains, const SeaDesignConstants& c, double l_gamma) {
  std::vector<std::string> w;
  auto add = [&w](const char* what, double lhs, const char* rel, double rhs) {
    std::ostringstream os;
    os << what << ": " << lhs << " " << rel << " " << rhs << " does not hold";
    w.push_back(os.str());
  };
  if (!(gains.k1 > 1.0)) add("k1 > 1", gains.k1, ">", 1.0);
  if (!(gains.k21 > c.g * c.delta2 + 2.5)) add("k21 > g*delta2 + 2.5", gains.k21, ">", c.g * c.delta2 + 2.5);
  if (!(gains.k22 >= c.delta1 * l_gamma)) add("k22 >= delta1*l_gamma", gains.k22, ">=", c.delta1 * l_gamma);
  if (!(gains.k31 > c.g * c.rho0 + 1.5)) add("k31 > g*rho0 + 1.5", gains.k31, ">", c.g * c.rho0 + 1.5);
  if (!(gains.k32 >= c.rho1)) add("k32 >= rho1", gains.k32, ">=", c.rho1);
  if (!(gains.k33 >= c.rho2)) add("k33 >= rho2", gains.k33, ">=", c.rho2);
  return w;
}

}  // namespace iiadapt
