#include <doctest.h>

#include "iiadapt/controller.hpp"
#include "iiadapt/errors.hpp"
#include "iiadapt/expdiag.hpp"

#include <cmath>

using namespace iiadapt;

namespace {

struct SeaFixture {
  SeaModel model = SeaModel::make(sea_normal_constants(SeaPhysical{}), 0.76, 0.4);
  SeaGains gains;
  SeaEstimatorConfig est;

  // State with prescribed (e1, e2) and x3 arbitrary.
  std::array<double, 3> state(double t, double e1, double e2, double x3 = 0.0) const {
    const SeaRef r = sea_reference(t);
    return {r.d + e1, e2 + sea_tau2(e1, r.d1, gains.k1), x3};
  }
  double tau3(double t, double e1, double e2, std::array<double, 2> th, double ehat = 0.0) const {
    return sea_terms(model, gains, est, t, state(t, e1, e2), th, ehat).tau3;
  }
};

}  // namespace

TEST_CASE("virtual control tau2 and the k1 precondition") {
  CHECK(sea_tau2(0.2, 1.0, 2.0) == doctest::Approx(-0.5 + 1.0));
  CHECK_THROWS_AS(sea_tau2(0.2, 1.0, 0.9), ParameterError);
}

TEST_CASE("tau3 partial derivatives match finite differences") {
  SeaFixture f;
  const double h = 1e-6;
  for (double t : {0.0, 0.8, 2.1}) {
    for (double e1 : {-0.2, 0.05, 0.3}) {
      for (double e2 : {-0.4, 0.1}) {
        const std::array<double, 2> th{0.1, -0.2};
        const SeaTerms S = f.est.filtered ? SeaTerms{} : sea_terms(f.model, f.gains, f.est, t, f.state(t, e1, e2), th);
        const double d1 = (f.tau3(t, e1 + h, e2, th) - f.tau3(t, e1 - h, e2, th)) / (2 * h);
        const double d2 = (f.tau3(t, e1, e2 + h, th) - f.tau3(t, e1, e2 - h, th)) / (2 * h);
        const double dt = (f.tau3(t + h, e1, e2, th) - f.tau3(t - h, e1, e2, th)) / (2 * h);
        const double dth0 = (f.tau3(t, e1, e2, {th[0] + h, th[1]}) - f.tau3(t, e1, e2, {th[0] - h, th[1]})) / (2 * h);
        const double dth1 = (f.tau3(t, e1, e2, {th[0], th[1] + h}) - f.tau3(t, e1, e2, {th[0], th[1] - h})) / (2 * h);
        const double scale = 1.0 + std::abs(S.tau3);
        CHECK(std::abs(d1 - S.dtau3_de1) <= 1e-5 * scale);
        CHECK(std::abs(d2 - S.dtau3_de2) <= 1e-5 * scale);
        CHECK(std::abs(dt - S.dtau3_dt) <= 1e-5 * scale);
        CHECK(std::abs(dth0 - S.dtau3_dthat[0]) <= 1e-5 * scale);
        CHECK(std::abs(dth1 - S.dtau3_dthat[1]) <= 1e-5 * scale);
      }
    }
  }
}

TEST_CASE("filtered tau3 depends on the filter state through beta_a") {
  SeaFixture f;
  f.est.filtered = true;
  const double h = 1e-6, t = 0.5, e1 = 0.1, e2 = -0.2;
  const std::array<double, 2> th{0.0, 0.3};
  const SeaTerms S = sea_terms(f.model, f.gains, f.est, t, f.state(t, e1, e2), th, 0.05);
  const double dh = (f.tau3(t, e1, e2, th, 0.05 + h) - f.tau3(t, e1, e2, th, 0.05 - h)) / (2 * h);
  CHECK(std::abs(dh - S.dtau3_dehat) <= 1e-5 * (1.0 + std::abs(S.tau3)));
  CHECK(S.eps == doctest::Approx(e1 - 0.05));
}

TEST_CASE("with exact parameters the error system is the nominal backstepping chain") {
  // θ̂ + β = θ, no saturation: ė1 = −(k1+½)e1 + e2, ė2 = e3 − k21e2 − k22e2|e2|^a, ė3 = ū.
  SeaFixture f;
  const std::array<double, 2> theta{0.2, 0.4};
  const double t = 1.3, e1 = 0.05, e2 = -0.03, e3 = 0.02;
  auto x = f.state(t, e1, e2);
  const auto sg = f.model.varsigma(x[0]);
  const std::array<double, 2> th_hat{theta[0] - sg[0] * e2, theta[1] - sg[1] * e2};
  x[2] = sea_terms(f.model, f.gains, f.est, t, x, th_hat).tau3 + e3;
  const SeaTerms S = sea_terms(f.model, f.gains, f.est, t, x, th_hat);
  CHECK(S.e3 == doctest::Approx(e3).epsilon(1e-12));
  // Integrate one short step of the true plant and compare error rates.
  const double h = 1e-6;
  auto flow = [&](double s) {
    std::array<double, 3> xn = x;
    xn[0] += s * x[1];
    xn[1] += s * (-f.model.phi(theta[0], theta[1], x[0]) - f.model.b3 * x[1] + x[2]);
    xn[2] += s * S.u;
    std::array<double, 2> tn{th_hat[0] + s * S.theta_hat_dot[0], th_hat[1] + s * S.theta_hat_dot[1]};
    return sea_terms(f.model, f.gains, f.est, t + s, xn, tn);
  };
  const SeaTerms P = flow(h), M = flow(-h);
  const double a = 2.0 * f.model.p_star + 1.0;
  CHECK((P.e1 - M.e1) / (2 * h) == doctest::Approx(-(f.gains.k1 + 0.5) * e1 + e2).epsilon(1e-5));
  CHECK((P.e2 - M.e2) / (2 * h) ==
        doctest::Approx(e3 - f.gains.k21 * e2 - f.gains.k22 * e2 * std::pow(std::abs(e2), a)).epsilon(1e-5));
  CHECK((P.e3 - M.e3) / (2 * h) == doctest::Approx(S.u_bar).epsilon(1e-4));
}

TEST_CASE("damping term of the robust law") {
  SeaFixture f;
  f.gains.k_d = 1.5;
  const std::array<double, 2> th{0.0, 0.0};
  auto x = f.state(0.2, 0.0, 0.0, 0.0);
  const SeaTerms S = sea_terms(f.model, f.gains, f.est, 0.2, x, th);
  CHECK(S.eta == doctest::Approx(2.0 * 1.5 * S.e3));

  const ExpDiag d = make_expdiag();
  Vec e(2);
  e << 0.3, -0.1;
  const Vec eta = damping(0.0, d.ref.x_r(0.0), e, d.plant, d.law, 2.0);
  CHECK((eta - 4.0 * e).norm() < 1e-15);
}

TEST_CASE("demo plant: nominal law with exact parameters gives exponential error decay") {
  const ExpDiag d = make_expdiag();
  Vec theta(2), e(2);
  theta << 0.3, -0.2;
  e << 0.4, -0.3;
  const double t = 0.9;
  const Vec xr = d.ref.x_r(t), dxr = d.ref.dx_r(t);
  const Vec th_hat = theta - d.shaping.beta(e, xr);
  const Vec u = nominal_u(xr, dxr, th_hat, e, d.shaping, d.sat, d.law);
  CHECK((error_rhs(d.plant, d.ref, e, t, theta, u) + d.k_e * e).norm() < 1e-12);
}

TEST_CASE("gain warnings list every violated condition") {
  SeaGains g;
  SeaDesignConstants c;
  c.g = 1.0;
  c.delta2 = 1.0;
  c.delta1 = 1.0;
  CHECK(sea_gain_warnings(g, c, 1.0).empty());
  c.delta2 = 10.0;
  CHECK(sea_gain_warnings(g, c, 1.0).size() == 1);
}
