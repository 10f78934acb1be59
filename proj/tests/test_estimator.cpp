#include <doctest.h>

#include "iiadapt/errors.hpp"
#include "iiadapt/expdiag.hpp"
#include "iiadapt/sampling.hpp"

#include <cmath>
#include <random>

using namespace iiadapt;

TEST_CASE("closed-form beta solves its PDE") {
  const ExpDiag d = make_expdiag();
  std::mt19937_64 rng(1);
  const auto es = random_ball_points(2, 2.0, 50, rng);
  const auto xrs = random_ball_points(2, d.ref.r1, 50, rng);
  CHECK(check_beta_pde(d.shaping, es, xrs) < 1e-8);
}

TEST_CASE("estimation error definition") {
  const ExpDiag d = make_expdiag();
  Vec th_hat(2), th(2), e(2), xr(2);
  th_hat << 0.1, 0.2;
  th << 0.3, -0.2;
  e << 0.5, -0.25;
  xr << 1.5, 2.0;
  Vec beta(2);
  beta << 0.5 * 0.25 + 1.5 * 0.5, 0.5 * 0.0625 - 2.0 * 0.25;
  CHECK((estimation_error(th_hat, th, e, xr, d.shaping) - (th_hat - th + beta)).norm() < 1e-15);
}

TEST_CASE("H Jacobian matches finite differences") {
  const ExpDiag d = make_expdiag();
  std::mt19937_64 rng(2);
  Vec th(2);
  th << 0.3, -0.2;
  for (const Vec& tilde : random_ball_points(2, 2.5, 40, rng)) {
    const Vec xr = d.ref.x_r(0.7);
    const Mat J = H_jacobian(d.plant, th, tilde, xr, d.shaping, d.sat, 3.0);
    const double h = 1e-6;
    for (int k = 0; k < 2; ++k) {
      Vec tp = tilde, tm = tilde;
      tp[k] += h;
      tm[k] -= h;
      const Vec fd = (H_field(d.plant, th, tp, xr, d.shaping, d.sat, 3.0) -
                      H_field(d.plant, th, tm, xr, d.shaping, d.sat, 3.0)) /
                     (2 * h);
      CHECK((fd - J.col(k)).norm() <= 1e-5 * (1.0 + J.norm()));
    }
  }
}

TEST_CASE("H vanishes at zero estimation error inside the parameter set") {
  const ExpDiag d = make_expdiag();
  Vec th(2);
  th << 0.3, -0.2;
  CHECK(H_field(d.plant, th, Vec::Zero(2), d.ref.x_r(1.0), d.shaping, d.sat, 5.0).norm() == 0.0);
}

TEST_CASE("filter gain power terms") {
  const FilterGain K{2.0, 3.0, 2.0, 0.5, 3.0};
  Vec eps(1);
  eps << -0.5;
  // 2ε + 3|ε|ε + 0.5|ε|²ε
  const double expect = 2.0 * -0.5 + 3.0 * 0.5 * -0.5 + 0.5 * 0.25 * -0.5;
  CHECK(K(eps)[0] == doctest::Approx(expect).epsilon(1e-15));
  CHECK(K(Vec::Zero(1))[0] == 0.0);
}

TEST_CASE("filtered estimator with a perfect filter matches the closed-form rates") {
  // With ê = e the filter reproduces ė and β_a = ς(x)e.
  const ExpDiag d = make_expdiag();
  Vec e(2), th_hat(2), u(2);
  e << 0.2, -0.1;
  th_hat << 0.05, 0.1;
  u << 0.3, 0.0;
  const double t = 0.4;
  const Vec xr = d.ref.x_r(t), dxr = d.ref.dx_r(t);
  const Vec ba = beta_a(e, e, xr, d.shaping.varsigma);
  CHECK((ba - (e + xr).asDiagonal() * e).norm() < 1e-15);
  const Vec ehat_dot =
      filter_rhs(e, e + xr, xr, dxr, th_hat, u, d.plant, d.shaping.varsigma, d.sat, FilterGain::linear(4.0));
  const Vec expect = d.plant.f1(e + xr) + d.plant.phi(satv(th_hat + ba, d.sat), e + xr) + u - dxr;
  CHECK((ehat_dot - expect).norm() < 1e-14);
}

TEST_CASE("dead-zone gain selection on the demo plant") {
  const ExpDiag d = make_expdiag();
  KdzOptions o;
  o.samples = 2000;
  const DeadzoneGain g = select_kdz(d.plant, d.ref, d.shaping, d.sat, d.M1, o);
  CHECK(g.r3 > 0.0);
  CHECK(g.k_dz_star > 0.0);
  CHECK(g.k_dz >= g.k_dz_star);
}
