#include <doctest.h>

#include "iiadapt/errors.hpp"
#include "iiadapt/expdiag.hpp"
#include "iiadapt/sampling.hpp"

#include <cmath>
#include <random>

using namespace iiadapt;

TEST_CASE("parameter sets") {
  const ParameterSet b = ParameterSet::box(Vec::Constant(2, -0.5), Vec::Constant(2, 0.5));
  CHECK(b.max_norm() == doctest::Approx(std::sqrt(0.5)));
  CHECK(b.vertices().size() == 4);
  CHECK(b.contains(Vec::Constant(2, 0.5)));
  CHECK_FALSE(b.contains(Vec::Constant(2, 0.51)));
  const ParameterSet ball = ParameterSet::ball(3, 2.0);
  CHECK(ball.max_norm() == 2.0);
  CHECK(ball.contains(Vec::Constant(3, 1.0)));
  CHECK_FALSE(ball.contains(Vec::Constant(3, 1.2)));
  Halton h(ball.unit_dims(), 1);
  for (int i = 0; i < 500; ++i) CHECK(ball.contains(ball.point(h.next().data()), 1e-12));
}

TEST_CASE("Halton points stay in the unit cube and are seed-deterministic") {
  Halton a(3, 9), b(3, 9), c(3, 10);
  bool differs = false;
  for (int i = 0; i < 200; ++i) {
    const auto pa = a.next();
    const auto pb = b.next();
    const auto pc = c.next();
    for (int k = 0; k < 3; ++k) {
      CHECK(pa[k] >= 0.0);
      CHECK(pa[k] < 1.0);
      CHECK(pa[k] == pb[k]);
      differs = differs || pa[k] != pc[k];
    }
  }
  CHECK(differs);
}

TEST_CASE("demo plant: analytic parameter Jacobian and reference derivative") {
  const ExpDiag d = make_expdiag();
  std::mt19937_64 rng(3);
  const auto th = random_ball_points(2, 0.7, 30, rng);
  const auto xs = random_ball_points(2, 3.0, 30, rng);
  CHECK(check_parameter_jacobian(d.plant, th, xs) < 1e-7);
  CHECK_NOTHROW(d.ref.validate());
  CHECK(d.ref.x_r(0.3).norm() <= d.ref.r1);
}

TEST_CASE("plant right-hand side and dimension checks") {
  const ExpDiag d = make_expdiag();
  Vec x(2), th(2), u(2), dist(2);
  x << 1.0, 2.0;
  th << 0.1, -0.2;
  u << 0.5, -0.5;
  dist << 0.25, 0.0;
  Vec expect(2);
  expect << 0.5 * 2.0 + 1.0 * std::exp(0.1) + 0.75, -0.5 * 1.0 + 2.0 * std::exp(-0.2) - 0.5;
  CHECK((plant_rhs(d.plant, x, th, u, dist) - expect).norm() < 1e-14);
  CHECK_THROWS_AS(plant_rhs(d.plant, Vec::Zero(3), th, u), DimensionError);
  CHECK_THROWS_AS(error_rhs(d.plant, d.ref, x, 1e6, th, u), PreconditionError);
}

TEST_CASE("tilde_phi_s vanishes for zero estimation error") {
  const ExpDiag d = make_expdiag();
  Vec th(2), x(2);
  th << 0.2, -0.3;
  x << 1.3, 0.4;
  CHECK(tilde_phi_s(d.plant, th, Vec::Zero(2), x, d.sat).norm() < 1e-15);
}

TEST_CASE("kappa estimates are monotone with the right values at 0") {
  const ExpDiag d = make_expdiag();
  KappaOptions o;
  o.samples = 512;
  o.varsigma = d.shaping.varsigma;
  const std::vector<double> radii{0.1, 0.5, 1.0, 2.0};
  const BoundFns b = estimate_bounds(d.plant, d.ref, d.sat, radii, o);
  CHECK(b.kappa1(0.0) > 0.0);
  CHECK(b.kappa2(0.0) == 0.0);
  double prev1 = 0.0, prev2 = 0.0;
  for (double r = 0.0; r < 3.0; r += 0.05) {
    CHECK(b.kappa1(r) >= prev1);
    CHECK(b.kappa2(r) >= prev2);
    prev1 = b.kappa1(r);
    prev2 = b.kappa2(r);
  }
}

TEST_CASE("spectral norm of small matrices") {
  Mat a(2, 2);
  a << 3.0, 0.0, 4.0, 5.0;
  // Singular values of [[3,0],[4,5]] are 3√5 and √5.
  CHECK(spectral_norm(a) == doctest::Approx(3.0 * std::sqrt(5.0)).epsilon(1e-12));
}
