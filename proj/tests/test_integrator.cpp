#include <doctest.h>

#include "iiadapt/errors.hpp"
#include "iiadapt/integrator.hpp"

#include <cmath>

using namespace iiadapt;

namespace {

Rhs decay() {
  return [](double, const Vec& z, Vec& dz) { dz = -z; };
}

Rhs rotation() {
  return [](double, const Vec& z, Vec& dz) {
    dz.resize(2);
    dz << z[1], -z[0];
  };
}

double rk4_error(double h) {
  IntegratorSpec spec;
  spec.step = h;
  spec.log_interval = 1.0;
  Vec z0(1);
  z0 << 1.0;
  const RawTrajectory tr = integrate(decay(), z0, 0.0, 1.0, spec);
  return std::abs(tr.z.back()[0] - std::exp(-1.0));
}

}  // namespace

TEST_CASE("rk4 on exponential decay") {
  CHECK(rk4_error(1e-3) <= 1e-9);
}

TEST_CASE("rk4 convergence order") {
  const double e1 = rk4_error(1e-2), e2 = rk4_error(5e-3), e3 = rk4_error(2.5e-3);
  CHECK(e1 / e2 == doctest::Approx(16.0).epsilon(0.1));
  CHECK(e2 / e3 == doctest::Approx(16.0).epsilon(0.1));
}

TEST_CASE("constant solution is preserved exactly") {
  IntegratorSpec spec;
  spec.step = 1e-2;
  Vec z0(3);
  z0 << 1.0, -2.0, 3.5;
  const RawTrajectory tr = integrate([](double, const Vec& z, Vec& dz) { dz = Vec::Zero(z.size()); }, z0, 0.0, 2.0,
                                     spec);
  for (const Vec& z : tr.z) CHECK((z - z0).norm() == 0.0);
}

TEST_CASE("rotation conserves energy") {
  IntegratorSpec spec;
  spec.step = 1e-3;
  spec.log_interval = 0.5;
  Vec z0(2);
  z0 << 1.0, 0.0;
  const RawTrajectory tr = integrate(rotation(), z0, 0.0, 10.0, spec);
  for (const Vec& z : tr.z) CHECK(std::abs(z.squaredNorm() - 1.0) <= 1e-8);
  CHECK(tr.t.back() == doctest::Approx(10.0));
  CHECK(tr.t.size() == 21);
}

TEST_CASE("rk45 meets its tolerance") {
  IntegratorSpec spec;
  spec.method = IntegratorSpec::Method::RK45;
  spec.rtol = 1e-10;
  spec.atol = 1e-12;
  spec.log_interval = 0.25;
  Vec z0(2);
  z0 << 1.0, 0.0;
  const RawTrajectory tr = integrate(rotation(), z0, 0.0, 10.0, spec);
  REQUIRE_FALSE(tr.blowup);
  for (std::size_t k = 0; k < tr.t.size(); ++k) {
    CHECK(std::abs(tr.z[k][0] - std::cos(tr.t[k])) <= 1e-8);
    CHECK(std::abs(tr.z[k][1] + std::sin(tr.t[k])) <= 1e-8);
  }
}

TEST_CASE("blow-up is flagged and the run stops") {
  IntegratorSpec spec;
  spec.step = 1e-3;
  Vec z0(1);
  z0 << 1.0;
  const RawTrajectory tr = integrate([](double, const Vec& z, Vec& dz) { dz = z.array().square(); }, z0, 0.0, 5.0,
                                     spec);
  CHECK(tr.blowup);
  CHECK_FALSE(tr.message.empty());
  CHECK(tr.t.back() < 1.01);
}

TEST_CASE("invalid integrator settings are rejected") {
  IntegratorSpec spec;
  spec.step = -1.0;
  CHECK_THROWS_AS(spec.validate(), ParameterError);
}
