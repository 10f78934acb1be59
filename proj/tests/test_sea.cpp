#include <doctest.h>

#include "iiadapt/calibration.hpp"
#include "iiadapt/errors.hpp"
#include "iiadapt/sea.hpp"

#include <cmath>
#include <random>

using namespace iiadapt;

namespace {

SeaModel default_model() { return SeaModel::make(sea_normal_constants(SeaPhysical{}), 0.76, 0.4); }

SeaDesignConstants small_constants() {
  SeaDesignConstants c;
  c.delta2 = 1e-3;
  c.rho0 = 1e-3;
  c.a1 = 1.0;
  c.a_star = 1.0;
  c.tau_est = 1.5;
  c.kappa2 = GainFn::linear(1e-3);
  return c;
}

double cycle_margin(const Certificate& c, const GainNetwork& net, const std::vector<std::string>& labels) {
  for (const auto& cc : c.cycles) {
    if (cc.nodes.size() != labels.size()) continue;
    bool same = true;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      bool found = false;
      for (int n : cc.nodes) found = found || net.label(n) == labels[i];
      same = same && found;
    }
    if (same) return cc.min_margin;
  }
  FAIL("cycle not found");
  return 0.0;
}

}  // namespace

TEST_CASE("normal-form constants") {
  const SeaNormal nf = sea_to_normal(SeaPhysical{});
  CHECK(nf.b1 == doctest::Approx(1.25));
  CHECK(nf.b2 == doctest::Approx(4.0 * std::log(2.5)));
  CHECK(nf.b3 == doctest::Approx(1.0));
  CHECK(nf.p_star == doctest::Approx(1.0));
  CHECK(nf.l_theta == doctest::Approx(0.75));
  // Q0 = (Q0_l+Q0_u)/2 and p = p* give θ = 0.
  CHECK(nf.theta.norm() < 1e-15);
}

TEST_CASE("normal form reproduces the physical stiffness") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> uq(0.5, 2.0), up(0.5, 1.5), uy(-3.0, 3.0), um(0.5, 3.0);
  for (int k = 0; k < 1000; ++k) {
    SeaPhysical ph;
    ph.m = um(rng);
    ph.Q0 = uq(rng);
    ph.p = up(rng);
    const SeaNormal nf = sea_to_normal(ph);
    const SeaModel model = SeaModel::make(nf, 0.76, 0.4);
    const double y = uy(rng);
    const double expect = ph.Q0 / ph.m * y * std::pow(std::abs(y), ph.p);
    CHECK(std::abs(model.phi(nf.theta[0], nf.theta[1], y) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
    CHECK(nf.theta_set.contains(nf.theta));
    const auto back = sea_theta_to_physical(nf, nf.theta);
    CHECK(back.first == doctest::Approx(ph.Q0 / ph.m).epsilon(1e-12));
    CHECK(back.second == doctest::Approx(ph.p).epsilon(1e-12));
  }
}

TEST_CASE("out-of-range physical data is rejected") {
  SeaPhysical ph;
  ph.Q0 = 3.0;
  CHECK_THROWS_AS(sea_to_normal(ph), ParameterError);
  ph = SeaPhysical{};
  ph.m = 0.0;
  CHECK_THROWS_AS(sea_normal_constants(ph), ParameterError);
  CHECK_THROWS_AS(SeaModel::make(sea_normal_constants(SeaPhysical{}), 0.9, 0.4), ParameterError);
}

TEST_CASE("stiffness derivatives") {
  const SeaModel m = default_model();
  const double h = 1e-6;
  for (double y : {-1.7, 0.4, 2.2}) {
    const double t1 = 0.1, t2 = -0.3;
    const auto d = m.dphi_dtheta(t1, t2, y);
    CHECK((m.phi(t1 + h, t2, y) - m.phi(t1 - h, t2, y)) / (2 * h) == doctest::Approx(d[0]).epsilon(1e-6));
    CHECK((m.phi(t1, t2 + h, y) - m.phi(t1, t2 - h, y)) / (2 * h) == doctest::Approx(d[1]).epsilon(1e-6));
    CHECK((m.phi(t1, t2, y + h) - m.phi(t1, t2, y - h)) / (2 * h) ==
          doctest::Approx(m.dphi_dy(t1, t2, y)).epsilon(1e-6));
    const auto s = m.varsigma(y), ds = m.dvarsigma(y);
    CHECK((m.varsigma(y + h)[1] - m.varsigma(y - h)[1]) / (2 * h) == doctest::Approx(ds[1]).epsilon(1e-6));
    CHECK(s[0] == doctest::Approx(-y * m.b2));
  }
}

TEST_CASE("reference derivatives") {
  const double h = 1e-5;
  for (double t : {0.0, 1.1, 4.0}) {
    const SeaRef r = sea_reference(t), p = sea_reference(t + h), q = sea_reference(t - h);
    CHECK((p.d - q.d) / (2 * h) == doctest::Approx(r.d1).epsilon(1e-8));
    CHECK((p.d1 - q.d1) / (2 * h) == doctest::Approx(r.d2).epsilon(1e-8));
    CHECK((p.d2 - q.d2) / (2 * h) == doctest::Approx(r.d3).epsilon(1e-8));
  }
}

TEST_CASE("input voltage inverts the motor equation") {
  SeaPhysical ph;
  ph.m = 2.0;
  ph.L = 0.3;
  const double V = 1.7, x2 = 0.4, x3 = -0.2;
  const double u = ph.c_f / (ph.m * ph.L) * V - ph.R / ph.L * x3 - ph.c_f * ph.c_b / (ph.m * ph.L) * x2;
  CHECK(sea_input_voltage(ph, u, x2, x3) == doctest::Approx(V));
}

TEST_CASE("SEA gain network edges and cycles") {
  const SeaModel m = default_model();
  SeaGains g;
  const GainNetwork net = sea_gain_network(g, small_constants(), m.gs);
  const int e1 = net.index("e1"), e2 = net.index("e2"), e3 = net.index("e3");
  for (double s : {0.01, 1.0, 30.0}) {
    CHECK((*net.edge(e2, e1))(s) == doctest::Approx(s / 4.0));
    CHECK((*net.edge(e2, e3))((*net.edge(e3, e2))(s)) == doctest::Approx(0.5 * s));
  }
  CHECK(enumerate_simple_cycles(net).size() == 5);
  const Certificate c = certify(net);
  CHECK(c.pass);
  CHECK(cycle_margin(c, net, {"e1", "e2"}) == doctest::Approx(0.75).epsilon(1e-9));

  SeaGains weak = g;
  weak.k1 = 0.9;
  const GainNetwork nw = sea_gain_network(weak, small_constants(), m.gs);
  const Certificate cw = certify(nw);
  CHECK_FALSE(cw.pass);
  CHECK(cycle_margin(cw, nw, {"e1", "e2"}) < 0.0);

  SeaGains strong = g;
  strong.k1 = 4.0;
  const GainNetwork ns = sea_gain_network(strong, small_constants(), m.gs);
  CHECK(cycle_margin(certify(ns), ns, {"e1", "e2"}) > cycle_margin(c, net, {"e1", "e2"}));

  SeaGains low = g;
  low.k21 = 2.0;
  CHECK_THROWS_AS(sea_gain_network(low, small_constants(), m.gs), ParameterError);
}

TEST_CASE("scalar aux field agrees with the generic construction") {
  const SeaModel m = default_model();
  Vec theta(2);
  theta << 0.1, -0.2;
  const AuxField a = sea_aux_field(m, theta, 3.0);
  const AuxField b = make_aux_field(sea_plant(m), sea_generic_reference(10.0), sea_shaping(m), m.sat, theta, 3.0);
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-1.5, 1.5), ut(0.0, 6.3);
  for (int k = 0; k < 200; ++k) {
    const double t = ut(rng);
    const double x[2] = {u(rng), u(rng)};
    double Ha[2], Hb[2], Ja[4], Jb[4];
    a.eval(t, x, Ha, Ja);
    b.eval(t, x, Hb, Jb);
    for (int i = 0; i < 2; ++i) CHECK(Ha[i] == doctest::Approx(Hb[i]).epsilon(1e-10));
    for (int i = 0; i < 4; ++i) CHECK(Ja[i] == doctest::Approx(Jb[i]).epsilon(1e-10));
  }
}

TEST_CASE("SEA excitation matches its closed form") {
  // log d_r = sin t, so ∫₀^{2π} M1 + M1ᵀ = 2M0·diag(2πb2², π).
  const SeaModel m = default_model();
  for (double M0 : {1.0, 0.01}) {
    const PeReport r = sea_pe(m, M0);
    CHECK(r.mu == doctest::Approx(6.283185307179586 * M0 * std::min(2.0 * m.b2 * m.b2, 1.0)).epsilon(1e-8));
  }
  CHECK(sea_M0(m) > 0.0);
}
