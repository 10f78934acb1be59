#include "iiadapt/simulation.hpp"

#include "iiadapt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <limits>
#include <sstream>

namespace iiadapt {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

Vec to_vec(const std::vector<double>& v) { return Eigen::Map<const Vec>(v.data(), static_cast<Eigen::Index>(v.size())); }

FilterGain filter_gain(const EstimatorSpec& e) { return FilterGain{e.k_eps, e.K1.c, e.K1.p, e.K2.c, e.K2.p}; }

}  // namespace

struct ClosedLoop::Impl {
  Scenario sc;
  bool sea = true;
  bool filtered = false;
  bool robust = false;
  int n = 0, m = 0, q = 0, dim = 0;
  Vec theta;

  SeaModel model;
  SeaGains gains;
  SeaEstimatorConfig est;

  ExpDiag ed;
  FilterGain K;

  Vec dvec(double t) const { return Vec::Constant(m, sc.disturbance(t)); }

  // The actuator filter is carried as ε1 = e1 − ê1; the controller still receives ê1.
  SeaTerms sea_at(double t, const Vec& z) const {
    const std::array<double, 3> x{z[0], z[1], z[2]};
    const std::array<double, 2> th{z[3], z[4]};
    const double e_hat1 = filtered ? (z[0] - sea_reference(t).d) - z[5] : 0.0;
    return sea_terms(model, gains, est, t, x, th, e_hat1);
  }

  Vec expdiag_u(double t, const Vec& x, const Vec& th, const Vec* eh) const {
    const Vec xr = ed.ref.x_r(t), dxr = ed.ref.dx_r(t);
    const Vec e = x - xr;
    Vec u = eh ? nominal_u_filtered(xr, dxr, th, *eh, e, ed.shaping.varsigma, ed.sat, ed.law)
               : nominal_u(xr, dxr, th, e, ed.shaping, ed.sat, ed.law);
    if (robust) u -= damping(t, xr, e, ed.plant, ed.law, sc.controller.sea.k_d);
    return u;
  }
};

ClosedLoop::ClosedLoop(const Scenario& s) {
  s.validate();
  if (s.estimator.calibrate_K) throw ConfigError("filter gains must be calibrated before simulation");
  auto p = std::make_shared<Impl>();
  p->sc = s;
  p->sea = s.plant == Scenario::PlantKind::Sea;
  p->filtered = s.estimator.variant == EstimatorSpec::Variant::Filtered;
  p->robust = s.controller.variant == ControllerSpec::Variant::Robust;
  if (!p->robust && s.controller.sea.k_d != 0.0) throw ConfigError("controller.k_d requires variant = robust");
  p->K = filter_gain(s.estimator);
  p->q = 2;
  if (p->sea) {
    const SeaNormal nf = sea_normal_constants(s.sea.physical);
    p->model = SeaModel::make(nf, s.sea.l_s, s.sea.eps_s, s.sea.gamma_margin);
    p->theta = to_vec(s.sea.theta);
    if (!p->model.theta_set.contains(p->theta, 1e-12)) throw ConfigError("sea.theta lies outside the parameter set");
    p->gains = s.controller.sea;
    p->est.filtered = p->filtered;
    p->est.k_dz = s.estimator.k_dz;
    p->est.K = p->K;
    p->n = 3;
    p->m = 1;
    p->dim = p->filtered ? 6 : 5;
  } else {
    p->ed = make_expdiag(s.expdiag.k_e, s.horizon + 1.0, s.expdiag.l_s, s.expdiag.eps_s);
    p->theta = to_vec(s.expdiag.theta);
    if (!p->ed.plant.theta_set.contains(p->theta, 1e-12)) throw ConfigError("expdiag.theta lies outside the parameter set");
    p->n = 2;
    p->m = 2;
    p->dim = p->filtered ? 6 : 4;
  }
  impl_ = p;
}

int ClosedLoop::n() const { return impl_->n; }
int ClosedLoop::m() const { return impl_->m; }
int ClosedLoop::q() const { return impl_->q; }
int ClosedLoop::dim() const { return impl_->dim; }
bool ClosedLoop::is_sea() const { return impl_->sea; }
bool ClosedLoop::filtered() const { return impl_->filtered; }
const Vec& ClosedLoop::theta() const { return impl_->theta; }

const SeaModel& ClosedLoop::sea_model() const {
  if (!impl_->sea) throw PreconditionError("not an actuator scenario");
  return impl_->model;
}
const SeaGains& ClosedLoop::sea_gains() const {
  if (!impl_->sea) throw PreconditionError("not an actuator scenario");
  return impl_->gains;
}
const SeaEstimatorConfig& ClosedLoop::sea_estimator() const {
  if (!impl_->sea) throw PreconditionError("not an actuator scenario");
  return impl_->est;
}
const ExpDiag& ClosedLoop::expdiag() const {
  if (impl_->sea) throw PreconditionError("not a demo-plant scenario");
  return impl_->ed;
}

Vec ClosedLoop::initial_state() const {
  const Impl& p = *impl_;
  const Scenario& s = p.sc;
  Vec z = Vec::Zero(p.dim);
  const Vec th0 = s.theta_hat0 ? to_vec(*s.theta_hat0) : Vec::Zero(p.q);
  if (p.sea) {
    z[3] = th0[0];
    z[4] = th0[1];
    const SeaRef r = sea_reference(s.start_time);
    if (s.x0) {
      z.head(3) = to_vec(*s.x0);
    } else {
      const Vec e0 = s.e0 ? to_vec(*s.e0) : Vec((Vec(3) << 0.1, 0.0, 0.0).finished());
      z[0] = r.d + e0[0];
      z[1] = e0[1] + sea_tau2(e0[0], r.d1, p.gains.k1);
      if (p.filtered && s.e_hat0) z[5] = e0[0] - (*s.e_hat0)[0];
      // τ3 depends on x1, x2 and θ̂ (and ê1) only, so x3 = 0 gives e3 = −τ3.
      const SeaTerms S = p.sea_at(s.start_time, z);
      z[2] = e0[2] + S.tau3;
    }
    if (p.filtered && s.x0 && s.e_hat0) z[5] = (z[0] - r.d) - (*s.e_hat0)[0];
  } else {
    const Vec xr = p.ed.ref.x_r(s.start_time);
    const Vec x0 = s.x0 ? to_vec(*s.x0) : xr + (s.e0 ? to_vec(*s.e0) : Vec((Vec(2) << 0.5, -0.5).finished()));
    z.head(2) = x0;
    z.segment(2, 2) = th0;
    if (p.filtered) z.segment(4, 2) = s.e_hat0 ? to_vec(*s.e_hat0) : Vec(x0 - xr);
  }
  return z;
}

void ClosedLoop::rhs(double t, const Vec& z, Vec& dz) const {
  const Impl& p = *impl_;
  dz.resize(p.dim);
  if (p.sea) {
    const SeaTerms S = p.sea_at(t, z);
    dz[0] = z[1];
    dz[1] = -p.model.phi(p.theta[0], p.theta[1], z[0]) - p.model.b3 * z[1] + z[2];
    dz[2] = S.u + p.sc.disturbance(t);
    dz[3] = S.theta_hat_dot[0];
    dz[4] = S.theta_hat_dot[1];
    // ε̇1 = ė1 − ê̇1 = −K(ε1): the first row of the plant carries no parameter.
    if (p.filtered) dz[5] = -p.K(Vec::Constant(1, z[5]))[0];
    return;
  }
  const Vec x = z.head(2), th = z.segment(2, 2);
  const Vec xr = p.ed.ref.x_r(t), dxr = p.ed.ref.dx_r(t);
  if (p.filtered) {
    const Vec eh = z.segment(4, 2);
    const Vec u = p.expdiag_u(t, x, th, &eh);
    const EstimatorState st{th, eh};
    dz.head(2) = plant_rhs(p.ed.plant, x, p.theta, u, p.dvec(t));
    dz.segment(2, 2) =
        estimator_filtered_rhs(st, x, xr, dxr, u, p.ed.plant, p.ed.shaping, p.ed.sat, p.sc.estimator.k_dz, p.K);
    dz.segment(4, 2) = filter_rhs(eh, x, xr, dxr, th, u, p.ed.plant, p.ed.shaping.varsigma, p.ed.sat, p.K);
  } else {
    const Vec u = p.expdiag_u(t, x, th, nullptr);
    dz.head(2) = plant_rhs(p.ed.plant, x, p.theta, u, p.dvec(t));
    dz.segment(2, 2) = estimator_rhs(th, x - xr, xr, dxr, u, p.ed.plant, p.ed.shaping, p.ed.sat, p.sc.estimator.k_dz);
  }
}

Sample ClosedLoop::observe(double t, const Vec& z) const {
  const Impl& p = *impl_;
  Sample s;
  s.d = p.dvec(t);
  s.eps_e = Vec::Constant(p.n, kNaN);
  if (p.sea) {
    const SeaTerms S = p.sea_at(t, z);
    s.x = z.head(3);
    s.e = Vec(3);
    s.e << S.e1, S.e2, S.e3;
    s.theta_hat = z.segment(3, 2);
    s.theta_tilde = Vec(2);
    s.theta_tilde << z[3] - p.theta[0] + S.beta[0], z[4] - p.theta[1] + S.beta[1];
    if (p.filtered) s.eps_e[0] = z[5];
    s.u = Vec::Constant(1, S.u);
    return s;
  }
  const Vec xr = p.ed.ref.x_r(t);
  s.x = z.head(2);
  s.e = s.x - xr;
  s.theta_hat = z.segment(2, 2);
  if (p.filtered) {
    const Vec eh = z.segment(4, 2);
    s.theta_tilde = s.theta_hat - p.theta + beta_a(s.e, eh, xr, p.ed.shaping.varsigma);
    s.eps_e = s.e - eh;
    s.u = p.expdiag_u(t, s.x, s.theta_hat, &eh);
  } else {
    s.theta_tilde = estimation_error(s.theta_hat, p.theta, s.e, xr, p.ed.shaping);
    s.u = p.expdiag_u(t, s.x, s.theta_hat, nullptr);
  }
  return s;
}

Vec ClosedLoop::tilde_rate(double t, const Vec& z) const {
  Vec dz;
  rhs(t, z, dz);
  const double h = 1e-6;
  const Vec a = observe(t + h, z + h * dz).theta_tilde;
  const Vec b = observe(t - h, z - h * dz).theta_tilde;
  return (a - b) / (2.0 * h);
}

std::vector<std::string> Trajectory::columns() const {
  std::vector<std::string> c{"t"};
  auto add = [&c](const char* base, int k) {
    for (int i = 1; i <= k; ++i) c.push_back(base + std::to_string(i));
  };
  add("x", n);
  add("e", n);
  add("theta_hat", q);
  add("theta_tilde", q);
  add("eps_e", n);
  add("u", m);
  add("d", m);
  c.insert(c.end(), {"V_err", "V_est", "V_cl"});
  return c;
}

Trajectory run_closed_loop(const Scenario& s, const LyapunovProbe* probe) {
  RawTrajectory raw;
  return run_closed_loop(s, raw, probe);
}

Trajectory run_closed_loop(const Scenario& s, RawTrajectory& raw, const LyapunovProbe* probe) {
  const ClosedLoop cl(s);
  const Rhs rhs = [&cl](double t, const Vec& z, Vec& dz) { cl.rhs(t, z, dz); };
  raw = integrate(rhs, cl.initial_state(), s.start_time, s.horizon, s.integrator);
  Trajectory tr;
  tr.n = cl.n();
  tr.m = cl.m();
  tr.q = cl.q();
  tr.blowup = raw.blowup;
  tr.message = raw.message;
  for (std::size_t i = 0; i < raw.t.size(); ++i) {
    const double t = raw.t[i];
    Sample smp = cl.observe(t, raw.z[i]);
    tr.t.push_back(t);
    tr.V_err.push_back(smp.e.squaredNorm());
    tr.V_est.push_back(probe && probe->V_est ? probe->V_est(t, smp.e, smp.theta_tilde) : kNaN);
    tr.V_cl.push_back(probe && probe->V_cl ? probe->V_cl(t, smp.e, smp.theta_tilde) : kNaN);
    tr.x.push_back(std::move(smp.x));
    tr.e.push_back(std::move(smp.e));
    tr.theta_hat.push_back(std::move(smp.theta_hat));
    tr.theta_tilde.push_back(std::move(smp.theta_tilde));
    tr.eps_e.push_back(std::move(smp.eps_e));
    tr.u.push_back(std::move(smp.u));
    tr.d.push_back(std::move(smp.d));
  }
  return tr;
}

std::string to_csv(const Trajectory& tr) {
  std::string out;
  const auto cols = tr.columns();
  for (std::size_t i = 0; i < cols.size(); ++i) {
    if (i) out += ',';
    out += cols[i];
  }
  out += '\n';
  char buf[40];
  auto put = [&](double v, bool first = false) {
    if (!first) out += ',';
    std::snprintf(buf, sizeof buf, "%.17g", v);
    out += buf;
  };
  auto put_vec = [&](const Vec& v) {
    for (Eigen::Index k = 0; k < v.size(); ++k) put(v[k]);
  };
  for (std::size_t i = 0; i < tr.size(); ++i) {
    put(tr.t[i], true);
    put_vec(tr.x[i]);
    put_vec(tr.e[i]);
    put_vec(tr.theta_hat[i]);
    put_vec(tr.theta_tilde[i]);
    put_vec(tr.eps_e[i]);
    put_vec(tr.u[i]);
    put_vec(tr.d[i]);
    put(tr.V_err[i]);
    put(tr.V_est[i]);
    put(tr.V_cl[i]);
    out += '\n';
  }
  return out;
}

void emit_csv(const Trajectory& tr, const std::string& path) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path);
  f << to_csv(tr);
  if (!f) throw std::runtime_error("write failed for " + path);
}

Trajectory parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv: missing header");
  std::vector<std::string> cols;
  {
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
  }
  Trajectory tr;
  auto count = [&cols](const std::string& base) {
    int k = 0;
    while (std::find(cols.begin(), cols.end(), base + std::to_string(k + 1)) != cols.end()) ++k;
    return k;
  };
  tr.n = count("x");
  tr.q = count("theta_hat");
  tr.m = count("u");
  if (cols != tr.columns()) throw ConfigError("csv: unexpected header");
  const std::size_t width = cols.size();
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> v;
    v.reserve(width);
    const char* p = line.c_str();
    while (true) {
      char* end = nullptr;
      v.push_back(std::strtod(p, &end));
      if (end == p) throw ConfigError("csv: bad number");
      p = end;
      if (*p != ',') break;
      ++p;
    }
    if (v.size() != width) throw ConfigError("csv: wrong column count");
    std::size_t k = 0;
    auto take = [&](int len) {
      Vec out = Eigen::Map<const Vec>(v.data() + k, len);
      k += static_cast<std::size_t>(len);
      return out;
    };
    tr.t.push_back(v[k++]);
    tr.x.push_back(take(tr.n));
    tr.e.push_back(take(tr.n));
    tr.theta_hat.push_back(take(tr.q));
    tr.theta_tilde.push_back(take(tr.q));
    tr.eps_e.push_back(take(tr.n));
    tr.u.push_back(take(tr.m));
    tr.d.push_back(take(tr.m));
    tr.V_err.push_back(v[k++]);
    tr.V_est.push_back(v[k++]);
    tr.V_cl.push_back(v[k++]);
  }
  return tr;
}

ConvergenceMetrics convergence_metrics(const Trajectory& tr, double settle) {
  ConvergenceMetrics m;
  m.blowup = tr.blowup;
  for (std::size_t i = 0; i < tr.size(); ++i) {
    if (tr.t[i] < settle) continue;
    const double e1 = std::abs(tr.e[i][0]);
    const double en = tr.e[i].norm();
    const double th = tr.theta_tilde[i].norm();
    m.sup_e1 = std::max(m.sup_e1, e1);
    m.sup_e = std::max(m.sup_e, en);
    m.sup_tilde = std::max(m.sup_tilde, th);
    m.sup_joint = std::max(m.sup_joint, std::hypot(en, th));
    ++m.samples;
  }
  if (tr.size() > 0) {
    m.final_e1 = std::abs(tr.e.back()[0]);
    m.final_tilde = tr.theta_tilde.back().norm();
  }
  if (m.samples == 0) {
    const double inf = std::numeric_limits<double>::infinity();
    m.sup_e1 = m.sup_e = m.sup_tilde = m.sup_joint = inf;
  }
  return m;
}

ConvergenceMetrics reproduce_figures(const Scenario& s) {
  if (s.plant != Scenario::PlantKind::Sea) throw ConfigError("reproduce_figures needs the actuator scenario");
  return convergence_metrics(run_closed_loop(s), s.settle_time);
}

}  // namespace iiadapt
