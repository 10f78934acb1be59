#include "iiadapt/scenario.hpp"

#include "iiadapt/errors.hpp"

#include <json.hpp>

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

namespace iiadapt {

using nlohmann::json;

double DisturbanceSpec::operator()(double t) const {
  switch (kind) {
    case Kind::Zero:
      return 0.0;
    case Kind::Sine:
      return amp * std::sin(freq * t);
    case Kind::Step:
      return t >= time ? value : 0.0;
    case Kind::Table: {
      if (t <= table_t.front()) return table_d.front();
      if (t >= table_t.back()) return table_d.back();
      const auto it = std::upper_bound(table_t.begin(), table_t.end(), t);
      const std::size_t i = static_cast<std::size_t>(it - table_t.begin());
      const double w = (t - table_t[i - 1]) / (table_t[i] - table_t[i - 1]);
      return (1.0 - w) * table_d[i - 1] + w * table_d[i];
    }
  }
  return 0.0;
}

namespace {

// Object view that remembers which keys were read and rejects the rest.
class Reader {
 public:
  Reader(const json& j, std::string where) : j_(j), where_(std::move(where)) {
    if (!j_.is_object()) throw ConfigError(where_ + ": expected an object");
  }
  ~Reader() noexcept(false) {
    if (std::uncaught_exceptions() > 0) return;
    for (const auto& [k, v] : j_.items()) {
      if (!seen_.count(k)) throw ConfigError(where_ + ": unknown key '" + k + "'");
    }
  }
  bool has(const std::string& k) {
    seen_.insert(k);
    return j_.contains(k);
  }
  const json& at(const std::string& k) {
    seen_.insert(k);
    return j_.at(k);
  }
  std::string path(const std::string& k) const { return where_ + "." + k; }

  void num(const std::string& k, double& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number()) throw ConfigError(path(k) + ": expected a number");
    out = v.get<double>();
  }
  void boolean(const std::string& k, bool& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_boolean()) throw ConfigError(path(k) + ": expected true/false");
    out = v.get<bool>();
  }
  void str(const std::string& k, std::string& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_string()) throw ConfigError(path(k) + ": expected a string");
    out = v.get<std::string>();
  }
  void integer(const std::string& k, long long& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_number_integer()) throw ConfigError(path(k) + ": expected an integer");
    out = v.get<long long>();
  }
  void vec(const std::string& k, std::vector<double>& out) {
    if (!has(k)) return;
    const json& v = j_.at(k);
    if (!v.is_array()) throw ConfigError(path(k) + ": expected an array of numbers");
    out.clear();
    for (const auto& e : v) {
      if (!e.is_number()) throw ConfigError(path(k) + ": expected an array of numbers");
      out.push_back(e.get<double>());
    }
  }
  void opt_vec(const std::string& k, std::optional<std::vector<double>>& out) {
    if (!has(k)) return;
    std::vector<double> v;
    vec(k, v);
    out = v;
  }

 private:
  const json& j_;
  std::string where_;
  std::set<std::string> seen_;
};

template <class E>
E pick(const std::string& what, const std::string& v, std::initializer_list<std::pair<const char*, E>> opts) {
  for (const auto& [name, e] : opts) {
    if (v == name) return e;
  }
  std::string allowed;
  for (const auto& o : opts) allowed += std::string(allowed.empty() ? "" : ", ") + o.first;
  throw ConfigError(what + ": '" + v + "' is not one of " + allowed);
}

void read_power(Reader& r, const std::string& k, FilterPowerTerm& t) {
  if (!r.has(k)) return;
  Reader s(r.at(k), r.path(k));
  s.num("c", t.c);
  s.num("p", t.p);
}

}  // namespace

void Scenario::validate() const {
  if (!(horizon > 0.0)) throw ConfigError("horizon must be positive");
  if (!(start_time >= 0.0 && start_time < horizon)) throw ConfigError("start_time must lie in [0, horizon)");
  try {
    integrator.validate();
  } catch (const ParameterError& e) {
    throw ConfigError(e.what());
  }
  if (disturbance.kind == DisturbanceSpec::Kind::Table) {
    if (disturbance.table_t.size() < 2 || disturbance.table_t.size() != disturbance.table_d.size() ||
        !std::is_sorted(disturbance.table_t.begin(), disturbance.table_t.end())) {
      throw ConfigError("disturbance table needs >= 2 sorted samples");
    }
  }
  if (!(estimator.k_dz > 0.0)) throw ConfigError("estimator.k_dz must be positive");
  if (estimator.variant == EstimatorSpec::Variant::Filtered && !(estimator.k_eps > 0.0)) {
    throw ConfigError("estimator.k_eps must be positive");
  }
  if (x0 && e0) throw ConfigError("initial: give x0 or e0, not both");
  const std::size_t n = plant == PlantKind::Sea ? 3 : 2;
  const std::size_t q = 2;
  if (x0 && x0->size() != n) throw ConfigError("initial.x0 has the wrong dimension");
  if (e0 && e0->size() != n) throw ConfigError("initial.e0 has the wrong dimension");
  if (theta_hat0 && theta_hat0->size() != q) throw ConfigError("initial.theta_hat0 has the wrong dimension");
  if (plant == PlantKind::Sea) {
    if (controller.variant == ControllerSpec::Variant::Nominal) {
      throw ConfigError("the actuator plant uses controller.variant = sea");
    }
    if (e_hat0 && e_hat0->size() != 1) throw ConfigError("initial.e_hat0 has one entry for the actuator filter");
    if (sea.theta.size() != 2) throw ConfigError("sea.theta must have two entries");
  } else {
    if (controller.variant == ControllerSpec::Variant::Sea) {
      throw ConfigError("controller.variant = sea requires plant = sea");
    }
    if (e_hat0 && e_hat0->size() != n) throw ConfigError("initial.e_hat0 has the wrong dimension");
    if (expdiag.theta.size() != 2) throw ConfigError("expdiag.theta must have two entries");
  }
  if (lyapunov.enabled && !(lyapunov.tau_est > 1.0)) throw ConfigError("lyapunov.tau_est must exceed 1");
  if (!(smallgain.s_min > 0.0 && smallgain.s_max > smallgain.s_min && smallgain.samples >= 2)) {
    throw ConfigError("smallgain grid is invalid");
  }
}

Scenario parse_scenario(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("scenario is not valid JSON: ") + e.what());
  }
  Scenario s;
  {
    Reader r(j, "scenario");
    std::string plant = "sea";
    r.str("plant", plant);
    s.plant = pick<Scenario::PlantKind>("plant", plant, {{"sea", Scenario::PlantKind::Sea}, {"expdiag", Scenario::PlantKind::ExpDiag}});
    if (s.plant == Scenario::PlantKind::ExpDiag) {
      s.controller.variant = ControllerSpec::Variant::Nominal;
    }
    r.str("name", s.name);
    r.num("start_time", s.start_time);
    r.num("horizon", s.horizon);
    r.num("settle_time", s.settle_time);
    long long seed = static_cast<long long>(s.seed);
    r.integer("seed", seed);
    s.seed = static_cast<std::uint64_t>(seed);

    if (r.has("sea")) {
      Reader q(r.at("sea"), "sea");
      if (q.has("physical")) {
        Reader p(q.at("physical"), "sea.physical");
        auto& ph = s.sea.physical;
        p.num("m", ph.m);
        p.num("mu_v", ph.mu_v);
        p.num("c_f", ph.c_f);
        p.num("c_b", ph.c_b);
        p.num("L", ph.L);
        p.num("R", ph.R);
        p.num("Q0_l", ph.Q0_l);
        p.num("Q0_u", ph.Q0_u);
        p.num("p_lo", ph.p_lo);
        p.num("p_hi", ph.p_hi);
      }
      q.vec("theta", s.sea.theta);
      q.num("l_s", s.sea.l_s);
      q.num("eps_s", s.sea.eps_s);
      q.num("gamma_margin", s.sea.gamma_margin);
    }
    if (r.has("expdiag")) {
      Reader q(r.at("expdiag"), "expdiag");
      q.vec("theta", s.expdiag.theta);
      q.num("k_e", s.expdiag.k_e);
      q.num("l_s", s.expdiag.l_s);
      q.num("eps_s", s.expdiag.eps_s);
    }
    if (r.has("controller")) {
      Reader c(r.at("controller"), "controller");
      std::string v;
      c.str("variant", v);
      if (!v.empty()) {
        s.controller.variant = pick<ControllerSpec::Variant>(
            "controller.variant", v,
            {{"nominal", ControllerSpec::Variant::Nominal}, {"robust", ControllerSpec::Variant::Robust},
             {"sea", ControllerSpec::Variant::Sea}});
      }
      auto& g = s.controller.sea;
      c.num("k1", g.k1);
      c.num("k21", g.k21);
      c.num("k22", g.k22);
      c.num("k31", g.k31);
      c.num("k32", g.k32);
      c.num("k33", g.k33);
      c.num("k_d", g.k_d);
      std::string ex;
      c.str("e2_exponent", ex);
      if (!ex.empty()) {
        g.e2_exponent = pick<E2Exponent>("controller.e2_exponent", ex,
                                         {{"consistent", E2Exponent::Consistent}, {"literal", E2Exponent::Literal}});
      }
    }
    if (r.has("estimator")) {
      Reader e(r.at("estimator"), "estimator");
      std::string v;
      e.str("variant", v);
      if (!v.empty()) {
        s.estimator.variant = pick<EstimatorSpec::Variant>(
            "estimator.variant", v,
            {{"pde-beta", EstimatorSpec::Variant::PdeBeta}, {"filtered", EstimatorSpec::Variant::Filtered}});
      }
      e.num("k_dz", s.estimator.k_dz);
      e.num("k_eps", s.estimator.k_eps);
      read_power(e, "K1", s.estimator.K1);
      read_power(e, "K2", s.estimator.K2);
      e.boolean("calibrate_K", s.estimator.calibrate_K);
    }
    if (r.has("disturbance")) {
      Reader d(r.at("disturbance"), "disturbance");
      std::string type = "zero";
      d.str("type", type);
      using K = DisturbanceSpec::Kind;
      s.disturbance.kind =
          pick<K>("disturbance.type", type, {{"zero", K::Zero}, {"sine", K::Sine}, {"step", K::Step}, {"table", K::Table}});
      d.num("amp", s.disturbance.amp);
      d.num("freq", s.disturbance.freq);
      d.num("time", s.disturbance.time);
      d.num("value", s.disturbance.value);
      d.vec("t", s.disturbance.table_t);
      d.vec("d", s.disturbance.table_d);
    }
    if (r.has("integrator")) {
      Reader i(r.at("integrator"), "integrator");
      std::string m;
      i.str("method", m);
      if (!m.empty()) {
        s.integrator.method = pick<IntegratorSpec::Method>(
            "integrator.method", m, {{"rk4", IntegratorSpec::Method::RK4}, {"rk45", IntegratorSpec::Method::RK45}});
      }
      i.num("step", s.integrator.step);
      i.num("rtol", s.integrator.rtol);
      i.num("atol", s.integrator.atol);
      i.num("max_step", s.integrator.max_step);
      i.num("log_interval", s.integrator.log_interval);
    }
    if (r.has("initial")) {
      Reader i(r.at("initial"), "initial");
      i.opt_vec("x0", s.x0);
      i.opt_vec("e0", s.e0);
      i.opt_vec("theta_hat0", s.theta_hat0);
      i.opt_vec("e_hat0", s.e_hat0);
    }
    if (r.has("lyapunov")) {
      Reader l(r.at("lyapunov"), "lyapunov");
      l.boolean("enabled", s.lyapunov.enabled);
      long long steps = s.lyapunov.vest_steps;
      l.integer("vest_steps", steps);
      s.lyapunov.vest_steps = static_cast<int>(steps);
      l.num("tau_est", s.lyapunov.tau_est);
      l.num("tau1", s.lyapunov.tau1);
      l.num("tau2", s.lyapunov.tau2);
      long long as = static_cast<long long>(s.lyapunov.a_samples);
      l.integer("a_samples", as);
      s.lyapunov.a_samples = static_cast<std::size_t>(as);
    }
    if (r.has("smallgain")) {
      Reader g(r.at("smallgain"), "smallgain");
      g.num("s_min", s.smallgain.s_min);
      g.num("s_max", s.smallgain.s_max);
      long long n = s.smallgain.samples;
      g.integer("samples", n);
      s.smallgain.samples = static_cast<int>(n);
    }
  }
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

std::string dump_scenario(const Scenario& s) {
  json j;
  j["plant"] = s.plant == Scenario::PlantKind::Sea ? "sea" : "expdiag";
  if (!s.name.empty()) j["name"] = s.name;
  j["start_time"] = s.start_time;
  j["horizon"] = s.horizon;
  j["settle_time"] = s.settle_time;
  j["seed"] = s.seed;
  if (s.plant == Scenario::PlantKind::Sea) {
    const auto& ph = s.sea.physical;
    j["sea"] = {{"physical",
                 {{"m", ph.m}, {"mu_v", ph.mu_v}, {"c_f", ph.c_f}, {"c_b", ph.c_b}, {"L", ph.L}, {"R", ph.R},
                  {"Q0_l", ph.Q0_l}, {"Q0_u", ph.Q0_u}, {"p_lo", ph.p_lo}, {"p_hi", ph.p_hi}}},
                {"theta", s.sea.theta},
                {"l_s", s.sea.l_s},
                {"eps_s", s.sea.eps_s},
                {"gamma_margin", s.sea.gamma_margin}};
  } else {
    j["expdiag"] = {{"theta", s.expdiag.theta}, {"k_e", s.expdiag.k_e}, {"l_s", s.expdiag.l_s}, {"eps_s", s.expdiag.eps_s}};
  }
  const auto& g = s.controller.sea;
  const char* cv = s.controller.variant == ControllerSpec::Variant::Sea      ? "sea"
                   : s.controller.variant == ControllerSpec::Variant::Robust ? "robust"
                                                                             : "nominal";
  j["controller"] = {{"variant", cv},   {"k1", g.k1},   {"k21", g.k21}, {"k22", g.k22}, {"k31", g.k31},
                     {"k32", g.k32},    {"k33", g.k33}, {"k_d", g.k_d},
                     {"e2_exponent", g.e2_exponent == E2Exponent::Consistent ? "consistent" : "literal"}};
  j["estimator"] = {{"variant", s.estimator.variant == EstimatorSpec::Variant::PdeBeta ? "pde-beta" : "filtered"},
                    {"k_dz", s.estimator.k_dz},
                    {"k_eps", s.estimator.k_eps},
                    {"K1", {{"c", s.estimator.K1.c}, {"p", s.estimator.K1.p}}},
                    {"K2", {{"c", s.estimator.K2.c}, {"p", s.estimator.K2.p}}},
                    {"calibrate_K", s.estimator.calibrate_K}};
  const auto& d = s.disturbance;
  const char* dk = d.kind == DisturbanceSpec::Kind::Zero   ? "zero"
                   : d.kind == DisturbanceSpec::Kind::Sine ? "sine"
                   : d.kind == DisturbanceSpec::Kind::Step ? "step"
                                                           : "table";
  j["disturbance"] = {{"type", dk}, {"amp", d.amp}, {"freq", d.freq}, {"time", d.time}, {"value", d.value}};
  if (d.kind == DisturbanceSpec::Kind::Table) {
    j["disturbance"]["t"] = d.table_t;
    j["disturbance"]["d"] = d.table_d;
  }
  const auto& in = s.integrator;
  j["integrator"] = {{"method", in.method == IntegratorSpec::Method::RK4 ? "rk4" : "rk45"},
                     {"step", in.step},
                     {"rtol", in.rtol},
                     {"atol", in.atol},
                     {"max_step", in.max_step},
                     {"log_interval", in.log_interval}};
  json init = json::object();
  if (s.x0) init["x0"] = *s.x0;
  if (s.e0) init["e0"] = *s.e0;
  if (s.theta_hat0) init["theta_hat0"] = *s.theta_hat0;
  if (s.e_hat0) init["e_hat0"] = *s.e_hat0;
  j["initial"] = init;
  j["lyapunov"] = {{"enabled", s.lyapunov.enabled}, {"vest_steps", s.lyapunov.vest_steps},
                   {"tau_est", s.lyapunov.tau_est}, {"tau1", s.lyapunov.tau1},
                   {"tau2", s.lyapunov.tau2},       {"a_samples", s.lyapunov.a_samples}};
  j["smallgain"] = {{"s_min", s.smallgain.s_min}, {"s_max", s.smallgain.s_max}, {"samples", s.smallgain.samples}};
  return j.dump(2);
}

void set_scenario_param(Scenario& s, const std::string& path, double value) {
  json j = json::parse(dump_scenario(s));
  std::string ptr = "/" + path;
  std::replace(ptr.begin(), ptr.end(), '.', '/');
  const json::json_pointer jp(ptr);
  if (!j.contains(jp)) throw ConfigError("unknown parameter " + path);
  json& slot = j[jp];
  if (slot.is_number_integer() || slot.is_number_unsigned()) {
    slot = static_cast<long long>(value);
  } else if (slot.is_number()) {
    slot = value;
  } else {
    throw ConfigError("parameter " + path + " is not numeric");
  }
  s = parse_scenario(j.dump());
}

}  // namespace iiadapt
