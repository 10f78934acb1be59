#include "iiadapt/gain_network.hpp"

#include "iiadapt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <sstream>

namespace iiadapt {

int GainNetwork::add_node(const std::string& label) {
  if (std::find(nodes_.begin(), nodes_.end(), label) != nodes_.end()) {
    throw ParameterError("gain network: duplicate node " + label);
  }
  nodes_.push_back(label);
  return size() - 1;
}

void GainNetwork::add_edge(int from, int to, GainFn gain) {
  if (from < 0 || to < 0 || from >= size() || to >= size()) throw ParameterError("gain network: unknown node");
  if (from == to) throw ParameterError("gain network: self-loops are not allowed");
  if (gain.tag() != GainFn::Tag::K && gain.tag() != GainFn::Tag::Kinf) {
    throw ClassError("gain network: edge gains must be of class K");
  }
  edges_.insert_or_assign({from, to}, std::move(gain));
}

void GainNetwork::add_edge(const std::string& from, const std::string& to, GainFn gain) {
  add_edge(index(from), index(to), std::move(gain));
}

int GainNetwork::index(const std::string& label) const {
  const auto it = std::find(nodes_.begin(), nodes_.end(), label);
  if (it == nodes_.end()) throw ParameterError("gain network: unknown node " + label);
  return static_cast<int>(it - nodes_.begin());
}

const GainFn* GainNetwork::edge(int from, int to) const {
  const auto it = edges_.find({from, to});
  return it == edges_.end() ? nullptr : &it->second;
}

std::vector<int> GainNetwork::successors(int from) const {
  std::vector<int> out;
  for (const auto& [key, g] : edges_) {
    if (key.first == from) out.push_back(key.second);
  }
  return out;
}

std::vector<std::vector<int>> enumerate_simple_cycles(const GainNetwork& net) {
  std::vector<std::vector<int>> cycles;
  const int n = net.size();
  std::vector<int> path;
  std::vector<bool> on_path(static_cast<std::size_t>(n), false);
  std::function<void(int, int)> dfs = [&](int start, int v) {
    for (int w : net.successors(v)) {
      if (w == start) {
        cycles.push_back(path);
      } else if (w > start && !on_path[static_cast<std::size_t>(w)]) {
        on_path[static_cast<std::size_t>(w)] = true;
        path.push_back(w);
        dfs(start, w);
        path.pop_back();
        on_path[static_cast<std::size_t>(w)] = false;
      }
    }
  };
  for (int s = 0; s < n; ++s) {
    path.assign(1, s);
    on_path.assign(static_cast<std::size_t>(n), false);
    on_path[static_cast<std::size_t>(s)] = true;
    dfs(s, s);
  }
  return cycles;
}

GainFn cycle_gain(const GainNetwork& net, const std::vector<int>& cycle) {
  if (cycle.size() < 2) throw ParameterError("cycle_gain: a cycle needs at least two nodes");
  std::vector<GainFn> chain;
  for (std::size_t k = 0; k < cycle.size(); ++k) {
    const int from = cycle[k], to = cycle[(k + 1) % cycle.size()];
    const GainFn* g = net.edge(from, to);
    if (!g) throw ParameterError("certify: missing edge " + net.label(from) + " -> " + net.label(to));
    chain.push_back(*g);
  }
  std::reverse(chain.begin(), chain.end());
  return compose(chain);
}

std::vector<double> log_grid(double lo, double hi, int count) {
  if (!(lo > 0.0 && hi > lo && count >= 2)) throw ParameterError("log_grid: need 0 < lo < hi and count >= 2");
  std::vector<double> g(static_cast<std::size_t>(count));
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < count; ++i) g[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (count - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

CycleCheck certify_cycle(const GainNetwork& net, const std::vector<int>& cycle) {
  CycleCheck c;
  c.nodes = cycle;
  const GainFn g = cycle_gain(net, cycle);
  for (double s : log_grid(net.s_min, net.s_max, net.samples)) {
    const double v = g(s);
    c.samples.emplace_back(s, v);
    const double margin = (s - v) / s;
    if (!(margin >= c.min_margin)) {
      c.min_margin = margin;
      c.argmin_s = s;
    }
  }
  c.saturated_tail = g.sup_limit() < net.s_max;
  c.pass = c.min_margin > 0.0;
  return c;
}

Certificate certify(const GainNetwork& net) {
  Certificate cert;
  cert.s_min = net.s_min;
  cert.s_max = net.s_max;
  cert.samples = net.samples;
  cert.pass = true;
  for (const auto& cyc : enumerate_simple_cycles(net)) {
    cert.cycles.push_back(certify_cycle(net, cyc));
    cert.pass = cert.pass && cert.cycles.back().pass;
  }
  return cert;
}

namespace {

std::string cycle_name(const GainNetwork& net, const std::vector<int>& nodes) {
  std::string s;
  for (int v : nodes) s += net.label(v) + " -> ";
  return s + net.label(nodes.front());
}

}  // namespace

std::string Certificate::text(const GainNetwork& net) const {
  std::ostringstream os;
  os << "cyclic small-gain certificate: " << cycles.size() << " simple cycle(s), " << samples
     << " log-spaced points on [" << s_min << ", " << s_max << "]\n";
  os << "note: composed(s) < s is checked on this grid only.\n";
  for (const auto& c : cycles) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "  %s  min margin %.6g at s=%.3g%s  %s\n", cycle_name(net, c.nodes).c_str(),
                  c.min_margin, c.argmin_s, c.saturated_tail ? "  (bounded composition, tail passes)" : "",
                  c.pass ? "PASS" : "FAIL");
    os << buf;
  }
  os << (pass ? "PASS" : "FAIL") << "\n";
  return os.str();
}

std::string Certificate::csv(const GainNetwork& net) const {
  std::ostringstream os;
  os << "cycle,s,composed,margin\n";
  char buf[128];
  for (const auto& c : cycles) {
    const std::string name = cycle_name(net, c.nodes);
    for (const auto& [s, v] : c.samples) {
      std::snprintf(buf, sizeof buf, ",%.17g,%.17g,%.17g\n", s, v, (s - v) / s);
      os << '"' << name << '"' << buf;
    }
  }
  return os.str();
}

GainFn kappa_bar2(const GainFn& kappa2, double l_gamma, const GainFn& kappa3, const GainFn& kappa4,
                  double kappa3_star, double kappa4_star) {
  const GainFn nu_inner =
      sum(product(kappa3, kappa4), sum(scale(kappa3, kappa4_star), scale(kappa4, kappa3_star)));
  return sum(scale(kappa2, l_gamma), square(nu_inner));
}

ConditionReport check_theorem2_condition(const ConditionInputs& in, ConditionMode mode,
                                         const std::vector<double>& grid) {
  if (grid.empty()) throw ParameterError("condition check: empty grid");
  if (in.alpha1.tag() != GainFn::Tag::Kinf) throw ClassError("condition check: alpha1 must be of class K-infinity");
  if (!(in.tau_err > 1.0)) throw ParameterError("condition check: tau_err must exceed 1");
  GainFn inner;
  switch (mode) {
    case ConditionMode::Theorem2:
    case ConditionMode::Corollary1:
      inner = scale(in.kappa2, in.a_star * in.l_gamma);
      break;
    case ConditionMode::Robust:
      if (!in.nu) throw ParameterError("condition check: robust mode needs nu");
      inner = scale(sum(scale(in.kappa2, in.l_gamma), *in.nu), in.a_star);
      break;
    case ConditionMode::Filtered:
      if (!in.rho2) throw ParameterError("condition check: filtered mode needs rho2");
      inner = scale(*in.rho2, in.a_star * in.l_gamma);
      break;
  }
  const GainFn chain = compose({in.gamma_s, inner, inverse_fn(in.alpha1), in.alpha2});
  ConditionReport r;
  r.mode = mode;
  for (double s : grid) {
    const double rhs = in.tau_err * chain(s) * in.alpha4(s) * in.kappa1(s);
    const double lhs = in.alpha3(s);
    r.samples.emplace_back(s, rhs);
    const double slack = lhs - rhs;
    if (slack < 0.0) ++r.violations;
    if (slack < r.min_slack) {
      r.min_slack = slack;
      r.worst_s = s;
    }
    if (lhs > 0.0) r.min_relative_slack = std::min(r.min_relative_slack, slack / lhs);
  }
  r.vcl_constructible = in.tau_err > 4.0;
  r.pass = r.violations == 0 && (mode != ConditionMode::Corollary1 || r.vcl_constructible);
  return r;
}

Theorem4Gains theorem4_gains(const Theorem4Inputs& in) {
  if (!(in.tau_err > in.tau_err_prime && in.tau_err_prime > in.tau_est && in.tau_est > 1.0)) {
    throw ParameterError("theorem4_gains: need tau_err > tau_err' > tau_est > 1");
  }
  if (!(in.a1 > 0.0 && in.a_star > 0.0 && in.l_gamma > 0.0)) throw ParameterError("theorem4_gains: constants must be positive");
  using T = GainFn::Tag;
  Theorem4Gains g;
  const double c = in.a1 * std::pow(in.tau_est * in.a_star * in.l_gamma, 2);
  const GainFn a1inv = inverse_fn(in.alpha1);
  const GainFn rho2 = in.rho2, rho3 = in.rho3, rho1 = in.rho1;
  g.g_theta_e = GainFn::make(
      T::K, [c, rho2, a1inv](double s) { return c * std::pow(rho2(a1inv(s)), 2); },
      rho2.sup_limit() < kInf ? c * rho2.sup_limit() * rho2.sup_limit() : kInf, "g_theta_e");
  const double ce = 4.0 * in.tau_est * in.tau_est / std::pow(in.tau_est - 1.0, 2) * c;
  g.g_theta_eps = GainFn::make(
      T::K, [ce, rho3](double s) { return ce * std::pow(rho3(std::sqrt(s)), 2); },
      rho3.sup_limit() < kInf ? ce * rho3.sup_limit() * rho3.sup_limit() : kInf, "g_theta_eps");
  const double ratio = in.tau_est / in.tau_err_prime;
  const GainFn gte = g.g_theta_e;
  g.g_e_theta = GainFn::unchecked(T::K, [gte, ratio](double s) { return ominus(gte, ratio * s); }, kInf, "g_e_theta");
  const GammaSParams gs = in.gs;
  const double a1 = in.a1, r1s = in.rho1_star;
  g.pi_eps_theta = GainFn::make(
      T::K,
      [gs, a1, r1s](double s) {
        const double v = gamma_s(std::sqrt(s / a1), gs);
        return r1s * v + 0.25 * v * v;
      },
      r1s * gs.l_gamma() + 0.25 * gs.l_gamma() * gs.l_gamma(), "pi_eps_theta");
  g.pi_eps_e = GainFn::make(
      T::K, [rho1, a1inv](double s) { return std::pow(rho1(a1inv(s)), 2); },
      rho1.sup_limit() < kInf ? rho1.sup_limit() * rho1.sup_limit() : kInf, "pi_eps_e");

  // Smallest μ' with ½π(s) ≤ π(μ's), sampled on a dense grid and inflated.
  double mu = 0.0;
  for (double s : log_grid(1e-10, 1e10, 2001)) {
    const double need = ominus(g.pi_eps_theta, 0.5 * g.pi_eps_theta(s));
    if (std::isfinite(need)) mu = std::max(mu, need / s);
  }
  g.mu_prime = std::min(1.05 * mu, 0.5 * (1.0 + mu));
  if (!(g.mu_prime < 1.0)) throw NumericError("theorem4_gains: no mu' below 1 found");

  const GainFn gtx = g.g_theta_eps, get = g.g_e_theta, pe = g.pi_eps_e;
  const double mup = g.mu_prime;
  g.g_eps_theta =
      GainFn::unchecked(T::K, [gtx, mup](double s) { return ominus(gtx, mup * s); }, kInf, "g_eps_theta");
  g.g_eps_e = GainFn::unchecked(
      T::K,
      [gtx, gte, ratio, pe](double s) {
        // γ̌_{θ̃,ε}⁻¹ ∘ γ̌_{e,θ̃}⁻¹ ∘ π⁻¹ ∘ ½π, with γ̌_{e,θ̃}⁻¹(v) = (τ'/τ_est) γ̌_{θ̃,e}(v).
        const double a = ominus(pe, 0.5 * pe(s));
        const double b = gte(a) / ratio;
        return ominus(gtx, b);
      },
      kInf, "g_eps_e");
  const GainFn pt = g.pi_eps_theta;
  g.k1_floor = GainFn::unchecked(
      T::K, [pe, get, gtx](double r) { return pe(get(gtx(r * r))); }, kInf, "k1_floor");
  g.k2_floor = GainFn::unchecked(T::K, [pt, gtx](double r) { return pt(gtx(r * r)); }, kInf, "k2_floor");
  return g;
}

GainNetwork theorem4_network(const Theorem4Gains& g) {
  GainNetwork net;
  const int e = net.add_node("e"), th = net.add_node("theta_tilde"), ep = net.add_node("eps_e");
  net.add_edge(e, th, g.g_theta_e);
  net.add_edge(th, e, g.g_e_theta);
  net.add_edge(ep, th, g.g_theta_eps);
  net.add_edge(th, ep, g.g_eps_theta);
  net.add_edge(e, ep, g.g_eps_e);
  return net;
}

}  // namespace iiadapt
