#include "iiadapt/comparison.hpp"

#include "iiadapt/errors.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace iiadapt {

namespace {

double sgn(double s) { return (s > 0.0) - (s < 0.0); }

std::vector<double> log_grid(double lo, double hi, int n) {
  std::vector<double> g(n);
  const double a = std::log(lo), b = std::log(hi);
  for (int i = 0; i < n; ++i) g[i] = std::exp(a + (b - a) * i / (n - 1));
  return g;
}

}  // namespace

void SatParams::validate() const {
  if (!(l_theta > 0.0)) throw ParameterError("sat: l_theta must be positive");
  if (!(l_s > l_theta)) throw ParameterError("sat: l_s must exceed l_theta");
  if (!(eps_s > 0.0 && eps_s <= 1.0)) throw ParameterError("sat: eps_s must lie in (0, 1]");
}

double sat(double s, const SatParams& p) {
  p.validate();
  const double a = std::abs(s);
  if (a <= p.l_s) return s;
  if (a <= p.l_s + p.eps_s) {
    const double d = a - p.l_s;
    return s - sgn(s) * d * d / (2.0 * p.eps_s);
  }
  return sgn(s) * p.bound();
}

double sat_derivative(double s, const SatParams& p) {
  const double a = std::abs(s);
  if (a <= p.l_s) return 1.0;
  if (a <= p.l_s + p.eps_s) return 1.0 - (a - p.l_s) / p.eps_s;
  return 0.0;
}

Vec satv(const Vec& v, const SatParams& p) {
  p.validate();
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sat(v[i], p);
  return out;
}

Vec satv_derivative(const Vec& v, const SatParams& p) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = sat_derivative(v[i], p);
  return out;
}

double dz(double s, double l_theta) {
  const double a = std::abs(s);
  if (a <= l_theta) return 0.0;
  if (a >= l_theta + 1.0) return s;
  const double d = a - l_theta;
  const double lp = l_theta + 1.0;
  return d * d * (2.0 * lp * lp - (2.0 * l_theta + 1.0) * a) * sgn(s);
}

double dz_derivative(double s, double l_theta) {
  const double a = std::abs(s);
  if (a <= l_theta) return 0.0;
  if (a >= l_theta + 1.0) return 1.0;
  const double d = a - l_theta;
  const double lp = l_theta + 1.0;
  return 2.0 * d * (2.0 * lp * lp - (2.0 * l_theta + 1.0) * a) - d * d * (2.0 * l_theta + 1.0);
}

Vec dzv(const Vec& v, double l_theta) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = dz(v[i], l_theta);
  return out;
}

Vec dzv_derivative(const Vec& v, double l_theta) {
  Vec out(v.size());
  for (Eigen::Index i = 0; i < v.size(); ++i) out[i] = dz_derivative(v[i], l_theta);
  return out;
}

// ---------------------------------------------------------------------------

GainFn::GainFn(Tag tag, std::shared_ptr<const Fn> fn, double sup_limit, std::string name)
    : tag_(tag), fn_(std::move(fn)), sup_limit_(sup_limit), name_(std::move(name)) {}

GainFn::GainFn() : GainFn(identity()) {}

const char* to_string(GainFn::Tag tag) {
  switch (tag) {
    case GainFn::Tag::K: return "K";
    case GainFn::Tag::Kinf: return "Kinf";
    case GainFn::Tag::SN: return "SN";
    case GainFn::Tag::PD: return "PD";
  }
  return "?";
}

std::string check_gain_class(GainFn::Tag tag, const GainFn::Fn& fn, double sup_limit) {
  std::ostringstream err;
  const bool zero_at_zero = tag != GainFn::Tag::SN;
  const double f0 = fn(0.0);
  if (!(f0 >= 0.0)) return "negative or non-finite value at 0";
  if (zero_at_zero && f0 != 0.0) return "value at 0 is not 0";
  const auto grid = log_grid(1e-9, 1e9, 1000);
  double prev = f0;
  for (double s : grid) {
    const double v = fn(s);
    if (std::isnan(v) || v < 0.0) {
      err << "invalid value " << v << " at s=" << s;
      return err.str();
    }
    if (v > sup_limit * (1.0 + 1e-12) + 1e-300) {
      err << "value " << v << " exceeds declared limit " << sup_limit << " at s=" << s;
      return err.str();
    }
    if (tag == GainFn::Tag::PD) {
      if (!(v > 0.0)) {
        err << "not positive at s=" << s;
        return err.str();
      }
    } else if (v < prev) {
      err << "decreasing at s=" << s;
      return err.str();
    } else if ((tag == GainFn::Tag::K || tag == GainFn::Tag::Kinf) && !(v > prev)) {
      const bool saturated = std::isfinite(sup_limit) && v >= sup_limit * (1.0 - 1e-12);
      if (!saturated) {
        err << "not strictly increasing at s=" << s;
        return err.str();
      }
    }
    prev = v;
  }
  if (tag == GainFn::Tag::Kinf && std::isfinite(sup_limit)) return "K-infinity function with finite limit";
  return {};
}

GainFn GainFn::make(Tag tag, Fn fn, double sup_limit, std::string name) {
  const std::string why = check_gain_class(tag, fn, sup_limit);
  if (!why.empty()) {
    throw ClassError("gain function '" + name + "' is not of class " + to_string(tag) + ": " + why);
  }
  return unchecked(tag, std::move(fn), sup_limit, std::move(name));
}

GainFn GainFn::unchecked(Tag tag, Fn fn, double sup_limit, std::string name) {
  return GainFn(tag, std::make_shared<const Fn>(std::move(fn)), sup_limit, std::move(name));
}

GainFn GainFn::identity() {
  return unchecked(Tag::Kinf, [](double s) { return s; }, kInf, "id");
}

GainFn GainFn::linear(double c) {
  if (!(c > 0.0)) throw ParameterError("linear gain needs a positive slope");
  return unchecked(Tag::Kinf, [c](double s) { return c * s; }, kInf, "linear");
}

GainFn GainFn::zero() {
  return unchecked(Tag::SN, [](double) { return 0.0; }, 0.0, "zero");
}

double GainFn::operator()(double s) const {
  if (std::isinf(s)) return sup_limit_;
  return (*fn_)(s);
}

namespace {

GainFn::Tag meet(GainFn::Tag a, GainFn::Tag b) {
  using T = GainFn::Tag;
  if (a == T::Kinf && b == T::Kinf) return T::Kinf;
  const bool ka = a == T::K || a == T::Kinf;
  const bool kb = b == T::K || b == T::Kinf;
  if (ka && kb) return T::K;
  return T::SN;
}

}  // namespace

GainFn compose(const std::vector<GainFn>& chain) {
  if (chain.empty()) throw ParameterError("compose: empty chain");
  if (chain.size() == 1) return chain.front();
  GainFn::Tag tag = chain.back().tag();
  double limit = chain.back().sup_limit();
  for (auto it = chain.rbegin() + 1; it != chain.rend(); ++it) {
    tag = meet(tag, it->tag());
    limit = std::isinf(limit) ? it->sup_limit() : (*it)(limit);
  }
  auto fns = chain;
  return GainFn::unchecked(
      tag,
      [fns](double s) {
        double v = s;
        for (auto it = fns.rbegin(); it != fns.rend(); ++it) v = (*it)(v);
        return v;
      },
      limit, "compose");
}

double ominus(const GainFn& g, double s) {
  if (g.tag() == GainFn::Tag::PD) {
    const std::string why = check_gain_class(GainFn::Tag::SN, [&g](double r) { return g(r); }, kInf);
    if (!why.empty()) throw ClassError("ominus: function is not nondecreasing: " + why);
  }
  if (s < 0.0) return 0.0;
  if (s >= g.sup_limit()) return kInf;
  // Strictly increasing functions vanish only at 0; bisection would stop at an underflow point.
  if (s == 0.0 && (g.tag() == GainFn::Tag::K || g.tag() == GainFn::Tag::Kinf)) return 0.0;
  double lo = 0.0, hi = 1.0;
  if (g(0.0) > s) return 0.0;
  while (g(hi) <= s) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) return kInf;
  }
  // Relative tolerance, so that small arguments keep full precision.
  while (hi - lo > 1e-10 * hi && hi > 1e-300) {
    const double mid = 0.5 * (lo + hi);
    if (g(mid) <= s) lo = mid;
    else hi = mid;
  }
  return lo;
}

double inverse(const GainFn& g, double s) {
  if (g.tag() != GainFn::Tag::Kinf) throw ClassError("inverse requires a K-infinity function");
  return ominus(g, s);
}

GainFn inverse_fn(const GainFn& g) {
  if (g.tag() != GainFn::Tag::Kinf) throw ClassError("inverse requires a K-infinity function");
  return GainFn::unchecked(GainFn::Tag::Kinf, [g](double s) { return ominus(g, s); }, kInf,
                           "inv(" + g.name() + ")");
}

GainFn ominus_fn(const GainFn& g) {
  return GainFn::unchecked(meet(g.tag(), GainFn::Tag::Kinf), [g](double s) { return ominus(g, s); }, kInf,
                           "ominus(" + g.name() + ")");
}

GainFn scale(const GainFn& g, double c) {
  if (!(c >= 0.0)) throw ParameterError("scale: negative factor");
  if (c == 0.0) return GainFn::zero();
  return GainFn::unchecked(g.tag(), [g, c](double s) { return c * g(s); }, c * g.sup_limit(), g.name());
}

GainFn sum(const GainFn& a, const GainFn& b) {
  using T = GainFn::Tag;
  const bool ka = a.tag() == T::K || a.tag() == T::Kinf;
  const bool kb = b.tag() == T::K || b.tag() == T::Kinf;
  T tag = T::SN;
  if (ka && kb) tag = (a.tag() == T::Kinf || b.tag() == T::Kinf) ? T::Kinf : T::K;
  return GainFn::unchecked(tag, [a, b](double s) { return a(s) + b(s); }, a.sup_limit() + b.sup_limit(),
                           "sum");
}

GainFn product(const GainFn& a, const GainFn& b) {
  using T = GainFn::Tag;
  T tag = T::SN;
  const bool ka = a.tag() == T::K || a.tag() == T::Kinf;
  const bool kb = b.tag() == T::K || b.tag() == T::Kinf;
  if (ka && kb) tag = (a.tag() == T::Kinf && b.tag() == T::Kinf) ? T::Kinf : T::K;
  double lim = a.sup_limit() * b.sup_limit();
  if (std::isnan(lim)) lim = kInf;
  return GainFn::unchecked(tag, [a, b](double s) { return a(s) * b(s); }, lim, "product");
}

GainFn square(const GainFn& g) { return product(g, g); }

GainFn piecewise_linear(GainFn::Tag tag, std::vector<double> radii, std::vector<double> values,
                        std::string name) {
  if (radii.empty() || radii.size() != values.size()) throw ParameterError("piecewise_linear: bad nodes");
  if (radii.front() != 0.0) throw ParameterError("piecewise_linear: first node must be at 0");
  for (std::size_t i = 1; i < radii.size(); ++i) {
    if (!(radii[i] > radii[i - 1])) throw ParameterError("piecewise_linear: radii must increase");
    if (values[i] < values[i - 1]) throw ParameterError("piecewise_linear: values must not decrease");
  }
  double tail = 0.0;
  if (radii.size() > 1) {
    const std::size_t k = radii.size() - 1;
    tail = (values[k] - values[k - 1]) / (radii[k] - radii[k - 1]);
  }
  const double limit = tail > 0.0 ? kInf : values.back();
  auto fn = [radii = std::move(radii), values = std::move(values), tail](double s) {
    if (s <= 0.0) return values.front();
    if (s >= radii.back()) return values.back() + tail * (s - radii.back());
    const auto it = std::upper_bound(radii.begin(), radii.end(), s);
    const std::size_t j = static_cast<std::size_t>(it - radii.begin());
    const double w = (s - radii[j - 1]) / (radii[j] - radii[j - 1]);
    return values[j - 1] + w * (values[j] - values[j - 1]);
  };
  if (tag == GainFn::Tag::Kinf && !(tail > 0.0)) tag = GainFn::Tag::K;
  return GainFn::make(tag, std::move(fn), limit, std::move(name));
}

// ---------------------------------------------------------------------------

GammaSParams GammaSParams::from_sat(const SatParams& p, int q, double margin) {
  p.validate();
  if (q < 1) throw ParameterError("gamma_s: q must be positive");
  if (!(margin > 0.0)) throw ParameterError("gamma_s: margin must be positive");
  return {std::sqrt(static_cast<double>(q)) * p.bound() + p.l_theta, margin};
}

double gamma_s(double s, const GammaSParams& g) {
  if (s <= g.L0) return s;
  return g.L0 + g.margin * -std::expm1(-(s - g.L0) / g.margin);
}

GainFn gamma_s_fn(const GammaSParams& g) {
  return GainFn::unchecked(GainFn::Tag::K, [g](double s) { return gamma_s(s, g); }, g.l_gamma(), "gamma_s");
}

CoverReport verify_cover_bound(const GammaSParams& g, const SatParams& p,
                               const std::vector<Vec>& theta_samples,
                               const std::vector<Vec>& tilde_samples) {
  if (theta_samples.empty() || tilde_samples.empty()) throw ParameterError("cover bound: empty samples");
  CoverReport rep;
  constexpr double eps = std::numeric_limits<double>::epsilon();
  for (const Vec& th : theta_samples) {
    for (const Vec& tt : tilde_samples) {
      const double lhs = (satv(th + tt, p) - th).norm();
      const double rhs = gamma_s(tt.norm(), g);
      const double v = lhs - rhs;
      rep.max_violation = std::max(rep.max_violation, v);
      // Allow for rounding in (θ+θ̃)−θ.
      if (v > 8.0 * eps * (1.0 + th.norm() + tt.norm())) ++rep.violations;
      ++rep.pairs;
    }
  }
  rep.pass = rep.violations == 0;
  return rep;
}

}  // namespace iiadapt
