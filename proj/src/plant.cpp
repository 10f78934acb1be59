#include "iiadapt/plant.hpp"

#include "iiadapt/errors.hpp"
#include "iiadapt/sampling.hpp"

#include <algorithm>
#include <cmath>

namespace iiadapt {

ParameterSet ParameterSet::box(Vec lo, Vec hi) {
  if (lo.size() != hi.size() || lo.size() == 0) throw DimensionError("parameter box: bad bounds");
  if ((hi.array() < lo.array()).any()) throw ParameterError("parameter box: hi < lo");
  ParameterSet s;
  s.kind = Kind::Box;
  s.q = static_cast<int>(lo.size());
  s.lo = std::move(lo);
  s.hi = std::move(hi);
  return s;
}

ParameterSet ParameterSet::ball(int q, double radius) {
  if (q < 1 || !(radius >= 0.0)) throw ParameterError("parameter ball: bad size");
  ParameterSet s;
  s.kind = Kind::Ball;
  s.q = q;
  s.radius = radius;
  return s;
}

double ParameterSet::max_norm() const {
  if (kind == Kind::Ball) return radius;
  double best = 0.0;
  for (const Vec& v : vertices()) best = std::max(best, v.norm());
  return best;
}

bool ParameterSet::contains(const Vec& theta, double tol) const {
  if (theta.size() != q) return false;
  if (kind == Kind::Ball) return theta.norm() <= radius + tol;
  return (theta.array() >= lo.array() - tol).all() && (theta.array() <= hi.array() + tol).all();
}

std::vector<Vec> ParameterSet::vertices() const {
  std::vector<Vec> out;
  if (kind == Kind::Ball) return out;
  const unsigned count = 1u << q;
  for (unsigned mask = 0; mask < count; ++mask) {
    Vec v(q);
    for (int i = 0; i < q; ++i) v[i] = (mask >> i) & 1u ? hi[i] : lo[i];
    out.push_back(v);
  }
  return out;
}

int ParameterSet::unit_dims() const { return kind == Kind::Box ? q : ball_dims(q); }

Vec ParameterSet::point(const double* u) const {
  return kind == Kind::Box ? box_point(u, lo, hi) : ball_point(u, q, radius);
}

void Plant::validate() const {
  if (n < 1 || m < 1 || q < 1) throw DimensionError("plant: dimensions must be positive");
  if (!f1 || !phi || !dphi_dtheta || !g1) throw ParameterError("plant: missing function");
  if (theta_set.q != q) throw DimensionError("plant: parameter set dimension differs from q");
  if (l_theta < theta_set.max_norm() - 1e-12) throw ParameterError("plant: l_theta below max |theta| over the set");
}

double check_parameter_jacobian(const Plant& plant, const std::vector<Vec>& thetas, const std::vector<Vec>& xs,
                                double h) {
  double worst = 0.0;
  for (const Vec& th : thetas) {
    for (const Vec& x : xs) {
      const Mat J = plant.dphi_dtheta(th, x);
      Mat Jfd(plant.n, plant.q);
      for (int j = 0; j < plant.q; ++j) {
        Vec tp = th, tm = th;
        tp[j] += h;
        tm[j] -= h;
        Jfd.col(j) = (plant.phi(tp, x) - plant.phi(tm, x)) / (2.0 * h);
      }
      const double scale = std::max(1.0, J.norm());
      worst = std::max(worst, (J - Jfd).norm() / scale);
    }
  }
  return worst;
}

void Reference::validate(int samples) const {
  if (!x_r || !dx_r) throw ParameterError("reference: missing function");
  if (!(t_max > 0.0)) throw ParameterError("reference: horizon must be positive");
  const double h = 1e-5;
  for (int i = 0; i <= samples; ++i) {
    const double t = t_max * i / samples;
    const Vec xr = x_r(t);
    if (xr.norm() > r1 * (1.0 + 1e-12)) throw PreconditionError("reference leaves the ball of radius r1");
    const Vec fd = (x_r(t + h) - x_r(t - h)) / (2.0 * h);
    const Vec d = dx_r(t);
    if ((fd - d).norm() > 1e-4 * std::max(1.0, d.norm())) throw PreconditionError("reference derivative mismatch");
  }
}

Vec plant_rhs(const Plant& plant, const Vec& x, const Vec& theta, const Vec& u, const Vec& d) {
  if (x.size() != plant.n || theta.size() != plant.q || u.size() != plant.m || d.size() != plant.m) {
    throw DimensionError("plant_rhs: dimension mismatch");
  }
  return plant.f1(x) + plant.phi(theta, x) + plant.g1(x) * (u + d);
}

Vec plant_rhs(const Plant& plant, const Vec& x, const Vec& theta, const Vec& u) {
  return plant_rhs(plant, x, theta, u, Vec::Zero(plant.m));
}

Vec error_rhs(const Plant& plant, const Reference& ref, const Vec& e, double t, const Vec& theta, const Vec& u,
              const Vec& d) {
  if (t < 0.0 || t > ref.t_max) throw PreconditionError("error_rhs: t outside the reference horizon");
  return plant_rhs(plant, e + ref.x_r(t), theta, u, d) - ref.dx_r(t);
}

Vec error_rhs(const Plant& plant, const Reference& ref, const Vec& e, double t, const Vec& theta, const Vec& u) {
  return error_rhs(plant, ref, e, t, theta, u, Vec::Zero(plant.m));
}

Vec tilde_phi_s(const Plant& plant, const Vec& theta_dag, const Vec& theta_ddag, const Vec& x,
                const SatParams& p) {
  if (theta_dag.size() != plant.q || theta_ddag.size() != plant.q) throw DimensionError("tilde_phi_s: bad q");
  return plant.phi(satv(theta_dag + theta_ddag, p), x) - plant.phi(satv(theta_dag, p), x);
}

double spectral_norm(const Mat& a) {
  if (a.size() == 0) return 0.0;
  if (a.cols() == 1) return a.norm();
  if (a.rows() == 1) return a.norm();
  Eigen::SelfAdjointEigenSolver<Mat> es(a.transpose() * a, Eigen::EigenvaluesOnly);
  return std::sqrt(std::max(0.0, es.eigenvalues().maxCoeff()));
}

namespace {

struct KappaSampler {
  const Plant& plant;
  const Reference& ref;
  const KappaOptions& opts;
  Vec box_lo, box_hi;
  int dim_theta, dim_ref, dim_e;

  KappaSampler(const Plant& p, const Reference& r, const SatParams& sat, const KappaOptions& o)
      : plant(p), ref(r), opts(o) {
    // θ is sampled over the cube containing the range of satv.
    box_hi = Vec::Constant(p.q, sat.bound());
    box_lo = -box_hi;
    dim_theta = p.q;
    dim_ref = opts.reference_points.empty() ? ball_dims(p.n) : 1;
    dim_e = ball_dims(p.n);
  }

  int dims() const { return dim_theta + dim_ref + dim_e; }

  Vec theta(const double* u) const { return box_point(u, box_lo, box_hi); }
  Vec xr(const double* u) const {
    if (opts.reference_points.empty()) return ball_point(u, plant.n, ref.r1);
    const std::size_t k = std::min(opts.reference_points.size() - 1,
                                   static_cast<std::size_t>(u[0] * opts.reference_points.size()));
    return opts.reference_points[k];
  }
};

double quantity(const Plant& plant, const KappaOptions& opts, int which, const Vec& th, const Vec& xr,
                const Vec& e, Vec* rows) {
  const Vec x = xr + e;
  switch (which) {
    case 1: return spectral_norm(plant.dphi_dtheta(th, x));
    case 2: {
      const Mat d = opts.varsigma(xr) * plant.dphi_dtheta(th, xr) - opts.varsigma(x) * plant.dphi_dtheta(th, x);
      *rows = d.rowwise().norm();
      return rows->sum();
    }
    case 3: return spectral_norm(plant.g1(x));
    case 4: return spectral_norm(opts.varsigma(x));
    default: throw ParameterError("estimate_kappa: which must be 1..4");
  }
}

}  // namespace

double estimate_kappa_star(const Plant& plant, const Reference& ref, int which, const KappaOptions& opts) {
  if (which != 3 && which != 4) throw ParameterError("kappa star: which must be 3 or 4");
  if (which == 4 && !opts.varsigma) throw ParameterError("kappa4 needs varsigma");
  const int dim = opts.reference_points.empty() ? ball_dims(plant.n) : 1;
  Halton h(dim, opts.seed);
  double best = 0.0;
  const Vec zero = Vec::Zero(plant.n);
  const Vec th0 = Vec::Zero(plant.q);
  KappaSampler ks(plant, ref, SatParams{}, opts);
  for (std::size_t i = 0; i < opts.samples; ++i) {
    const Vec xr = ks.xr(h.next().data());
    best = std::max(best, quantity(plant, opts, which, th0, xr, zero, nullptr));
  }
  if (!std::isfinite(best)) throw NumericError("kappa star: non-finite supremum");
  return best * opts.inflation;
}

GainFn estimate_kappa(const Plant& plant, const Reference& ref, const SatParams& sat, int which,
                      const std::vector<double>& radius_grid, const KappaOptions& opts) {
  if (radius_grid.empty()) throw ParameterError("estimate_kappa: empty radius grid");
  for (std::size_t i = 0; i < radius_grid.size(); ++i) {
    if (!(radius_grid[i] > 0.0) || (i > 0 && !(radius_grid[i] > radius_grid[i - 1]))) {
      throw ParameterError("estimate_kappa: radius grid must be positive and increasing");
    }
  }
  if ((which == 2 || which == 4) && !opts.varsigma) throw ParameterError("estimate_kappa: varsigma required");
  sat.validate();
  KappaSampler ks(plant, ref, sat, opts);

  std::vector<double> radii{0.0};
  radii.insert(radii.end(), radius_grid.begin(), radius_grid.end());
  std::vector<double> values(radii.size(), 0.0);
  Vec row_sup = Vec::Zero(plant.q);
  double star = 0.0;
  if (which == 3 || which == 4) {
    KappaOptions raw = opts;
    raw.inflation = 1.0;
    star = estimate_kappa_star(plant, ref, which, raw);
  }

  for (std::size_t k = 0; k < radii.size(); ++k) {
    if (k == 0 && which != 1) continue;  // κ2(0) = κ3(0) = κ4(0) = 0
    Halton h(ks.dims(), opts.seed);
    double best = 0.0;
    Vec rows;
    for (std::size_t i = 0; i < opts.samples; ++i) {
      const auto& u = h.next();
      const Vec th = ks.theta(u.data());
      const Vec xr = ks.xr(u.data() + ks.dim_theta);
      const Vec e = ball_point(u.data() + ks.dim_theta + ks.dim_ref, plant.n, radii[k]);
      const double v = quantity(plant, opts, which, th, xr, e, &rows);
      if (which == 2) row_sup = row_sup.cwiseMax(rows);
      else best = std::max(best, v);
    }
    double val = which == 2 ? row_sup.sum() : best;
    if (which == 3 || which == 4) val = std::max(0.0, val - star);
    if (!std::isfinite(val)) throw NumericError("estimate_kappa: non-finite supremum");
    values[k] = val;
  }
  for (std::size_t k = 1; k < values.size(); ++k) values[k] = std::max(values[k], values[k - 1]);
  const bool k_class = which != 1;
  for (std::size_t k = 0; k < values.size(); ++k) {
    values[k] *= opts.inflation;
    if (k_class) values[k] += opts.strict_slope * radii[k];
  }
  static const char* names[] = {"", "kappa1", "kappa2", "kappa3", "kappa4"};
  return piecewise_linear(k_class ? GainFn::Tag::K : GainFn::Tag::SN, std::move(radii), std::move(values),
                          names[which]);
}

BoundFns estimate_bounds(const Plant& plant, const Reference& ref, const SatParams& sat,
                         const std::vector<double>& radius_grid, const KappaOptions& opts) {
  BoundFns b;
  b.kappa1 = estimate_kappa(plant, ref, sat, 1, radius_grid, opts);
  b.kappa2 = estimate_kappa(plant, ref, sat, 2, radius_grid, opts);
  b.kappa3 = estimate_kappa(plant, ref, sat, 3, radius_grid, opts);
  b.kappa4 = estimate_kappa(plant, ref, sat, 4, radius_grid, opts);
  b.kappa3_star = estimate_kappa_star(plant, ref, 3, opts);
  b.kappa4_star = estimate_kappa_star(plant, ref, 4, opts);
  return b;
}

}  // namespace iiadapt
