#include "iiadapt/integrator.hpp"

#include "iiadapt/errors.hpp"

#include <algorithm>
#include <cmath>

namespace iiadapt {

void IntegratorSpec::validate() const {
  if (method == Method::RK4 && !(step > 0.0)) throw ParameterError("integrator: step must be positive");
  if (method == Method::RK45 && !(rtol > 0.0 && atol > 0.0)) throw ParameterError("integrator: tolerances must be positive");
  if (!(log_interval > 0.0)) throw ParameterError("integrator: log interval must be positive");
}

void rk4_step(const Rhs& rhs, double t, double h, Vec& z, Vec& k1, Vec& k2, Vec& k3, Vec& k4, Vec& tmp) {
  rhs(t, z, k1);
  tmp = z + 0.5 * h * k1;
  rhs(t + 0.5 * h, tmp, k2);
  tmp = z + 0.5 * h * k2;
  rhs(t + 0.5 * h, tmp, k3);
  tmp = z + h * k3;
  rhs(t + h, tmp, k4);
  z += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

namespace {

bool healthy(const Vec& z, double limit) { return z.allFinite() && z.lpNorm<Eigen::Infinity>() < limit; }

RawTrajectory run_rk4(const Rhs& rhs, const Vec& z0, double t0, double T, const IntegratorSpec& spec) {
  RawTrajectory out;
  const long n = std::max(1L, std::lround((T - t0) / spec.step));
  const double h = (T - t0) / static_cast<double>(n);
  const long every = std::max(1L, std::lround(spec.log_interval / h));
  Vec z = z0, k1(z0.size()), k2(z0.size()), k3(z0.size()), k4(z0.size()), tmp(z0.size());
  out.t.push_back(t0);
  out.z.push_back(z);
  for (long i = 0; i < n; ++i) {
    const double t = t0 + h * static_cast<double>(i);
    rk4_step(rhs, t, h, z, k1, k2, k3, k4, tmp);
    ++out.steps;
    if (!healthy(z, spec.blowup_norm)) {
      out.blowup = true;
      out.message = "non-finite or unbounded state at t=" + std::to_string(t + h);
      return out;
    }
    if ((i + 1) % every == 0 || i + 1 == n) {
      out.t.push_back(t0 + h * static_cast<double>(i + 1));
      out.z.push_back(z);
    }
  }
  return out;
}

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192, b5 = -2187.0 / 6784, b6 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;

RawTrajectory run_rk45(const Rhs& rhs, const Vec& z0, double t0, double T, const IntegratorSpec& spec) {
  RawTrajectory out;
  const Eigen::Index n = z0.size();
  Vec z = z0, k1(n), k2(n), k3(n), k4(n), k5(n), k6(n), k7(n), tmp(n), z5(n), err(n);
  out.t.push_back(t0);
  out.z.push_back(z);
  double t = t0;
  double h = std::min(spec.max_step, 1e-4);
  double err_old = 1e-4;
  constexpr double beta = 0.04, alpha = 0.2 - 0.75 * beta;
  rhs(t, z, k1);
  long log_index = 1;
  while (t < T) {
    const double next_log = std::min(T, t0 + spec.log_interval * static_cast<double>(log_index));
    bool hit_log = false;
    double hs = h;
    if (t + hs >= next_log) {
      hs = next_log - t;
      hit_log = true;
    }
    tmp = z + hs * a21 * k1;
    rhs(t + c2 * hs, tmp, k2);
    tmp = z + hs * (a31 * k1 + a32 * k2);
    rhs(t + c3 * hs, tmp, k3);
    tmp = z + hs * (a41 * k1 + a42 * k2 + a43 * k3);
    rhs(t + c4 * hs, tmp, k4);
    tmp = z + hs * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4);
    rhs(t + c5 * hs, tmp, k5);
    tmp = z + hs * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    rhs(t + hs, tmp, k6);
    z5 = z + hs * (b1 * k1 + b3 * k3 + b4 * k4 + b5 * k5 + b6 * k6);
    rhs(t + hs, z5, k7);
    err = hs * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7);
    double en = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
      const double sc = spec.atol + spec.rtol * std::max(std::abs(z[i]), std::abs(z5[i]));
      en += (err[i] / sc) * (err[i] / sc);
    }
    en = std::sqrt(en / static_cast<double>(n));
    if (!std::isfinite(en)) en = 1e10;
    if (en <= 1.0) {
      t = hit_log ? next_log : t + hs;
      z = z5;
      k1 = k7;
      ++out.steps;
      if (!healthy(z, spec.blowup_norm)) {
        out.blowup = true;
        out.message = "non-finite or unbounded state at t=" + std::to_string(t);
        return out;
      }
      if (hit_log) {
        out.t.push_back(t);
        out.z.push_back(z);
        ++log_index;
      }
      const double fac = 0.9 * std::pow(std::max(en, 1e-10), -alpha) * std::pow(err_old, beta);
      err_old = std::max(en, 1e-4);
      const double grow = std::clamp(fac, 0.2, 5.0);
      // Steps shortened to land on a log time do not set the next step size.
      h = std::min(spec.max_step, (hit_log ? std::max(h, hs) : hs) * grow);
    } else {
      h = hs * std::max(0.2, 0.9 * std::pow(en, -alpha));
    }
    if (h < spec.min_step) {
      out.blowup = true;
      out.message = "step size underflow at t=" + std::to_string(t);
      return out;
    }
  }
  return out;
}

}  // namespace

RawTrajectory integrate(const Rhs& rhs, const Vec& z0, double t0, double T, const IntegratorSpec& spec) {
  spec.validate();
  if (!(T > t0)) throw ParameterError("integrate: T must exceed t0");
  Vec dz(z0.size());
  rhs(t0, z0, dz);
  if (!z0.allFinite() || !dz.allFinite()) throw NumericError("integrate: right-hand side not finite at the initial point");
  return spec.method == IntegratorSpec::Method::RK4 ? run_rk4(rhs, z0, t0, T, spec) : run_rk45(rhs, z0, t0, T, spec);
}

}  // namespace iiadapt
