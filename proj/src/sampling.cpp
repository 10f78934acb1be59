#include "iiadapt/sampling.hpp"

#include "iiadapt/errors.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

namespace iiadapt {

namespace {

constexpr int kPrimes[] = {2,  3,  5,  7,  11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53,
                           59, 61, 67, 71, 73, 79, 83, 89, 97, 101, 103, 107, 109, 113, 127, 131};

double radical_inverse(std::uint64_t i, int base) {
  double inv = 1.0 / base, f = inv, r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace

Halton::Halton(int dim, std::uint64_t seed) : dim_(dim), shift_(dim), point_(dim) {
  if (dim < 1 || dim > static_cast<int>(std::size(kPrimes))) throw ParameterError("Halton: unsupported dimension");
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  for (double& s : shift_) s = uni(rng);
}

const std::vector<double>& Halton::next() {
  ++index_;
  for (int d = 0; d < dim_; ++d) {
    double v = radical_inverse(index_, kPrimes[d]) + shift_[d];
    point_[d] = v - std::floor(v);
  }
  return point_;
}

int ball_dims(int n) { return n == 1 ? 1 : 2 * ((n + 1) / 2) + 1; }

Vec ball_point(const double* u, int n, double R) {
  Vec x(n);
  if (n == 1) {
    x[0] = R * (2.0 * u[0] - 1.0);
    return x;
  }
  const int pairs = (n + 1) / 2;
  for (int k = 0; k < pairs; ++k) {
    const double u1 = std::max(u[2 * k], 1e-300);
    const double u2 = u[2 * k + 1];
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    x[2 * k] = rad * std::cos(a);
    if (2 * k + 1 < n) x[2 * k + 1] = rad * std::sin(a);
  }
  const double nrm = x.norm();
  if (nrm == 0.0) return Vec::Zero(n);
  const double r = R * std::pow(u[2 * pairs], 1.0 / n);
  return x * (r / nrm);
}

Vec box_point(const double* u, const Vec& lo, const Vec& hi) {
  Vec x(lo.size());
  for (Eigen::Index i = 0; i < lo.size(); ++i) x[i] = lo[i] + (hi[i] - lo[i]) * u[i];
  return x;
}

BallSampler::BallSampler(std::vector<int> dims, std::uint64_t seed)
    : dims_(std::move(dims)),
      halton_(std::accumulate(dims_.begin(), dims_.end(), 0, [](int a, int n) { return a + ball_dims(n); }),
              seed) {}

std::vector<Vec> BallSampler::next(const std::vector<double>& radii) {
  const auto& u = halton_.next();
  std::vector<Vec> out;
  out.reserve(dims_.size());
  int off = 0;
  for (std::size_t k = 0; k < dims_.size(); ++k) {
    out.push_back(ball_point(u.data() + off, dims_[k], radii[k]));
    off += ball_dims(dims_[k]);
  }
  return out;
}

std::vector<Vec> random_ball_points(int n, double R, std::size_t count, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  std::vector<double> u(ball_dims(n));
  std::vector<Vec> out;
  out.reserve(count);
  for (std::size_t i = 0; i < count; ++i) {
    for (double& v : u) v = uni(rng);
    out.push_back(ball_point(u.data(), n, R));
  }
  return out;
}

}  // namespace iiadapt
