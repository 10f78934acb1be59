#pragma once

#include "iiadapt/comparison.hpp"

#include <cstdint>
#include <random>
#include <vector>

namespace iiadapt {

// Halton sequence with a seeded Cranley-Patterson rotation.
class Halton {
 public:
  Halton(int dim, std::uint64_t seed);
  // Next point in [0,1)^dim.
  const std::vector<double>& next();
  int dim() const { return dim_; }

 private:
  int dim_;
  std::uint64_t index_ = 0;
  std::vector<double> shift_;
  std::vector<double> point_;
};

// Number of unit coordinates consumed by ball_point for an n-ball.
int ball_dims(int n);
// Maps ball_dims(n) unit coordinates to a point of the closed n-ball of radius R.
Vec ball_point(const double* u, int n, double R);
// Maps n unit coordinates to the box [lo, hi].
Vec box_point(const double* u, const Vec& lo, const Vec& hi);

// Deterministic product sampler over a list of balls.
class BallSampler {
 public:
  BallSampler(std::vector<int> dims, std::uint64_t seed);
  // One point per ball, radii given per call.
  std::vector<Vec> next(const std::vector<double>& radii);

 private:
  std::vector<int> dims_;
  Halton halton_;
};

std::vector<Vec> random_ball_points(int n, double R, std::size_t count, std::mt19937_64& rng);

}  // namespace iiadapt
