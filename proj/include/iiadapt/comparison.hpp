#pragma once

#include <Eigen/Dense>

#include <functional>
#include <limits>
#include <memory>
#include <string>
#include <vector>

namespace iiadapt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct SatParams {
  double l_s = 1.0;
  double eps_s = 0.5;
  double l_theta = 0.5;

  void validate() const;
  double bound() const { return l_s + 0.5 * eps_s; }
};

double sat(double s, const SatParams& p);
double sat_derivative(double s, const SatParams& p);
Vec satv(const Vec& v, const SatParams& p);
Vec satv_derivative(const Vec& v, const SatParams& p);

double dz(double s, double l_theta);
double dz_derivative(double s, double l_theta);
Vec dzv(const Vec& v, double l_theta);
Vec dzv_derivative(const Vec& v, double l_theta);

// Scalar comparison function with a declared class.
class GainFn {
 public:
  enum class Tag { K, Kinf, SN, PD };
  using Fn = std::function<double(double)>;

  // Identity (class K-infinity).
  GainFn();

  // Validates the declared class by sampling; throws ClassError on failure.
  static GainFn make(Tag tag, Fn fn, double sup_limit = kInf, std::string name = {});
  // Trusted construction, used for compositions of already-validated functions.
  static GainFn unchecked(Tag tag, Fn fn, double sup_limit = kInf, std::string name = {});

  static GainFn identity();
  static GainFn linear(double c);
  static GainFn zero();

  double operator()(double s) const;
  Tag tag() const { return tag_; }
  double sup_limit() const { return sup_limit_; }
  const std::string& name() const { return name_; }

 private:
  GainFn(Tag tag, std::shared_ptr<const Fn> fn, double sup_limit, std::string name);

  Tag tag_;
  std::shared_ptr<const Fn> fn_;
  double sup_limit_;
  std::string name_;
};

const char* to_string(GainFn::Tag tag);

// Sampling check of the class invariants. Returns an empty string on success.
std::string check_gain_class(GainFn::Tag tag, const GainFn::Fn& fn, double sup_limit);

// chain[0] ∘ chain[1] ∘ ... ∘ chain[k-1]; the last element is applied first.
GainFn compose(const std::vector<GainFn>& chain);

// sup{r >= 0 : g(r) <= s}; +inf when s reaches the limit of g.
double ominus(const GainFn& g, double s);
// Inverse of a K-infinity function.
double inverse(const GainFn& g, double s);
GainFn inverse_fn(const GainFn& g);
GainFn ominus_fn(const GainFn& g);

GainFn scale(const GainFn& g, double c);
GainFn sum(const GainFn& a, const GainFn& b);
GainFn product(const GainFn& a, const GainFn& b);
GainFn square(const GainFn& g);

// Monotone piecewise-linear interpolant through (radii[i], values[i]).
// radii must be increasing and start at 0; beyond the last node the last slope is kept.
GainFn piecewise_linear(GainFn::Tag tag, std::vector<double> radii, std::vector<double> values,
                        std::string name = {});

struct GammaSParams {
  double L0 = 1.0;
  double margin = 0.1;

  static GammaSParams from_sat(const SatParams& p, int q, double margin = 0.1);
  double l_gamma() const { return L0 + margin; }
};

double gamma_s(double s, const GammaSParams& g);
GainFn gamma_s_fn(const GammaSParams& g);

struct CoverReport {
  double max_violation = -kInf;
  std::size_t pairs = 0;
  std::size_t violations = 0;
  bool pass = false;
};

// Checks |satv(θ+θ̃)−θ| ≤ γ_s(|θ̃|) on every (θ, θ̃) pair of the two sample sets.
CoverReport verify_cover_bound(const GammaSParams& g, const SatParams& p,
                               const std::vector<Vec>& theta_samples,
                               const std::vector<Vec>& tilde_samples);

}  // namespace iiadapt
