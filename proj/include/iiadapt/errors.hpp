#pragma once

#include <stdexcept>
#include <string>

namespace iiadapt {

// Invalid numeric parameter (sat/dz levels, gains, tolerances).
struct ParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// A function failed its declared comparison class check.
struct ClassError : std::domain_error {
  using std::domain_error::domain_error;
};

// A stated precondition of an operation does not hold.
struct PreconditionError : std::logic_error {
  using std::logic_error::logic_error;
};

// Dimension mismatch between vectors/matrices.
struct DimensionError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

// Scenario file problems (unknown keys, bad types, inconsistent variants).
struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Numerical procedure failed (non-finite values, quadrature, blow-up).
struct NumericError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace iiadapt
