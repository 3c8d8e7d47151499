#pragma once

#include <stdexcept>
#include <string>

namespace tlreg {

/// Dimension or conformability mismatch between inputs.
struct ShapeError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A matrix required to be symmetric positive definite failed its factorization.
struct NotSpdError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Symmetric-input contract violated beyond tolerance.
struct SymmetryError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct InvalidParameterError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// A formula was requested outside the parameter regime it is valid in.
struct ScopeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// d sits in the band where the source-solution covariance is infinite.
struct InfiniteBandError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct JointCovarianceSingularError : std::runtime_error {
  JointCovarianceSingularError(const std::string& what, double smallest)
      : std::runtime_error(what), smallest_eigenvalue(smallest) {}
  double smallest_eigenvalue;
};

struct FixedPointError : std::runtime_error {
  FixedPointError(const std::string& what, double res, int iters)
      : std::runtime_error(what), residual(res), iterations(iters) {}
  double residual;
  int iterations;
};

/// Misspecification reduction requested outside its assumptions.
struct ReductionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

}  // namespace tlreg
