#pragma once

#include <stdexcept>
#include <string>

namespace gldual {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Two fields (or a field and a parameter set) live on different grids.
class GridMismatch : public Error {
 public:
  using Error::Error;
};

/// Neumann Poisson problem whose right-hand side has nonzero mean.
class NonSolvable : public Error {
 public:
  using Error::Error;
};

/// Operation requires the opposite boundary regime (or a missing/extra source).
class RegimeMismatch : public Error {
 public:
  using Error::Error;
};

/// Dirichlet field with a nonzero boundary value.
class BoundaryViolation : public Error {
 public:
  using Error::Error;
};

/// Matrix handed to a symmetric eigensolver is not symmetric.
class NonSymmetric : public Error {
 public:
  using Error::Error;
};

/// A functional could not be evaluated at a finite-difference probe point.
class EvaluationFailure : public Error {
 public:
  using Error::Error;
};

/// Domain errors: the point is outside the set where a functional is finite.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// K = -2 v0* + eps (or 2 v0* + K) is not positive at `node`.
class DenominatorNonPositive : public DomainError {
 public:
  DenominatorNonPositive(int node, double value)
      : DomainError("denominator non-positive at node " + std::to_string(node) +
                    " (value " + std::to_string(value) + ")"),
        node_(node),
        value_(value) {}

  int node() const noexcept { return node_; }
  double value() const noexcept { return value_; }

 private:
  int node_;
  double value_;
};

/// The supremum defining a conjugate is +infinity (2 v0* + K <= 0 somewhere).
class SupNotAttained : public DomainError {
 public:
  SupNotAttained(int node, double value)
      : DomainError("supremum not attained: 2 v0* + K = " + std::to_string(value) +
                    " at node " + std::to_string(node)),
        node_(node) {}

  int node() const noexcept { return node_; }

 private:
  int node_;
};

}  // namespace gldual
