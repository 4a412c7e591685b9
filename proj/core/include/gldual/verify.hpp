#pragma once

// Finite-difference oracles, symmetric eigenvalue extraction and the
// verification report model shared by both duality checkers.

#include <cstdint>
#include <functional>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "gldual/field.hpp"

namespace gldual {

using Functional = std::function<double(const Eigen::VectorXd&)>;

struct StepPolicy {
  /// Central step h = relative * (1 + |x_i|).
  double relative = 1e-6;
  /// Entries whose h and h/2 estimates differ by more than
  /// richardson_tol * |g| + abs_floor are flagged.
  double richardson_tol = 1e-3;
  double abs_floor = 1e-7;
  /// Domain errors at a probe shrink the step by 10, at most this many times.
  int max_shrinks = 10;
};

struct FdGradient {
  Eigen::VectorXd gradient;
  /// (4 g(h/2) - g(h)) / 3, fourth-order accurate.
  Eigen::VectorXd extrapolated;
  std::vector<int> flagged;
};

/// Central-difference gradient with a Richardson consistency check.
/// Throws EvaluationFailure when a coordinate cannot be probed.
FdGradient fd_gradient(const Functional& f, const Eigen::VectorXd& x, const StepPolicy& policy = {});

/// Largest problem fd_hessian accepts.
inline constexpr int kMaxHessianDofs = 50;

/// Symmetrized central-difference Hessian, step relative_step * (1 + |x_i|).
Eigen::MatrixXd fd_hessian(const Functional& f, const Eigen::VectorXd& x, double relative_step = 1e-4);

enum class Extreme { Min, Max };

/// Dense self-adjoint eigensolve. NonSymmetric if the relative symmetry
/// defect exceeds 1e-10.
double lambda_extreme(const Eigen::MatrixXd& a, Extreme which);
double lambda_extreme(const LinOp& a, Extreme which);

/// Independent cross-check for lambda_extreme: shifted power iteration.
double power_iteration_extreme(const Eigen::MatrixXd& a, Extreme which, int max_iter = 200000,
                               double tol = 1e-13);

/// Smallest eigenvalue of A^T A, i.e. the squared smallest singular value.
double min_singular_squared(const Eigen::MatrixXd& a);

/// Maximum of |a-b| / max(|b|, tiny) over entries, Frobenius-normalised.
double relative_error(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);

/// Packs the free-node values of several fields into one DOF vector.
Eigen::VectorXd pack_free(const std::vector<const ScalarField*>& fields);
/// Inverse of pack_free; non-free entries are copied from `templates`.
std::vector<ScalarField> unpack_free(const Eigen::VectorXd& x,
                                     const std::vector<const ScalarField*>& templates);
/// Quadrature weights of the packed DOF vector.
Eigen::VectorXd packed_weights(const GridSpec& g, int nfields);

// ---------------------------------------------------------------------------
// Report model

enum class Status { Pass, Fail, NotAsserted, Info };

const char* to_string(Status s);

using Value = std::variant<std::string, double, std::int64_t, bool>;

struct Check {
  std::string name;
  /// The statement this entry instantiates, written out.
  std::string clause;
  double measured = 0.0;
  double threshold = 0.0;
  Status status = Status::Info;
  std::string note;
};

struct VerificationReport {
  std::string command;
  std::vector<std::pair<std::string, Value>> instance;
  std::vector<Check> hypotheses;
  std::vector<Check> conclusions;
  std::vector<std::pair<std::string, double>> timings;

  void describe(std::string key, Value v) { instance.emplace_back(std::move(key), std::move(v)); }
  void hypothesis(Check c) { hypotheses.push_back(std::move(c)); }
  void conclusion(Check c) { conclusions.push_back(std::move(c)); }

  bool all_asserted_passed() const;
  /// JSON lines: one instance record, then one record per hypothesis and
  /// conclusion, then (optionally) timings.
  std::string to_jsonl(bool with_timings = false) const;
};

/// Status for a measured <= threshold check, downgraded when not asserted.
Status bound_status(double measured, double threshold, bool asserted);

}  // namespace gldual
