#pragma once

// The Ginzburg-Landau double-well energy
//
//   J(u) = gamma/2 int |grad u|^2 + alpha/2 int (u^2 - beta)^2 [- <u, f>]
//
// with its gradient, Hessian and a damped Newton solver for critical points.
// Neumann problems carry no source; Dirichlet problems always carry one.

#include <optional>
#include <string>
#include <vector>

#include "gldual/field.hpp"

namespace gldual {

struct GLParams {
  double gamma = 1.0;
  double alpha = 1.0;
  double beta = 1.0;
  double epsilon = 1e-3;
  std::optional<ScalarField> source;

  static GLParams neumann(double gamma, double alpha, double beta, double epsilon);
  static GLParams dirichlet(double gamma, double alpha, double beta, double epsilon,
                            ScalarField f);

  Boundary regime() const { return source ? Boundary::Dirichlet : Boundary::Neumann; }

  /// Throws std::invalid_argument for non-positive constants or epsilon
  /// outside (0,1); RegimeMismatch if `g` disagrees with the regime or the
  /// source lives on another grid.
  void validate(const GridSpec& g) const;

  /// Source restricted to interior nodes; zero field in the Neumann regime.
  ScalarField masked_source(const GridSpec& g) const;
};

/// Copy of `p` with a different epsilon (used by sweeps).
GLParams with_epsilon(const GLParams& p, double epsilon);

double eval_J(const GLParams& p, const ScalarField& u);
/// L2 gradient -gamma Lap u + 2 alpha (u^2 - beta) u - f, zero on Dirichlet nodes.
ScalarField grad_J(const GLParams& p, const ScalarField& u);
/// -gamma Lap + diag(6 alpha u^2 - 2 alpha beta), Dirichlet rows/cols removed.
LinOp hessian_J(const GLParams& p, const ScalarField& u);

enum class SolveStatus { Converged, NoConvergence, LineSearchStalled };

const char* to_string(SolveStatus s);

struct CriticalPoint {
  ScalarField u0;
  double residual_norm = 0.0;
  int newton_iters = 0;
  SolveStatus status = SolveStatus::Converged;
  /// Times the Newton matrix failed to factor and was shifted by 1e-10 I.
  int regularizations = 0;
  /// J at every accepted iterate, starting with the initial guess.
  std::vector<double> energy_history;

  bool converged() const { return status == SolveStatus::Converged; }
};

struct NewtonOptions {
  double tol = 1e-10;
  int max_iter = 100;
  int max_halvings = 30;
};

/// Damped Newton on grad_J. Never throws on non-convergence: the best iterate
/// is returned with its status.
CriticalPoint solve_critical(const GLParams& p, const ScalarField& u_init,
                             const NewtonOptions& opts = {});

/// Source f such that the nodal field `u_star` is an exact discrete critical
/// point: f = -gamma Lap u* + 2 alpha (u*^2 - beta) u*, masked to the interior.
ScalarField manufactured_source(double gamma, double alpha, double beta,
                                const ScalarField& u_star);

}  // namespace gldual
