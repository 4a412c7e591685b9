#pragma once

// Primal-dual principle for the Dirichlet double-well problem with source f:
//
//   J3(v0*, u^) = -gamma/2 int |grad u^|^2 - 1/2 int (2 v0* - eps) u^2
//               - 1/(2 eps) int (gamma Lap u^ + (-2 v0* + eps) u^ + f)^2
//               - 1/(2 alpha) int v0*^2 - beta int v0*
//
// certified at (alpha (u0^2 - beta), u0) for a primal critical point u0.

#include <cstdint>
#include <optional>

#include "gldual/dual_t1.hpp"

namespace gldual {

struct DualPointT2 {
  ScalarField v0s;
  ScalarField uhat;
};

double eval_J3(const GLParams& p, const DualPointT2& d);

/// BoundaryViolation if u0 is nonzero on a boundary node.
DualPointT2 construct_dual_t2(const GLParams& p, const ScalarField& u0);

/// u1 = (gamma Lap u0 + (-2 v0~ + eps) u0 + f) / eps on free nodes.
ScalarField u1_field(const GLParams& p, const ScalarField& u0);
/// |u0 - u1|_inf, which equals |grad_J(u0)|_inf / eps.
double u1_identity_residual(const GLParams& p, const ScalarField& u0);

struct HypothesisReportT2 {
  /// lambda_min(A^2) - sqrt(eps), A = -Lap + (2 v0~ - eps) I.
  Margin op;
  /// Same with gamma on the Laplacian.
  double op_gamma_margin = 0.0;
  /// min over free nodes of f u0; passes at >= -1e-14.
  Margin sign;

  bool all_ok() const { return op.ok && sign.ok; }
};

HypothesisReportT2 check_hypotheses_t2(const GLParams& p, const ScalarField& u0);

double verify_stationarity_t2(const GLParams& p, const DualPointT2& d);

struct T2Blocks {
  // Density Hessian blocks of J3 on free nodes, exact differentiation.
  Eigen::MatrixXd uu, vu, vv;
  // Reduced forms: -(gamma Lap - (2v0-eps) + (gamma Lap - (2v0-eps))^2/eps),
  // -(1/alpha + 4 u^2/eps) and 4 u - 2 f/eps, nodewise where diagonal.
  Eigen::MatrixXd uu_reduced, vu_reduced, vv_reduced;
  Eigen::MatrixXd fd_uu, fd_vu, fd_vv;
  double err_uu = 0.0, err_vu = 0.0, err_vv = 0.0;
  double err_uu_reduced = 0.0, err_vu_reduced = 0.0, err_vv_reduced = 0.0;
  /// Largest eigenvalue of the full exact Hessian (local max iff <= 0).
  double lambda_max = 0.0;
  std::optional<double> fd_lambda_max;
  /// 2x2 determinant on a single free node.
  std::optional<double> scalar_det;
  std::optional<double> scalar_det_reduced;
};

T2Blocks hessian_blocks_t2(const GLParams& p, const DualPointT2& d);

double default_radius(const DualPointT2& d);

LocalMaxResult verify_local_max_t2(const GLParams& p, const DualPointT2& d, double r, int samples,
                                   std::uint64_t seed = 1);
PenalizedMinResult verify_penalized_min_t2(const GLParams& p, const ScalarField& u0,
                                           const DualPointT2& d, int samples, std::uint64_t seed = 1);

}  // namespace gldual
