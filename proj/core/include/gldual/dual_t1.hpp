#pragma once

// Dual principle for the Neumann double-well problem.
//
// From a primal critical point u0 the dual point is
//   v0* = alpha (u0^2 - beta),   z* = K u0,   K = -2 v0* + eps,
// and the dual functional is
//   Jt(v0*, z*) = 1/2 int z*^2/K - gamma/2 int |grad(z*/K)|^2
//               - 1/(2 eps) int (L z* + z*)^2 - 1/(2 alpha) int v0*^2 - beta int v0*
// with L(v0*) z* = gamma Lap(z*/K).
//
// The machinery also runs on Dirichlet grids with a zero source, which is how
// single-interior-node surrogates are built.

#include <cstdint>
#include <limits>
#include <optional>

#include "gldual/primal.hpp"

namespace gldual {

struct DualPointT1 {
  ScalarField v0s;
  ScalarField zs;
};

/// Nodewise -2 v0* + eps.
ScalarField K_of(const ScalarField& v0s, double eps);

DualPointT1 construct_dual(const GLParams& p, const ScalarField& u0);

/// gamma Lap(z*/K). DenominatorNonPositive if K <= 0 at a free node.
ScalarField L_apply(const GLParams& p, const ScalarField& v0s, const ScalarField& zs);

/// The eliminated multiplier v1^ = gamma Lap(z*/K) + z*.
ScalarField eliminated_multiplier(const GLParams& p, const ScalarField& v0s, const ScalarField& zs);

double eval_Jtilde(const GLParams& p, const DualPointT1& d);
/// Penalty term J1*(v0*, z*) = 1/(2 eps) int ((L + I) z*)^2.
double eval_J1(const GLParams& p, const DualPointT1& d);

struct Margin {
  bool ok = false;
  double margin = 0.0;
};

struct HypothesisReportT1 {
  /// min(K) - eps^{1/8}.
  Margin in_B;
  /// lambda_min((L+I)^*(L+I)) - eps^{1/4}.
  Margin op1;
  /// lambda_min(M^* M) - eps^{1/4}, M = gamma Lap diag(2 z*/K^2).
  Margin op2;
  /// min_i (A_ii)^2 - eps^{1/4} for A = L+I and A = M (pointwise reading).
  double op1_nodewise = 0.0;
  double op2_nodewise = 0.0;

  bool all_ok() const { return in_B.ok && op1.ok && op2.ok; }
};

HypothesisReportT1 check_hypotheses_t1(const GLParams& p, const DualPointT1& d);

/// Sup norm of the extrapolated finite-difference L2 gradient of Jt over free nodes.
double verify_stationarity_t1(const GLParams& p, const DualPointT1& d);

struct LocalMaxResult {
  bool ok = true;
  /// Largest observed J(d + delta) - J(d); negative when every sample decreased.
  double worst_increase = -std::numeric_limits<double>::infinity();
  double radius = 0.0;
  int shrinks = 0;
  int samples = 0;
  /// Largest eigenvalue of the finite-difference Hessian (small grids only).
  std::optional<double> hessian_lambda_max;
};

/// Default ball radius 1e-3 (1 + |d|).
double default_radius(const DualPointT1& d);

LocalMaxResult verify_local_max_t1(const GLParams& p, const DualPointT1& d, double r, int samples,
                                   std::uint64_t seed = 1);

struct PenalizedMinResult {
  bool ok = true;
  /// Smallest observed J(u) + 1/2 int K (u-u0)^2 - J(u0).
  double worst_margin = std::numeric_limits<double>::infinity();
  int samples = 0;
  double min_K = 0.0;
};

/// Samples random fields at scales 0.1, 1, 10 times (|u0|_inf + 1) and checks
/// J(u) + 1/2 int K (u-u0)^2 >= J(u0) - 1e-9 (1 + |J(u0)|).
PenalizedMinResult verify_penalized_min(const GLParams& p, const ScalarField& u0,
                                        const ScalarField& K, int samples, std::uint64_t seed = 1);
PenalizedMinResult verify_penalized_min(const GLParams& p, const ScalarField& u0,
                                        const DualPointT1& d, int samples, std::uint64_t seed = 1);

struct J1Blocks {
  // Density blocks (rows scaled by inverse quadrature weights) on free nodes.
  Eigen::MatrixXd zz, zv, vv;
  /// Reduced cross block u0 dL/dv0, without the (L+I)^* M / eps term.
  Eigen::MatrixXd zv_reduced;
  /// Finite-difference counterparts; empty beyond kMaxHessianDofs.
  Eigen::MatrixXd fd_zz, fd_zv, fd_vv;
  double err_zz = 0.0, err_zv = 0.0, err_vv = 0.0;
  double err_zv_reduced = 0.0;
  /// 2x2 determinants on a single free node.
  std::optional<double> scalar_det;
  std::optional<double> scalar_det_reduced;
};

J1Blocks hessian_blocks_J1(const GLParams& p, const DualPointT1& d);

namespace detail {
void require_no_source(const GLParams& p, const GridSpec& g);
Eigen::VectorXd free_weights(const GridSpec& g);
}  // namespace detail

}  // namespace gldual
