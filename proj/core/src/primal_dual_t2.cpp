#include "gldual/primal_dual_t2.hpp"

#include <cmath>

#include "internal.hpp"

namespace gldual {

namespace {

void require_dirichlet(const GLParams& p, const GridSpec& g) {
  p.validate(g);
  if (p.regime() != Boundary::Dirichlet)
    throw RegimeMismatch("the primal-dual functional J3 needs the Dirichlet regime with a source");
}

Functional packed(const GLParams& p, const DualPointT2& d) {
  return [p, d](const Eigen::VectorXd& x) {
    auto fields = unpack_free(x, {&d.v0s, &d.uhat});
    return eval_J3(p, DualPointT2{std::move(fields[0]), std::move(fields[1])});
  };
}

}  // namespace

double eval_J3(const GLParams& p, const DualPointT2& d) {
  require_same_grid(d.v0s.grid(), d.uhat.grid());
  const GridSpec& g = d.uhat.grid();
  require_dirichlet(p, g);

  const Eigen::VectorXd mask = g.free_mask();
  const Eigen::VectorXd u = d.uhat.values().cwiseProduct(mask);
  const Eigen::VectorXd& v0 = d.v0s.values();
  const Eigen::VectorXd wf = detail::free_weights(g);
  const Eigen::VectorXd w = g.weights();
  const Eigen::VectorXd coef = (-2.0 * v0).array() + p.epsilon;

  const Eigen::VectorXd r = (p.gamma * laplacian(g).apply(u) + coef.cwiseProduct(u) +
                             p.masked_source(g).values())
                                .cwiseProduct(mask);

  const double t1 = -0.5 * p.gamma * dirichlet_energy(d.uhat.with_values(u));
  const double t2 = 0.5 * wf.dot(coef.cwiseProduct(u.cwiseAbs2()));
  const double t3 = -0.5 / p.epsilon * wf.dot(r.cwiseAbs2());
  const double t4 = -0.5 / p.alpha * w.dot(v0.cwiseAbs2());
  const double t5 = -p.beta * w.dot(v0);
  return t1 + t2 + t3 + t4 + t5;
}

DualPointT2 construct_dual_t2(const GLParams& p, const ScalarField& u0) {
  const GridSpec& g = u0.grid();
  require_dirichlet(p, g);
  for (int k = 0; k < g.size(); ++k)
    if (g.on_boundary(k) && u0[k] != 0.0)
      throw BoundaryViolation("u0 is nonzero on boundary node " + std::to_string(k));
  const Eigen::ArrayXd u = u0.values().array();
  return {u0.with_values((p.alpha * (u.square() - p.beta)).matrix()), u0};
}

ScalarField u1_field(const GLParams& p, const ScalarField& u0) {
  const GridSpec& g = u0.grid();
  require_dirichlet(p, g);
  const Eigen::ArrayXd u = u0.values().array();
  const Eigen::ArrayXd v0 = p.alpha * (u.square() - p.beta);
  Eigen::VectorXd u1 = p.gamma * laplacian(g).apply(u0.values());
  u1.array() += (-2.0 * v0 + p.epsilon) * u;
  u1 += p.masked_source(g).values();
  return u0.with_values(u1.cwiseProduct(g.free_mask()) / p.epsilon);
}

double u1_identity_residual(const GLParams& p, const ScalarField& u0) {
  const Eigen::VectorXd diff =
      (u0.values() - u1_field(p, u0).values()).cwiseProduct(u0.grid().free_mask());
  return diff.lpNorm<Eigen::Infinity>();
}

HypothesisReportT2 check_hypotheses_t2(const GLParams& p, const ScalarField& u0) {
  const GridSpec& g = u0.grid();
  require_dirichlet(p, g);
  const double eps = p.epsilon;
  const Eigen::VectorXd uf = detail::free_values(u0);
  const Eigen::VectorXd ff = detail::free_values(p.masked_source(g));
  const Eigen::VectorXd shift = (2.0 * p.alpha * (uf.array().square() - p.beta) - eps).matrix();

  const LinOp lap = laplacian(g);
  const Eigen::MatrixXd neg_lap = -lap.symmetrized();
  const Eigen::MatrixXd A = neg_lap + Eigen::MatrixXd(shift.asDiagonal());
  const Eigen::MatrixXd Ag = p.gamma * neg_lap + Eigen::MatrixXd(shift.asDiagonal());
  const double lam = lambda_extreme(Eigen::MatrixXd(A * A), Extreme::Min);
  const double lam_g = lambda_extreme(Eigen::MatrixXd(Ag * Ag), Extreme::Min);

  HypothesisReportT2 rep;
  rep.op.margin = lam - std::sqrt(eps);
  rep.op.ok = rep.op.margin > 0.0;
  rep.op_gamma_margin = lam_g - std::sqrt(eps);
  rep.sign.margin = uf.cwiseProduct(ff).minCoeff();
  rep.sign.ok = rep.sign.margin >= -1e-14;
  return rep;
}

double verify_stationarity_t2(const GLParams& p, const DualPointT2& d) {
  const Eigen::VectorXd x = pack_free({&d.v0s, &d.uhat});
  const FdGradient fd = fd_gradient(packed(p, d), x);
  return fd.gradient.cwiseQuotient(packed_weights(d.uhat.grid(), 2)).lpNorm<Eigen::Infinity>();
}

T2Blocks hessian_blocks_t2(const GLParams& p, const DualPointT2& d) {
  require_same_grid(d.v0s.grid(), d.uhat.grid());
  const GridSpec& g = d.uhat.grid();
  require_dirichlet(p, g);
  const double eps = p.epsilon;

  const Eigen::VectorXd uf = detail::free_values(d.uhat);
  const Eigen::VectorXd vf = detail::free_values(d.v0s);
  const Eigen::VectorXd ff = detail::free_values(p.masked_source(g));
  const Eigen::MatrixXd lap = detail::free_laplacian(g);
  const Eigen::Index m = uf.size();

  const Eigen::VectorXd shift = (2.0 * vf).array() - eps;  // 2 v0 - eps
  // B u + f is the residual inside the squared term; B is symmetric on
  // interior nodes because their quadrature weights are equal.
  const Eigen::MatrixXd B = p.gamma * lap - Eigen::MatrixXd(shift.asDiagonal());
  const Eigen::VectorXd r = B * uf + ff;

  T2Blocks b;
  b.uu = p.gamma * lap - Eigen::MatrixXd(shift.asDiagonal()) - B * B / eps;
  b.vv = Eigen::MatrixXd((-(1.0 / p.alpha) - 4.0 * uf.array().square() / eps).matrix().asDiagonal());
  b.vu = 2.0 / eps * (uf.asDiagonal() * B + Eigen::MatrixXd(r.asDiagonal())) -
         Eigen::MatrixXd((2.0 * uf).asDiagonal());

  b.uu_reduced = -(B + B * B / eps);
  b.vv_reduced = b.vv;
  b.vu_reduced = Eigen::MatrixXd((4.0 * uf - 2.0 * ff / eps).asDiagonal());

  Eigen::MatrixXd full(2 * m, 2 * m);
  full << b.vv, b.vu, b.vu.transpose(), b.uu;
  b.lambda_max = lambda_extreme(Eigen::MatrixXd(0.5 * (full + full.transpose())), Extreme::Max);

  if (2 * m <= kMaxHessianDofs) {
    const Eigen::VectorXd x = pack_free({&d.v0s, &d.uhat});
    Eigen::MatrixXd h = fd_hessian(packed(p, d), x);
    const Eigen::VectorXd pw = packed_weights(g, 2);
    const Eigen::VectorXd s = pw.cwiseSqrt().cwiseInverse();
    b.fd_lambda_max = lambda_extreme(Eigen::MatrixXd(s.asDiagonal() * h * s.asDiagonal()), Extreme::Max);
    h = pw.cwiseInverse().asDiagonal() * h;
    b.fd_vv = h.topLeftCorner(m, m);
    b.fd_vu = h.topRightCorner(m, m);
    b.fd_uu = h.bottomRightCorner(m, m);
    b.err_uu = relative_error(b.uu, b.fd_uu);
    b.err_vu = relative_error(b.vu, b.fd_vu);
    b.err_vv = relative_error(b.vv, b.fd_vv);
    b.err_uu_reduced = relative_error(b.uu_reduced, b.fd_uu);
    b.err_vu_reduced = relative_error(b.vu_reduced, b.fd_vu);
    b.err_vv_reduced = relative_error(b.vv_reduced, b.fd_vv);
  }
  if (m == 1) {
    b.scalar_det = b.uu(0, 0) * b.vv(0, 0) - b.vu(0, 0) * b.vu(0, 0);
    b.scalar_det_reduced = b.uu_reduced(0, 0) * b.vv_reduced(0, 0) - b.vu_reduced(0, 0) * b.vu_reduced(0, 0);
  }
  return b;
}

double default_radius(const DualPointT2& d) {
  return 1e-3 * (1.0 + pack_free({&d.v0s, &d.uhat}).norm());
}

LocalMaxResult verify_local_max_t2(const GLParams& p, const DualPointT2& d, double r, int samples,
                                   std::uint64_t seed) {
  const Eigen::VectorXd x = pack_free({&d.v0s, &d.uhat});
  const Functional f = packed(p, d);
  LocalMaxResult res = detail::sample_local_max(f, x, r, samples, seed);
  res.hessian_lambda_max = detail::fd_lambda_max(f, x, packed_weights(d.uhat.grid(), 2));
  return res;
}

PenalizedMinResult verify_penalized_min_t2(const GLParams& p, const ScalarField& u0,
                                           const DualPointT2& d, int samples, std::uint64_t seed) {
  return verify_penalized_min(p, u0, K_of(d.v0s, p.epsilon), samples, seed);
}

}  // namespace gldual
