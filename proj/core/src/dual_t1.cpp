#include "gldual/dual_t1.hpp"

#include <cmath>
#include <random>

#include "internal.hpp"

namespace gldual {

namespace detail {

void require_no_source(const GLParams& p, const GridSpec& g) {
  p.validate(g);
  if (p.source && p.source->values().cwiseAbs().maxCoeff() != 0.0)
    throw RegimeMismatch("the dual functional Jt takes no source term");
}

Eigen::VectorXd free_weights(const GridSpec& g) { return g.weights().cwiseProduct(g.free_mask()); }

Eigen::MatrixXd free_laplacian(const GridSpec& g) { return laplacian(g).dense_free(); }

Eigen::VectorXd free_values(const ScalarField& f) {
  const auto dofs = f.grid().free_nodes();
  Eigen::VectorXd v(static_cast<Eigen::Index>(dofs.size()));
  for (size_t a = 0; a < dofs.size(); ++a) v[a] = f[dofs[a]];
  return v;
}

LocalMaxResult sample_local_max(const Functional& f, const Eigen::VectorXd& x0, double r, int samples,
                                std::uint64_t seed) {
  if (samples < 1) throw std::invalid_argument("at least one sample is required");
  if (r < 0.0) throw std::invalid_argument("radius must be non-negative");
  LocalMaxResult res;
  res.radius = r;
  if (r == 0.0) return res;

  const double f0 = f(x0);
  const double slack = 1e-10 * (1.0 + std::abs(f0));
  const Eigen::Index n = x0.size();

  for (int attempt = 0; attempt <= 3; ++attempt) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif;
    res.ok = true;
    res.samples = 0;
    res.worst_increase = -std::numeric_limits<double>::infinity();
    for (int s = 0; s < samples; ++s) {
      Eigen::VectorXd dir(n);
      for (Eigen::Index i = 0; i < n; ++i) dir[i] = normal(rng);
      const double len = res.radius * std::pow(unif(rng), 1.0 / static_cast<double>(n));
      const Eigen::VectorXd x = x0 + len * dir.normalized();
      double fx;
      try {
        fx = f(x);
      } catch (const DomainError&) {
        continue;
      }
      ++res.samples;
      res.worst_increase = std::max(res.worst_increase, fx - f0);
      if (fx > f0 + slack) res.ok = false;
    }
    if (res.ok || attempt == 3) break;
    res.radius *= 0.1;
    ++res.shrinks;
  }
  return res;
}

std::optional<double> fd_lambda_max(const Functional& f, const Eigen::VectorXd& x0,
                                    const Eigen::VectorXd& weights) {
  if (x0.size() > kMaxHessianDofs) return std::nullopt;
  Eigen::MatrixXd h = fd_hessian(f, x0);
  const Eigen::VectorXd s = weights.cwiseSqrt().cwiseInverse();
  h = s.asDiagonal() * h * s.asDiagonal();
  return lambda_extreme(h, Extreme::Max);
}

}  // namespace detail

namespace {

// K on free nodes with the positivity guard.
Eigen::VectorXd checked_K(const ScalarField& v0s, double eps) {
  const GridSpec& g = v0s.grid();
  Eigen::VectorXd K = (-2.0 * v0s.values()).array() + eps;
  const Eigen::VectorXd mask = g.free_mask();
  for (int k = 0; k < g.size(); ++k) {
    if (mask[k] == 0.0) {
      K[k] = 1.0;  // boundary values never enter a quotient
    } else if (!(K[k] > 0.0)) {
      throw DenominatorNonPositive(k, K[k]);
    }
  }
  return K;
}

// Packed (v0*, z*) functional for finite-difference probes.
Functional packed(const GLParams& p, const DualPointT1& d, double (*eval)(const GLParams&, const DualPointT1&)) {
  return [p, d, eval](const Eigen::VectorXd& x) {
    auto fields = unpack_free(x, {&d.v0s, &d.zs});
    return eval(p, DualPointT1{std::move(fields[0]), std::move(fields[1])});
  };
}

}  // namespace

ScalarField K_of(const ScalarField& v0s, double eps) {
  return v0s.with_values((-2.0 * v0s.values()).array() + eps);
}

DualPointT1 construct_dual(const GLParams& p, const ScalarField& u0) {
  detail::require_no_source(p, u0.grid());
  const Eigen::ArrayXd u = u0.values().array();
  const Eigen::ArrayXd v0 = p.alpha * (u.square() - p.beta);
  const Eigen::ArrayXd z = (-2.0 * v0 + p.epsilon) * u;
  return {u0.with_values(v0.matrix()), u0.with_values(z.matrix())};
}

ScalarField L_apply(const GLParams& p, const ScalarField& v0s, const ScalarField& zs) {
  require_same_grid(v0s.grid(), zs.grid());
  detail::require_no_source(p, zs.grid());
  const GridSpec& g = zs.grid();
  const Eigen::VectorXd K = checked_K(v0s, p.epsilon);
  const Eigen::VectorXd w = zs.values().cwiseQuotient(K).cwiseProduct(g.free_mask());
  return zs.with_values(p.gamma * laplacian(g).apply(w));
}

ScalarField eliminated_multiplier(const GLParams& p, const ScalarField& v0s, const ScalarField& zs) {
  const ScalarField l = L_apply(p, v0s, zs);
  return zs.with_values((l.values() + zs.values()).cwiseProduct(zs.grid().free_mask()));
}

double eval_Jtilde(const GLParams& p, const DualPointT1& d) {
  require_same_grid(d.v0s.grid(), d.zs.grid());
  const GridSpec& g = d.zs.grid();
  detail::require_no_source(p, g);
  const Eigen::VectorXd K = checked_K(d.v0s, p.epsilon);
  const Eigen::VectorXd wf = detail::free_weights(g);
  const Eigen::VectorXd& z = d.zs.values();
  const Eigen::VectorXd& v0 = d.v0s.values();

  const Eigen::VectorXd ratio = z.cwiseQuotient(K).cwiseProduct(g.free_mask());
  const Eigen::VectorXd r = p.gamma * laplacian(g).apply(ratio) + z.cwiseProduct(g.free_mask());
  const Eigen::VectorXd w = g.weights();

  const double t1 = 0.5 * wf.dot(z.cwiseProduct(ratio));
  const double t2 = -0.5 * p.gamma * dirichlet_energy(d.zs.with_values(ratio));
  const double t3 = -0.5 / p.epsilon * wf.dot(r.cwiseAbs2());
  const double t4 = -0.5 / p.alpha * w.dot(v0.cwiseAbs2());
  const double t5 = -p.beta * w.dot(v0);
  return t1 + t2 + t3 + t4 + t5;
}

double eval_J1(const GLParams& p, const DualPointT1& d) {
  const ScalarField r = eliminated_multiplier(p, d.v0s, d.zs);
  return 0.5 / p.epsilon * detail::free_weights(r.grid()).dot(r.values().cwiseAbs2());
}

HypothesisReportT1 check_hypotheses_t1(const GLParams& p, const DualPointT1& d) {
  require_same_grid(d.v0s.grid(), d.zs.grid());
  const GridSpec& g = d.zs.grid();
  detail::require_no_source(p, g);
  const double eps = p.epsilon;
  const double tB = std::pow(eps, 1.0 / 8.0);
  const double tOp = std::pow(eps, 1.0 / 4.0);

  HypothesisReportT1 rep;
  const Eigen::VectorXd kf = detail::free_values(K_of(d.v0s, eps));
  rep.in_B.margin = kf.minCoeff() - tB;
  rep.in_B.ok = rep.in_B.margin > 0.0;

  if (kf.minCoeff() <= 0.0) {
    // L is undefined outside K > 0; report the operator conditions as failed.
    rep.op1 = {false, -tOp};
    rep.op2 = {false, -tOp};
    rep.op1_nodewise = rep.op2_nodewise = -tOp;
    return rep;
  }

  const Eigen::MatrixXd lap = detail::free_laplacian(g);
  const Eigen::VectorXd zf = detail::free_values(d.zs);
  const Eigen::Index m = kf.size();
  const Eigen::MatrixXd A1 = p.gamma * lap * kf.cwiseInverse().asDiagonal() +
                             Eigen::MatrixXd::Identity(m, m);
  const Eigen::VectorXd dk = 2.0 * zf.cwiseQuotient(kf.cwiseAbs2());
  const Eigen::MatrixXd M = p.gamma * lap * dk.asDiagonal();

  // Singular values in the weighted inner product.
  const Eigen::VectorXd sw = detail::free_values(d.zs.with_values(g.weights())).cwiseSqrt();
  auto weighted = [&](const Eigen::MatrixXd& a) {
    return Eigen::MatrixXd(sw.asDiagonal() * a * sw.cwiseInverse().asDiagonal());
  };

  rep.op1.margin = min_singular_squared(weighted(A1)) - tOp;
  rep.op1.ok = rep.op1.margin > 0.0;
  rep.op2.margin = min_singular_squared(weighted(M)) - tOp;
  rep.op2.ok = rep.op2.margin > 0.0;
  rep.op1_nodewise = A1.diagonal().cwiseAbs2().minCoeff() - tOp;
  rep.op2_nodewise = M.diagonal().cwiseAbs2().minCoeff() - tOp;
  return rep;
}

double verify_stationarity_t1(const GLParams& p, const DualPointT1& d) {
  const GridSpec& g = d.zs.grid();
  const Eigen::VectorXd x = pack_free({&d.v0s, &d.zs});
  const FdGradient fd = fd_gradient(packed(p, d, &eval_Jtilde), x);
  return fd.extrapolated.cwiseQuotient(packed_weights(g, 2)).lpNorm<Eigen::Infinity>();
}

double default_radius(const DualPointT1& d) {
  return 1e-3 * (1.0 + pack_free({&d.v0s, &d.zs}).norm());
}

LocalMaxResult verify_local_max_t1(const GLParams& p, const DualPointT1& d, double r, int samples,
                                   std::uint64_t seed) {
  const Eigen::VectorXd x = pack_free({&d.v0s, &d.zs});
  const Functional f = packed(p, d, &eval_Jtilde);
  LocalMaxResult res = detail::sample_local_max(f, x, r, samples, seed);
  res.hessian_lambda_max = detail::fd_lambda_max(f, x, packed_weights(d.zs.grid(), 2));
  return res;
}

PenalizedMinResult verify_penalized_min(const GLParams& p, const ScalarField& u0, const ScalarField& K,
                                        int samples, std::uint64_t seed) {
  const GridSpec& g = u0.grid();
  require_same_grid(g, K.grid());
  p.validate(g);
  PenalizedMinResult res;
  res.min_K = detail::free_values(K).minCoeff();

  const double j0 = eval_J(p, u0);
  const double slack = 1e-9 * (1.0 + std::abs(j0));
  const double base = u0.values().lpNorm<Eigen::Infinity>() + 1.0;
  const double scales[3] = {0.1, 1.0, 10.0};
  const Eigen::VectorXd mask = g.free_mask();
  const Eigen::VectorXd w = g.weights();

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  for (int s = 0; s < samples; ++s) {
    const double scale = scales[s % 3] * base;
    Eigen::VectorXd v(g.size());
    for (int k = 0; k < g.size(); ++k) v[k] = scale * unif(rng) * mask[k];
    const ScalarField u(g, v);
    const Eigen::VectorXd diff = v - u0.values();
    const double penalised = eval_J(p, u) + 0.5 * w.dot(K.values().cwiseProduct(diff.cwiseAbs2()));
    const double margin = penalised - j0;
    res.worst_margin = std::min(res.worst_margin, margin);
    if (margin < -slack) res.ok = false;
    ++res.samples;
  }
  return res;
}

PenalizedMinResult verify_penalized_min(const GLParams& p, const ScalarField& u0, const DualPointT1& d,
                                        int samples, std::uint64_t seed) {
  return verify_penalized_min(p, u0, K_of(d.v0s, p.epsilon), samples, seed);
}

J1Blocks hessian_blocks_J1(const GLParams& p, const DualPointT1& d) {
  require_same_grid(d.v0s.grid(), d.zs.grid());
  const GridSpec& g = d.zs.grid();
  detail::require_no_source(p, g);
  checked_K(d.v0s, p.epsilon);

  const double eps = p.epsilon;
  const double gam = p.gamma;
  const Eigen::VectorXd kf = detail::free_values(K_of(d.v0s, eps));
  const Eigen::VectorXd zf = detail::free_values(d.zs);
  const Eigen::VectorXd wf = detail::free_values(d.zs.with_values(g.weights()));
  const Eigen::MatrixXd lap = detail::free_laplacian(g);
  const Eigen::Index m = kf.size();

  const Eigen::MatrixXd A = gam * lap * kf.cwiseInverse().asDiagonal() + Eigen::MatrixXd::Identity(m, m);
  const Eigen::MatrixXd M = gam * lap * (2.0 * zf.cwiseQuotient(kf.cwiseAbs2())).asDiagonal();
  const Eigen::VectorXd r = A * zf;
  const Eigen::VectorXd u = r / eps;  // equals u0 at a constructed critical point
  // Adjoint in the weighted inner product.
  auto adj = [&](const Eigen::MatrixXd& a) {
    return Eigen::MatrixXd(wf.cwiseInverse().asDiagonal() * a.transpose() * wf.asDiagonal());
  };
  const Eigen::VectorXd lap_u = lap * u;

  J1Blocks b;
  b.zz = adj(A) * A / eps;
  b.zv_reduced = (2.0 * gam * lap_u.cwiseQuotient(kf.cwiseAbs2())).asDiagonal();
  b.zv = adj(A) * M / eps + b.zv_reduced;
  const Eigen::VectorXd second = 8.0 * gam * zf.cwiseProduct(lap_u).cwiseQuotient(kf.array().cube().matrix());
  b.vv = adj(M) * M / eps + Eigen::MatrixXd(second.asDiagonal());

  if (2 * m <= kMaxHessianDofs) {
    const Eigen::VectorXd x = pack_free({&d.v0s, &d.zs});
    Eigen::MatrixXd h = fd_hessian(packed(p, d, &eval_J1), x);
    const Eigen::VectorXd pw = packed_weights(g, 2);
    h = pw.cwiseInverse().asDiagonal() * h;
    b.fd_vv = h.topLeftCorner(m, m);
    b.fd_zv = h.bottomLeftCorner(m, m);
    b.fd_zz = h.bottomRightCorner(m, m);
    b.err_zz = relative_error(b.zz, b.fd_zz);
    b.err_zv = relative_error(b.zv, b.fd_zv);
    b.err_vv = relative_error(b.vv, b.fd_vv);
    b.err_zv_reduced = relative_error(b.zv_reduced, b.fd_zv);
  }
  if (m == 1) {
    b.scalar_det = b.zz(0, 0) * b.vv(0, 0) - b.zv(0, 0) * b.zv(0, 0);
    b.scalar_det_reduced = b.zz(0, 0) * b.vv(0, 0) - b.zv_reduced(0, 0) * b.zv_reduced(0, 0);
  }
  return b;
}

}  // namespace gldual
