#include "gldual/conjugates.hpp"

#include "gldual/errors.hpp"
#include "internal.hpp"

namespace gldual {

namespace {

const GridSpec& same_grid(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  return a.grid();
}

Eigen::VectorXd shifted_source(const GLParams& p, const ScalarField& v1s, bool with_f) {
  Eigen::VectorXd c = v1s.values();
  if (with_f) c += p.masked_source(v1s.grid()).values();
  return c;
}

}  // namespace

ConjugateResult conj_F(const ScalarField& zs, const ScalarField& K) {
  const GridSpec& g = same_grid(zs, K);
  const Eigen::VectorXd mask = g.free_mask();
  Eigen::VectorXd u = Eigen::VectorXd::Zero(g.size());
  for (int i = 0; i < g.size(); ++i) {
    if (mask[i] == 0.0) continue;
    if (!(K[i] > 0.0)) throw DenominatorNonPositive(i, K[i]);
    u[i] = zs[i] / K[i];
  }
  const double value = 0.5 * detail::free_weights(g).dot(zs.values().cwiseProduct(u));
  return {value, zs.with_values(u), std::nullopt};
}

ConjugateResult conj_G0(const GLParams& p, const ScalarField& zs, const ScalarField& v1s) {
  const GridSpec& g = same_grid(zs, v1s);
  const Eigen::VectorXd d = (zs.values() - v1s.values()).cwiseProduct(g.free_mask());
  const ScalarField w = PoissonSolver(g).solve(zs.with_values(d));
  const Eigen::VectorXd u = w.values() / p.gamma;
  const double value = 0.5 * detail::free_weights(g).dot(d.cwiseProduct(u));
  return {value, zs.with_values(u), std::nullopt};
}

ConjugateResult conj_G1K(const ScalarField& v1s, const ScalarField& v0s, const ScalarField& K,
                         const GLParams& p, bool with_f) {
  const GridSpec& g = same_grid(v1s, v0s);
  require_same_grid(g, K.grid());
  if (with_f && !p.source) throw RegimeMismatch("the source variant needs a source field");
  const Eigen::VectorXd mask = g.free_mask();
  const Eigen::VectorXd c = shifted_source(p, v1s, with_f);
  const Eigen::VectorXd& v0 = v0s.values();

  Eigen::VectorXd u = Eigen::VectorXd::Zero(g.size());
  for (int i = 0; i < g.size(); ++i) {
    if (mask[i] == 0.0) continue;
    const double den = 2.0 * v0[i] + K[i];
    if (!(den > 0.0)) throw SupNotAttained(i, den);
    u[i] = c[i] / den;
  }
  const Eigen::VectorXd t = v0 / p.alpha;
  const Eigen::VectorXd v = (t - u.cwiseAbs2()).array() + p.beta;

  const Eigen::VectorXd w = g.weights();
  const double value = 0.5 * detail::free_weights(g).dot(c.cwiseProduct(u)) +
                       0.5 / p.alpha * w.dot(v0.cwiseAbs2()) + p.beta * w.dot(v0);
  return {value, v1s.with_values(u), v1s.with_values(v)};
}

double objective_F(const ScalarField& zs, const ScalarField& K, const ScalarField& u) {
  const GridSpec& g = same_grid(zs, K);
  require_same_grid(g, u.grid());
  const Eigen::VectorXd& x = u.values();
  const Eigen::VectorXd integrand = zs.values().cwiseProduct(x) - 0.5 * K.values().cwiseProduct(x.cwiseAbs2());
  return detail::free_weights(g).dot(integrand);
}

double objective_G0(const GLParams& p, const ScalarField& zs, const ScalarField& v1s,
                    const ScalarField& u) {
  const GridSpec& g = same_grid(zs, v1s);
  require_same_grid(g, u.grid());
  const Eigen::VectorXd x = u.values().cwiseProduct(g.free_mask());
  const double pairing = detail::free_weights(g).dot((zs.values() - v1s.values()).cwiseProduct(x));
  return pairing - 0.5 * p.gamma * dirichlet_energy(u.with_values(x));
}

double objective_G1K(const ScalarField& v1s, const ScalarField& v0s, const ScalarField& K,
                     const GLParams& p, bool with_f, const ScalarField& u, const ScalarField& v) {
  const GridSpec& g = same_grid(v1s, v0s);
  require_same_grid(g, K.grid());
  require_same_grid(g, u.grid());
  require_same_grid(g, v.grid());
  const Eigen::VectorXd c = shifted_source(p, v1s, with_f);
  const Eigen::VectorXd& x = u.values();
  const Eigen::VectorXd& y = v.values();
  const Eigen::VectorXd wf = detail::free_weights(g);
  const Eigen::VectorXd w = g.weights();

  // u vanishes on Dirichlet nodes, so u^2 only enters the well on free nodes.
  const Eigen::VectorXd xf = x.cwiseProduct(g.free_mask());
  const Eigen::VectorXd well = (y + xf.cwiseAbs2()).array() - p.beta;
  return wf.dot(c.cwiseProduct(x) - 0.5 * K.values().cwiseProduct(x.cwiseAbs2())) +
         w.dot(v0s.values().cwiseProduct(y)) - 0.5 * p.alpha * w.dot(well.cwiseAbs2());
}

double eval_JK_decomposition(const GLParams& p, const ScalarField& v0s, const ScalarField& v1s,
                             const ScalarField& zs, const ScalarField& K) {
  p.validate(zs.grid());
  const bool with_f = p.regime() == Boundary::Dirichlet;
  return conj_F(zs, K).value - conj_G0(p, zs, v1s).value - conj_G1K(v1s, v0s, K, p, with_f).value;
}

}  // namespace gldual
