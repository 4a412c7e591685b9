#include "gldual/primal.hpp"

#include <cmath>
#include <stdexcept>

#include <Eigen/SparseLU>

namespace gldual {

GLParams GLParams::neumann(double gamma, double alpha, double beta, double epsilon) {
  GLParams p;
  p.gamma = gamma;
  p.alpha = alpha;
  p.beta = beta;
  p.epsilon = epsilon;
  return p;
}

GLParams GLParams::dirichlet(double gamma, double alpha, double beta, double epsilon,
                             ScalarField f) {
  GLParams p = neumann(gamma, alpha, beta, epsilon);
  p.source = std::move(f);
  return p;
}

void GLParams::validate(const GridSpec& g) const {
  if (!(gamma > 0.0) || !(alpha > 0.0) || !(beta > 0.0))
    throw std::invalid_argument("gamma, alpha and beta must be positive");
  if (!(epsilon > 0.0 && epsilon < 1.0)) throw std::invalid_argument("epsilon must lie in (0,1)");
  if (g.boundary != regime())
    throw RegimeMismatch(std::string("grid boundary is ") + to_string(g.boundary) +
                         " but parameters describe the " + to_string(regime()) + " regime");
  if (source) require_same_grid(g, source->grid());
}

ScalarField GLParams::masked_source(const GridSpec& g) const {
  if (!source) return ScalarField(g);
  require_same_grid(g, source->grid());
  return source->masked();
}

GLParams with_epsilon(const GLParams& p, double epsilon) {
  GLParams q = p;
  q.epsilon = epsilon;
  return q;
}

double eval_J(const GLParams& p, const ScalarField& u) {
  const GridSpec& g = u.grid();
  p.validate(g);
  const Eigen::ArrayXd well = u.values().array().square() - p.beta;
  double j = 0.5 * p.gamma * dirichlet_energy(u) +
             0.5 * p.alpha * g.weights().dot(well.square().matrix());
  if (p.source) j -= inner(u, p.masked_source(g));
  return j;
}

ScalarField grad_J(const GLParams& p, const ScalarField& u) {
  const GridSpec& g = u.grid();
  p.validate(g);
  const Eigen::ArrayXd v = u.values().array();
  Eigen::VectorXd gr = -p.gamma * laplacian(g).apply(u.values());
  gr.array() += 2.0 * p.alpha * (v.square() - p.beta) * v;
  gr -= p.masked_source(g).values();
  return ScalarField(g, gr.cwiseProduct(g.free_mask()));
}

LinOp hessian_J(const GLParams& p, const ScalarField& u) {
  const GridSpec& g = u.grid();
  p.validate(g);
  Eigen::SparseMatrix<double> h = -p.gamma * laplacian(g).matrix();
  const Eigen::VectorXd mask = g.free_mask();
  for (int k = 0; k < g.size(); ++k)
    if (mask[k] != 0.0) h.coeffRef(k, k) += 6.0 * p.alpha * u[k] * u[k] - 2.0 * p.alpha * p.beta;
  h.prune(0.0);
  return {g, std::move(h)};
}

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::Converged: return "converged";
    case SolveStatus::NoConvergence: return "no_convergence";
    case SolveStatus::LineSearchStalled: return "line_search_stalled";
  }
  return "unknown";
}

namespace {

Eigen::SparseMatrix<double> restrict_free(const Eigen::SparseMatrix<double>& m,
                                          const std::vector<int>& local) {
  std::vector<Eigen::Triplet<double>> trip;
  int n = 0;
  for (int v : local) n += v >= 0;
  for (int c = 0; c < m.outerSize(); ++c)
    for (Eigen::SparseMatrix<double>::InnerIterator it(m, c); it; ++it) {
      const int r = local[it.row()], cc = local[it.col()];
      if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
    }
  Eigen::SparseMatrix<double> out(n, n);
  out.setFromTriplets(trip.begin(), trip.end());
  return out;
}

}  // namespace

CriticalPoint solve_critical(const GLParams& p, const ScalarField& u_init,
                             const NewtonOptions& opts) {
  if (!(opts.tol > 0.0)) throw std::invalid_argument("Newton tolerance must be positive");
  const GridSpec& g = u_init.grid();
  p.validate(g);

  const auto dofs = g.free_nodes();
  std::vector<int> local(g.size(), -1);
  for (size_t a = 0; a < dofs.size(); ++a) local[dofs[a]] = static_cast<int>(a);

  CriticalPoint cp{u_init.masked(), 0.0, 0, SolveStatus::Converged, 0, {}};
  ScalarField gr = grad_J(p, cp.u0);
  cp.residual_norm = gr.values().lpNorm<Eigen::Infinity>();
  cp.energy_history.push_back(eval_J(p, cp.u0));

  while (cp.residual_norm > opts.tol) {
    if (cp.newton_iters >= opts.max_iter) {
      cp.status = SolveStatus::NoConvergence;
      return cp;
    }
    Eigen::SparseMatrix<double> h = restrict_free(hessian_J(p, cp.u0).matrix(), local);
    Eigen::VectorXd rhs(static_cast<Eigen::Index>(dofs.size()));
    for (size_t a = 0; a < dofs.size(); ++a) rhs[a] = -gr[dofs[a]];

    Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
    lu.compute(h);
    Eigen::VectorXd step;
    if (lu.info() == Eigen::Success) step = lu.solve(rhs);
    if (lu.info() != Eigen::Success || !step.allFinite()) {
      Eigen::SparseMatrix<double> eye(h.rows(), h.cols());
      eye.setIdentity();
      h += 1e-10 * eye;
      ++cp.regularizations;
      lu.compute(h);
      if (lu.info() != Eigen::Success) {
        cp.status = SolveStatus::LineSearchStalled;
        return cp;
      }
      step = lu.solve(rhs);
    }

    Eigen::VectorXd full_step = Eigen::VectorXd::Zero(g.size());
    for (size_t a = 0; a < dofs.size(); ++a) full_step[dofs[a]] = step[a];

    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving <= opts.max_halvings; ++halving, t *= 0.5) {
      ScalarField trial = cp.u0.with_values(cp.u0.values() + t * full_step);
      ScalarField trial_grad = grad_J(p, trial);
      const double trial_norm = trial_grad.values().lpNorm<Eigen::Infinity>();
      if (trial_norm < cp.residual_norm) {
        cp.u0 = std::move(trial);
        gr = std::move(trial_grad);
        cp.residual_norm = trial_norm;
        accepted = true;
        break;
      }
    }
    ++cp.newton_iters;
    if (!accepted) {
      cp.status = SolveStatus::LineSearchStalled;
      return cp;
    }
    cp.energy_history.push_back(eval_J(p, cp.u0));
  }
  cp.status = SolveStatus::Converged;
  return cp;
}

ScalarField manufactured_source(double gamma, double alpha, double beta,
                                const ScalarField& u_star) {
  const GridSpec& g = u_star.grid();
  const ScalarField u = u_star.masked();
  const Eigen::ArrayXd v = u.values().array();
  Eigen::VectorXd f = -gamma * laplacian(g).apply(u.values());
  f.array() += 2.0 * alpha * (v.square() - beta) * v;
  return ScalarField(g, f.cwiseProduct(g.free_mask()));
}

}  // namespace gldual
