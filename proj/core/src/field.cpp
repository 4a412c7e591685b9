#include "gldual/field.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include <Eigen/SparseLU>

namespace gldual {

const char* to_string(Boundary b) { return b == Boundary::Neumann ? "neumann" : "dirichlet"; }

GridSpec GridSpec::line(double length, int n, Boundary b) {
  GridSpec g;
  g.dim = 1;
  g.extent = {length, 1.0};
  g.nodes = {n, 1};
  g.boundary = b;
  g.validate();
  return g;
}

GridSpec GridSpec::rect(double lx, double ly, int nx, int ny, Boundary b) {
  GridSpec g;
  g.dim = 2;
  g.extent = {lx, ly};
  g.nodes = {nx, ny};
  g.boundary = b;
  g.validate();
  return g;
}

void GridSpec::validate() const {
  if (dim != 1 && dim != 2) throw std::invalid_argument("grid dimension must be 1 or 2");
  for (int a = 0; a < dim; ++a) {
    if (!(extent[a] > 0.0) || !std::isfinite(extent[a]))
      throw std::invalid_argument("grid extent must be positive");
    if (nodes[a] < 3) throw std::invalid_argument("grid needs at least 3 nodes per axis");
  }
}

std::array<double, 2> GridSpec::point(int node) const {
  const int i = node % nodes[0];
  const int j = node / nodes[0];
  return {i * spacing(0), dim == 2 ? j * spacing(1) : 0.0};
}

bool GridSpec::on_boundary(int node) const {
  const int i = node % nodes[0];
  if (i == 0 || i == nodes[0] - 1) return true;
  if (dim == 2) {
    const int j = node / nodes[0];
    if (j == 0 || j == nodes[1] - 1) return true;
  }
  return false;
}

namespace {

Eigen::VectorXd axis_weights(double h, int n) {
  Eigen::VectorXd w = Eigen::VectorXd::Constant(n, h);
  w[0] = w[n - 1] = 0.5 * h;
  return w;
}

}  // namespace

Eigen::VectorXd GridSpec::weights() const {
  const Eigen::VectorXd wx = axis_weights(spacing(0), nodes[0]);
  if (dim == 1) return wx;
  const Eigen::VectorXd wy = axis_weights(spacing(1), nodes[1]);
  Eigen::VectorXd w(size());
  for (int j = 0; j < nodes[1]; ++j)
    for (int i = 0; i < nodes[0]; ++i) w[index(i, j)] = wx[i] * wy[j];
  return w;
}

std::vector<int> GridSpec::free_nodes() const {
  std::vector<int> out;
  out.reserve(size());
  for (int k = 0; k < size(); ++k)
    if (boundary == Boundary::Neumann || !on_boundary(k)) out.push_back(k);
  return out;
}

Eigen::VectorXd GridSpec::free_mask() const {
  Eigen::VectorXd m = Eigen::VectorXd::Ones(size());
  if (boundary == Boundary::Dirichlet)
    for (int k = 0; k < size(); ++k)
      if (on_boundary(k)) m[k] = 0.0;
  return m;
}

ScalarField::ScalarField(GridSpec grid) : grid_(grid), values_(Eigen::VectorXd::Zero(grid.size())) {
  grid_.validate();
}

ScalarField::ScalarField(GridSpec grid, Eigen::VectorXd values)
    : grid_(grid), values_(std::move(values)) {
  grid_.validate();
  if (values_.size() != grid_.size())
    throw std::invalid_argument("field has " + std::to_string(values_.size()) +
                                " values for " + std::to_string(grid_.size()) + " nodes");
  if (!values_.allFinite()) throw std::invalid_argument("field values must be finite");
}

ScalarField ScalarField::constant(const GridSpec& grid, double c) {
  return {grid, Eigen::VectorXd::Constant(grid.size(), c)};
}

ScalarField ScalarField::from_function(const GridSpec& grid,
                                       const std::function<double(double, double)>& fn) {
  Eigen::VectorXd v(grid.size());
  for (int k = 0; k < grid.size(); ++k) {
    const auto p = grid.point(k);
    v[k] = fn(p[0], p[1]);
  }
  return {grid, std::move(v)};
}

ScalarField ScalarField::masked() const {
  if (grid_.boundary == Boundary::Neumann) return *this;
  return {grid_, values_.cwiseProduct(grid_.free_mask())};
}

void require_same_grid(const GridSpec& a, const GridSpec& b) {
  if (!(a == b)) throw GridMismatch("fields live on different grids");
}

LinOp::LinOp(GridSpec grid, Eigen::SparseMatrix<double> matrix)
    : grid_(grid), matrix_(std::move(matrix)) {
  if (matrix_.rows() != grid_.size() || matrix_.cols() != grid_.size())
    throw std::invalid_argument("operator size does not match grid");
}

ScalarField LinOp::apply(const ScalarField& f) const {
  require_same_grid(grid_, f.grid());
  return {grid_, matrix_ * f.values()};
}

Eigen::MatrixXd LinOp::dense_free() const {
  const auto dofs = grid_.free_nodes();
  const Eigen::MatrixXd full(matrix_);
  const int n = static_cast<int>(dofs.size());
  Eigen::MatrixXd out(n, n);
  for (int a = 0; a < n; ++a)
    for (int b = 0; b < n; ++b) out(a, b) = full(dofs[a], dofs[b]);
  return out;
}

Eigen::MatrixXd LinOp::symmetrized() const {
  const auto dofs = grid_.free_nodes();
  const Eigen::VectorXd w = grid_.weights();
  Eigen::MatrixXd s = dense_free();
  for (int a = 0; a < s.rows(); ++a)
    for (int b = 0; b < s.cols(); ++b) s(a, b) *= std::sqrt(w[dofs[a]] / w[dofs[b]]);
  return s;
}

LinOp laplacian(const GridSpec& g) {
  g.validate();
  const bool dirichlet = g.boundary == Boundary::Dirichlet;
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(static_cast<size_t>(g.size()) * (1 + 2 * g.dim));

  for (int k = 0; k < g.size(); ++k) {
    if (dirichlet && g.on_boundary(k)) continue;
    const int idx[2] = {k % g.nodes[0], k / g.nodes[0]};
    for (int a = 0; a < g.dim; ++a) {
      const int n = g.nodes[a];
      const double c = 1.0 / (g.spacing(a) * g.spacing(a));
      const int stride = a == 0 ? 1 : g.nodes[0];
      const int i = idx[a];
      trip.emplace_back(k, k, -2.0 * c);
      if (i == 0) {
        trip.emplace_back(k, k + stride, 2.0 * c);  // ghost reflection
      } else if (i == n - 1) {
        trip.emplace_back(k, k - stride, 2.0 * c);
      } else {
        for (int nb : {k - stride, k + stride})
          if (!(dirichlet && g.on_boundary(nb))) trip.emplace_back(k, nb, c);
      }
    }
  }
  Eigen::SparseMatrix<double> m(g.size(), g.size());
  m.setFromTriplets(trip.begin(), trip.end());
  return {g, std::move(m)};
}

struct PoissonSolver::Impl {
  GridSpec grid;
  Eigen::VectorXd weights;
  std::vector<int> dofs;
  Eigen::SparseMatrix<double> system;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;
};

PoissonSolver::PoissonSolver(const GridSpec& g) {
  auto impl = std::make_shared<Impl>();
  impl->grid = g;
  impl->weights = g.weights();
  impl->dofs = g.free_nodes();
  const Eigen::SparseMatrix<double> neg = -laplacian(g).matrix();

  std::vector<Eigen::Triplet<double>> trip;
  if (g.boundary == Boundary::Neumann) {
    // Bordered system [-Lap 1; w^T 0] pins the zero-mean gauge.
    const int n = g.size();
    for (int c = 0; c < neg.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(neg, c); it; ++it)
        trip.emplace_back(static_cast<int>(it.row()), static_cast<int>(it.col()), it.value());
    for (int k = 0; k < n; ++k) {
      trip.emplace_back(k, n, 1.0);
      trip.emplace_back(n, k, impl->weights[k]);
    }
    impl->system.resize(n + 1, n + 1);
  } else {
    std::vector<int> local(g.size(), -1);
    for (size_t a = 0; a < impl->dofs.size(); ++a) local[impl->dofs[a]] = static_cast<int>(a);
    for (int c = 0; c < neg.outerSize(); ++c)
      for (Eigen::SparseMatrix<double>::InnerIterator it(neg, c); it; ++it) {
        const int r = local[it.row()], cc = local[it.col()];
        if (r >= 0 && cc >= 0) trip.emplace_back(r, cc, it.value());
      }
    const int n = static_cast<int>(impl->dofs.size());
    impl->system.resize(n, n);
  }
  impl->system.setFromTriplets(trip.begin(), trip.end());
  impl->lu.compute(impl->system);
  if (impl->lu.info() != Eigen::Success) throw Error("Poisson factorization failed");
  impl_ = std::move(impl);
}

const GridSpec& PoissonSolver::grid() const { return impl_->grid; }

ScalarField PoissonSolver::solve(const ScalarField& rhs) const {
  const Impl& s = *impl_;
  require_same_grid(s.grid, rhs.grid());
  const Eigen::VectorXd& r = rhs.values();
  const double scale = r.lpNorm<Eigen::Infinity>();
  if (scale == 0.0) return ScalarField(s.grid);

  Eigen::VectorXd b;
  if (s.grid.boundary == Boundary::Neumann) {
    const double mean = s.weights.dot(r) / s.grid.volume();
    if (std::abs(mean) > 1e-12 * scale)
      throw NonSolvable("Neumann Poisson right-hand side has mean " + std::to_string(mean));
    b.resize(r.size() + 1);
    b.head(r.size()) = r;
    b[r.size()] = 0.0;
  } else {
    b.resize(static_cast<Eigen::Index>(s.dofs.size()));
    for (size_t a = 0; a < s.dofs.size(); ++a) b[a] = r[s.dofs[a]];
  }

  Eigen::VectorXd x = s.lu.solve(b);
  // One step of iterative refinement keeps the residual near round-off.
  const Eigen::VectorXd res = b - s.system * x;
  x += s.lu.solve(res);

  Eigen::VectorXd w = Eigen::VectorXd::Zero(s.grid.size());
  if (s.grid.boundary == Boundary::Neumann) {
    w = x.head(s.grid.size());
    w.array() -= s.weights.dot(w) / s.grid.volume();
  } else {
    for (size_t a = 0; a < s.dofs.size(); ++a) w[s.dofs[a]] = x[a];
  }
  return {s.grid, std::move(w)};
}

ScalarField inverse_laplacian_apply(const GridSpec& g, const ScalarField& rhs) {
  return PoissonSolver(g).solve(rhs);
}

double integrate(const ScalarField& f) { return f.grid().weights().dot(f.values()); }

double inner(const ScalarField& a, const ScalarField& b) {
  require_same_grid(a.grid(), b.grid());
  return a.grid().weights().dot(a.values().cwiseProduct(b.values()));
}

double dirichlet_energy(const ScalarField& u) {
  const GridSpec& g = u.grid();
  const Eigen::VectorXd& v = u.values();
  const int nx = g.nodes[0];
  const int ny = g.dim == 2 ? g.nodes[1] : 1;
  const double hx = g.spacing(0);

  auto trap = [](int i, int n) { return (i == 0 || i == n - 1) ? 0.5 : 1.0; };

  double e = 0.0;
  const double hy = g.dim == 2 ? g.spacing(1) : 1.0;
  for (int j = 0; j < ny; ++j) {
    const double wy = g.dim == 2 ? trap(j, ny) * hy : 1.0;
    for (int i = 0; i + 1 < nx; ++i) {
      const double d = v[g.index(i + 1, j)] - v[g.index(i, j)];
      e += d * d / hx * wy;
    }
  }
  if (g.dim == 2) {
    for (int j = 0; j + 1 < ny; ++j)
      for (int i = 0; i < nx; ++i) {
        const double d = v[g.index(i, j + 1)] - v[g.index(i, j)];
        e += d * d / hy * trap(i, nx) * hx;
      }
  }
  return e;
}

}  // namespace gldual
