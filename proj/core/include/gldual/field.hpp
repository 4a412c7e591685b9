#pragma once

// Structured-grid fields, the finite-difference Laplacian, trapezoidal
// quadrature and Poisson solves. Every other module is written against these.

#include <array>
#include <functional>
#include <memory>
#include <vector>

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include "gldual/errors.hpp"

namespace gldual {

enum class Boundary { Neumann, Dirichlet };

const char* to_string(Boundary b);

/// Rectangular 1D or 2D node grid. Nodes are numbered x-fastest.
struct GridSpec {
  int dim = 1;
  std::array<double, 2> extent{1.0, 1.0};
  std::array<int, 2> nodes{3, 1};
  Boundary boundary = Boundary::Neumann;

  static GridSpec line(double length, int n, Boundary b);
  static GridSpec rect(double lx, double ly, int nx, int ny, Boundary b);

  /// Throws std::invalid_argument on dim outside {1,2}, non-positive extents or
  /// fewer than 3 nodes on an axis.
  void validate() const;

  double spacing(int axis) const { return extent[axis] / (nodes[axis] - 1); }
  int size() const { return dim == 1 ? nodes[0] : nodes[0] * nodes[1]; }
  double volume() const { return dim == 1 ? extent[0] : extent[0] * extent[1]; }

  int index(int i, int j = 0) const { return i + nodes[0] * j; }
  /// Coordinates of a node, y = 0 in 1D.
  std::array<double, 2> point(int node) const;
  bool on_boundary(int node) const;

  /// Trapezoidal quadrature weights (tensor product in 2D).
  Eigen::VectorXd weights() const;
  /// Nodes that carry degrees of freedom: all nodes (Neumann) or interior
  /// nodes (Dirichlet).
  std::vector<int> free_nodes() const;
  /// 1 on free nodes, 0 on Dirichlet boundary nodes.
  Eigen::VectorXd free_mask() const;

  bool operator==(const GridSpec&) const = default;
};

/// Real nodal function on a grid. Values are always finite.
class ScalarField {
 public:
  explicit ScalarField(GridSpec grid);
  ScalarField(GridSpec grid, Eigen::VectorXd values);

  static ScalarField constant(const GridSpec& grid, double c);
  static ScalarField from_function(const GridSpec& grid,
                                   const std::function<double(double, double)>& fn);

  const GridSpec& grid() const { return grid_; }
  const Eigen::VectorXd& values() const { return values_; }
  int size() const { return static_cast<int>(values_.size()); }
  double operator[](int node) const { return values_[node]; }

  /// Copy with Dirichlet boundary values set to zero (no-op for Neumann).
  ScalarField masked() const;
  ScalarField with_values(Eigen::VectorXd values) const { return {grid_, std::move(values)}; }

 private:
  GridSpec grid_;
  Eigen::VectorXd values_;
};

void require_same_grid(const GridSpec& a, const GridSpec& b);

/// Sparse linear map on nodal vectors that is self-adjoint in the
/// trapezoidal inner product of its grid: W A = (W A)^T.
class LinOp {
 public:
  LinOp(GridSpec grid, Eigen::SparseMatrix<double> matrix);

  const GridSpec& grid() const { return grid_; }
  const Eigen::SparseMatrix<double>& matrix() const { return matrix_; }

  Eigen::VectorXd apply(const Eigen::VectorXd& v) const { return matrix_ * v; }
  ScalarField apply(const ScalarField& f) const;

  /// Dense W^{1/2} A W^{-1/2} restricted to the free nodes; Euclidean symmetric.
  Eigen::MatrixXd symmetrized() const;
  /// Dense A restricted to the free nodes.
  Eigen::MatrixXd dense_free() const;

 private:
  GridSpec grid_;
  Eigen::SparseMatrix<double> matrix_;
};

/// Second-order central-difference Laplacian. Neumann boundaries use ghost
/// reflection; Dirichlet boundaries read zero and produce zero rows.
LinOp laplacian(const GridSpec& g);

/// Factorized -Laplacian for repeated Poisson solves. Immutable; cheap to copy.
class PoissonSolver {
 public:
  explicit PoissonSolver(const GridSpec& g);

  const GridSpec& grid() const;
  /// Returns w with -Lap w = rhs. Neumann: rhs must have zero weighted mean
  /// (NonSolvable otherwise) and w is returned with zero mean. Dirichlet: rhs
  /// boundary values are ignored and w vanishes on the boundary.
  ScalarField solve(const ScalarField& rhs) const;

 private:
  struct Impl;
  std::shared_ptr<const Impl> impl_;
};

ScalarField inverse_laplacian_apply(const GridSpec& g, const ScalarField& rhs);

double integrate(const ScalarField& f);
double inner(const ScalarField& a, const ScalarField& b);
/// Integral of |grad u|^2 from forward differences on every grid edge.
double dirichlet_energy(const ScalarField& u);

}  // namespace gldual
