#pragma once

// Closed-form Fenchel conjugates used to assemble the dual functionals.
// All components are positive-convention sups; eval_JK_decomposition owns the
// signs. Integrals of u-dependent terms run over free nodes, v0 terms over
// the whole grid.
//
//   F(u)        = 1/2 int K u^2
//   G0(u)       = gamma/2 int |grad u|^2
//   G1K(u, v)   = alpha/2 int (v + u^2 - beta)^2 + 1/2 int K u^2
//
// with pairings <z*, u>, <z* - v1*, u> and <v1* [+ f], u> + <v0*, v>.

#include <optional>

#include "gldual/primal.hpp"

namespace gldual {

struct ConjugateResult {
  double value = 0.0;
  /// Argument attaining the sup (u).
  ScalarField maximizer;
  /// Second component of the maximizer where there is one (v for G1K).
  std::optional<ScalarField> aux;
};

/// 1/2 int z*^2 / K, maximizer z*/K. DenominatorNonPositive if K <= 0.
ConjugateResult conj_F(const ScalarField& zs, const ScalarField& K);

/// 1/(2 gamma) <z* - v1*, (-Lap)^{-1}(z* - v1*)>, maximizer solves
/// gamma (-Lap) u = z* - v1*. NonSolvable for a nonzero mean on Neumann grids.
ConjugateResult conj_G0(const GLParams& p, const ScalarField& zs, const ScalarField& v1s);

/// 1/2 int (v1* [+ f])^2 / (2 v0* + K) + 1/(2 alpha) int v0*^2 + beta int v0*.
/// SupNotAttained if 2 v0* + K <= 0 at a free node.
ConjugateResult conj_G1K(const ScalarField& v1s, const ScalarField& v0s, const ScalarField& K,
                         const GLParams& p, bool with_f);

// Objectives inside each sup, for Fenchel-Young checks and brute-force oracles.
double objective_F(const ScalarField& zs, const ScalarField& K, const ScalarField& u);
double objective_G0(const GLParams& p, const ScalarField& zs, const ScalarField& v1s,
                    const ScalarField& u);
double objective_G1K(const ScalarField& v1s, const ScalarField& v0s, const ScalarField& K,
                     const GLParams& p, bool with_f, const ScalarField& u, const ScalarField& v);

/// F*(z*) - G0*(z*, v1*) - G1K*(v1*, v0*). The source enters G1K* in the
/// Dirichlet regime. At v1* = gamma Lap(z*/K) + z* with K = -2 v0* + eps this
/// reproduces eval_Jtilde (no source) or eval_J3 at u^ = z*/K (with source).
double eval_JK_decomposition(const GLParams& p, const ScalarField& v0s, const ScalarField& v1s,
                             const ScalarField& zs, const ScalarField& K);

}  // namespace gldual
