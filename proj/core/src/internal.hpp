#pragma once

#include <cstdint>

#include "gldual/dual_t1.hpp"
#include "gldual/verify.hpp"

namespace gldual::detail {

/// Ball sampling around x0 with shrink-and-retry (factor 10, up to 3 times).
/// Probes outside the functional's domain are skipped.
LocalMaxResult sample_local_max(const Functional& f, const Eigen::VectorXd& x0, double r, int samples,
                                std::uint64_t seed);

/// Largest eigenvalue of W^{-1/2} H W^{-1/2} for the finite-difference Hessian H.
std::optional<double> fd_lambda_max(const Functional& f, const Eigen::VectorXd& x0,
                                    const Eigen::VectorXd& weights);

/// Dense Laplacian restricted to free nodes.
Eigen::MatrixXd free_laplacian(const GridSpec& g);
Eigen::VectorXd free_values(const ScalarField& f);

}  // namespace gldual::detail
