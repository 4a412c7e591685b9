#include <doctest.h>

#include <cmath>
#include <random>

#include "gldual/primal_dual_t2.hpp"
#include "oracles.hpp"

using namespace gldual;
using oracle::kPi;

namespace {

struct Manufactured {
  GridSpec grid;
  GLParams params;
  ScalarField ustar;
};

Manufactured manufactured(int n, double eps) {
  const GridSpec g = GridSpec::line(1.0, n, Boundary::Dirichlet);
  const ScalarField us = ScalarField::from_function(g, [](double x, double) { return std::sin(kPi * x); }).masked();
  return {g, GLParams::dirichlet(1, 1, 1, eps, manufactured_source(1, 1, 1, us)), us};
}

GLParams zero_source(const GridSpec& g, double eps) {
  return GLParams::dirichlet(1, 1, 1, eps, ScalarField::constant(g, 0.0));
}

}  // namespace

TEST_CASE("eval_J3 examples") {
  const GridSpec g = GridSpec::line(1.0, 9, Boundary::Dirichlet);
  const ScalarField zero = ScalarField::constant(g, 0.0);
  CHECK(eval_J3(zero_source(g, 1e-3), {zero, zero}) == 0.0);

  const ScalarField f = ScalarField::from_function(g, [](double x, double) { return 2.0 + x; });
  const double eps = 1e-3;
  const GLParams p = GLParams::dirichlet(1, 1, 1, eps, f);
  const double expect = -inner(f.masked(), f.masked()) / (2 * eps);
  CHECK(eval_J3(p, {zero, zero}) == doctest::Approx(expect).epsilon(1e-14));

  const Manufactured m = manufactured(17, eps);
  const CriticalPoint cp = solve_critical(m.params, m.ustar);
  const double J = eval_J(m.params, cp.u0);
  CHECK(std::abs(J - eval_J3(m.params, construct_dual_t2(m.params, cp.u0))) <= 1e-8 * (1 + std::abs(J)));

  const GridSpec gn = GridSpec::line(1.0, 9, Boundary::Neumann);
  CHECK_THROWS_AS(eval_J3(GLParams::neumann(1, 1, 1, eps), {ScalarField::constant(gn, 0.0), ScalarField::constant(gn, 0.0)}),
                  RegimeMismatch);
  CHECK_THROWS_AS(eval_J3(p, {zero, ScalarField::constant(GridSpec::line(1.0, 7, Boundary::Dirichlet), 0.0)}),
                  GridMismatch);
}

TEST_CASE("construct_dual_t2") {
  const Manufactured m = manufactured(9, 1e-3);
  const DualPointT2 d0 = construct_dual_t2(m.params, ScalarField::constant(m.grid, 0.0));
  CHECK((d0.v0s.values().array() == -1.0).all());
  CHECK(d0.uhat.values().norm() == 0.0);

  const DualPointT2 d = construct_dual_t2(m.params, m.ustar);
  const Eigen::ArrayXd s = m.ustar.values().array();
  CHECK((d.v0s.values().array() - (s * s - 1.0)).abs().maxCoeff() < 1e-15);
  const DualPointT2 again = construct_dual_t2(m.params, d.uhat);
  CHECK(again.v0s.values() == d.v0s.values());
  CHECK(again.uhat.values() == d.uhat.values());

  CHECK_THROWS_AS(construct_dual_t2(m.params, ScalarField::constant(m.grid, 0.5)), BoundaryViolation);
}

TEST_CASE("u1 identity") {
  const double eps = 1e-3;
  const Manufactured m = manufactured(17, eps);
  const CriticalPoint cp = solve_critical(m.params, m.ustar, {1e-12, 100, 30});
  CHECK(u1_identity_residual(m.params, cp.u0) <= 1e-9);

  const GridSpec g = GridSpec::line(1.0, 9, Boundary::Dirichlet);
  CHECK(u1_identity_residual(zero_source(g, eps), ScalarField::constant(g, 0.0)) == 0.0);

  std::mt19937_64 rng(12);
  for (int k = 0; k < 20; ++k) {
    const ScalarField u = ScalarField(m.grid, oracle::random_vector(rng, 17)).masked();
    const double lhs = u1_identity_residual(m.params, u);
    const double rhs = grad_J(m.params, u).values().lpNorm<Eigen::Infinity>() / eps;
    CHECK(lhs > 1.0);
    CHECK(std::abs(lhs - rhs) <= 1e-12 * rhs);
  }
}

TEST_CASE("hypotheses") {
  const GridSpec g = GridSpec::line(1.0, 9, Boundary::Dirichlet);
  const HypothesisReportT2 h0 = check_hypotheses_t2(zero_source(g, 1e-3), ScalarField::constant(g, 0.0));
  CHECK(h0.sign.ok);
  CHECK(h0.sign.margin == 0.0);

  std::mt19937_64 rng(4);
  const ScalarField u = ScalarField(g, oracle::random_vector(rng, 9)).masked();
  const GLParams pc = GLParams::dirichlet(1, 1, 1, 1e-3, u.with_values(2.5 * u.values()));
  CHECK(check_hypotheses_t2(pc, u).sign.ok);

  // u0 = 0 branch with alpha beta = 1: A = -Lap - (2 + eps) I.
  const double eps = 1e-4;
  const HypothesisReportT2 h = check_hypotheses_t2(zero_source(g, eps), ScalarField::constant(g, 0.0));
  const Eigen::MatrixXd L = laplacian(g).dense_free();
  const Eigen::MatrixXd A = -L - (2.0 + eps) * Eigen::MatrixXd::Identity(L.rows(), L.cols());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A * A);
  const double oracle_margin = es.eigenvalues().minCoeff() - std::sqrt(eps);
  CHECK(std::abs(h.op.margin - oracle_margin) <= 1e-10 * std::abs(oracle_margin));
}

TEST_CASE("stationarity") {
  const double eps = 1e-3;
  const Manufactured m = manufactured(17, eps);
  const CriticalPoint cp = solve_critical(m.params, m.ustar);
  const DualPointT2 d = construct_dual_t2(m.params, cp.u0);
  CHECK(verify_stationarity_t2(m.params, d) < 1e-5);

  const GridSpec g = GridSpec::line(1.0, 9, Boundary::Dirichlet);
  const GLParams p0 = zero_source(g, eps);
  CHECK(verify_stationarity_t2(p0, construct_dual_t2(p0, ScalarField::constant(g, 0.0))) < 1e-8);

  const DualPointT2 moved{d.v0s.with_values(d.v0s.values().array() + 0.1),
                          d.uhat.with_values((d.uhat.values().array() + 0.1).matrix()).masked()};
  CHECK(verify_stationarity_t2(m.params, moved) > 1e-2);
}

TEST_CASE("Hessian blocks") {
  SUBCASE("zero point without source") {
    const GridSpec g = GridSpec::line(1.0, 9, Boundary::Dirichlet);
    const GLParams p = zero_source(g, 1e-3);
    const T2Blocks b = hessian_blocks_t2(p, construct_dual_t2(p, ScalarField::constant(g, 0.0)));
    CHECK((-b.vv.diagonal().array() == 1.0).all());
    CHECK(b.vu.norm() == 0.0);
    CHECK(b.vu_reduced.norm() == 0.0);
  }
  SUBCASE("manufactured n = 9") {
    const Manufactured m = manufactured(9, 1e-3);
    const CriticalPoint cp = solve_critical(m.params, m.ustar);
    const T2Blocks b = hessian_blocks_t2(m.params, construct_dual_t2(m.params, cp.u0));
    CHECK(b.err_uu < 1e-4);
    CHECK(b.err_vu < 1e-4);
    CHECK(b.err_vv < 1e-4);
    CHECK(b.err_vv_reduced < 1e-4);
    // The reduced cross block carries 4 u0 where differentiation gives 2 u0.
    CHECK(b.err_vu_reduced > 1e-2);
    CHECK(b.lambda_max < 0.0);
    REQUIRE(b.fd_lambda_max.has_value());
    CHECK(*b.fd_lambda_max == doctest::Approx(b.lambda_max).epsilon(1e-5));
  }
}

TEST_CASE("single interior node determinant") {
  // One free node at x = 1/2 with f = 3.25 has the critical point u0 = 1/2:
  // 8 u + 2 (u^2 - 1) u = 4 - 0.75 = 3.25.
  const GridSpec g = GridSpec::line(1.0, 3, Boundary::Dirichlet);
  double prev = 0.0;
  for (double eps : {1e-2, 1e-3, 1e-4}) {
    const GLParams p = GLParams::dirichlet(1, 1, 1, eps, ScalarField::constant(g, 3.25));
    const CriticalPoint cp = solve_critical(p, ScalarField::constant(g, 0.4));
    REQUIRE(cp.converged());
    const double u = cp.u0[1];
    CHECK(u == doctest::Approx(0.5).epsilon(1e-9));
    CHECK(check_hypotheses_t2(p, cp.u0).all_ok());
    const T2Blocks b = hessian_blocks_t2(p, construct_dual_t2(p, cp.u0));
    REQUIRE(b.scalar_det.has_value());
    // Closed form at the computed u0 with v0 = u0^2 - 1 and B = -Ag:
    // uu = -Ag - Ag^2 / eps, vv = -(1 + 4 u0^2 / eps), vu = 2 (u0 B + r) / eps - 2 u0, r = B u0 + f.
    const double Ag = 8.0 + 2.0 * (u * u - 1.0) - eps;
    const double r = -Ag * u + 3.25;
    const double uu = -Ag - Ag * Ag / eps, vv = -(1.0 + 4.0 * u * u / eps);
    const double vu = 2.0 * (-Ag * u + r) / eps - 2.0 * u;
    CHECK(*b.scalar_det == doctest::Approx(uu * vv - vu * vu).epsilon(1e-9));
    const double scaled = *b.scalar_det * std::sqrt(eps);
    CHECK(scaled > prev);
    prev = scaled;
  }
}

TEST_CASE("local max and penalized min") {
  const double eps = 1e-3;
  const Manufactured m = manufactured(9, eps);
  const CriticalPoint cp = solve_critical(m.params, m.ustar);
  const DualPointT2 d = construct_dual_t2(m.params, cp.u0);
  REQUIRE(check_hypotheses_t2(m.params, cp.u0).all_ok());
  const LocalMaxResult lm = verify_local_max_t2(m.params, d, default_radius(d), 200);
  CHECK(lm.ok);
  CHECK(lm.samples == 200);
  const PenalizedMinResult pm = verify_penalized_min_t2(m.params, cp.u0, d, 500);
  CHECK(pm.ok);
  CHECK(pm.min_K > 0.0);
  CHECK(pm.worst_margin >= 0.0);
}
