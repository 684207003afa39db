#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "hho/solver.hpp"
#include "solver_support.hpp"
#include "test_support.hpp"

using namespace hho;

namespace {

  NonlinearProblem identity_flux_problem() {
    auto p = poisson_problem([](const Vector2&) { return 0.; });
    p.name = "laplace";
    return p;
  }

  double relative_gradient_error(const HhoSpace& space, const HybridVector& u, const VectorField& exact) {
    const auto g = reconstruct_gradient_global(space, u);
    double e = 0., n = 0.;
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      const auto rule = cell_quadrature(space.mesh(), space.geometry(), c, default_quadrature_degree(space.degree()));
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vector2 ex = exact(rule.points[q]);
        e += rule.weights[q] * (ex - g(c, rule.points[q])).squaredNorm();
        n += rule.weights[q] * ex.squaredNorm();
      }
    }
    return std::sqrt(e / n);
  }

} // namespace

TEST(Problems, BuiltinsValidate) {
  std::mt19937 rng(1);
  validate_problem(mean_curvature_problem(), rng);
  validate_problem(manufactured_poisson_problem(), rng);
  validate_problem(test::randomized_problem(rng), rng);
  EXPECT_EQ(make_problem("mean-curvature").name, "mean-curvature");
  try {
    make_problem("subsonic");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::ConfigError);
  }
}

TEST(Problems, BrokenCallbacksRejected) {
  std::mt19937 rng(2);
  auto asymmetric = mean_curvature_problem();
  asymmetric.a_z = [](const Vector2&, double, const Vector2&) { return Matrix2((Matrix2() << 1, 0.5, 0, 1).finished()); };
  EXPECT_THROW(validate_problem(asymmetric, rng), Error);
  auto wrong = mean_curvature_problem();
  wrong.a_z = [](const Vector2&, double, const Vector2&) { return Matrix2(Matrix2::Identity()); };
  EXPECT_THROW(validate_problem(wrong, rng), Error);
}

TEST(Problems, MeanCurvatureSourceIsConsistent) {
  // -div a(grad u) + f = 0 at sample points, with div taken by central differences
  const auto p = mean_curvature_problem();
  const double h = 1e-4;
  for (const Vector2 x : {Vector2(0.3, 0.4), Vector2(0.7, 0.2), Vector2(0.5, 0.5)}) {
    auto flux = [&](const Vector2& y) { return p.a(y, 0., p.exact_gradient(y)); };
    const double div = (flux(x + Vector2(h, 0)).x() - flux(x - Vector2(h, 0)).x()) / (2 * h) +
                       (flux(x + Vector2(0, h)).y() - flux(x - Vector2(0, h)).y()) / (2 * h);
    EXPECT_NEAR(-div + p.f(x, p.exact_solution(x), p.exact_gradient(x)), 0., 1e-7);
  }
}

TEST(Residual, LinearHomogeneousVanishesAtZero) {
  const auto mesh = generate_cartesian(3);
  const HhoSpace space(mesh, 1);
  EXPECT_EQ(residual(identity_flux_problem(), space, space.zero()).norm(), 0.);
}

TEST(Residual, StabilizationVanishesOnPolynomialInterpolants) {
  NonlinearProblem only_stabilization;
  only_stabilization.a = [](const Vector2&, double, const Vector2&) { return Vector2(0, 0); };
  only_stabilization.a_z = [](const Vector2&, double, const Vector2&) { return Matrix2(Matrix2::Zero()); };
  only_stabilization.f = [](const Vector2&, double, const Vector2&) { return 0.; };
  const auto mesh = test::family_mesh("hexagonal", 1);
  for (int k = 0; k <= 3; ++k) {
    const HhoSpace space(mesh, k);
    const auto p = [k](const Vector2& x) { return std::pow(x.x() - 0.3 * x.y(), k + 1) + x.y(); };
    const auto v = interpolate(space, p);
    // boundary rows are dropped by residual(); check every cell contribution instead
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      const auto local = assemble_local(only_stabilization, space, c, space.restrict_to_cell(v, c), false);
      EXPECT_LT(local.residual.norm(), 1e-11 * space.operators(c).stabilization.norm()) << "k=" << k;
    }
  }
}

TEST(Residual, BatchedFluxMatchesCallbacks) {
  const auto mesh = test::family_mesh("kershaw", 1);
  const HhoSpace space(mesh, 2);
  std::mt19937 rng(3);
  const auto w = test::random_hybrid(space, rng, 0.1);
  auto generic = mean_curvature_problem();
  generic.gradient_flux = nullptr;
  const auto batched = mean_curvature_problem();
  const VectorXd r1 = residual(generic, space, w), r2 = residual(batched, space, w);
  EXPECT_LT((r1 - r2).norm(), 1e-13 * r1.norm());
  const SparseMatrix j1 = jacobian(generic, space, w), j2 = jacobian(batched, space, w);
  EXPECT_LT(SparseMatrix(j1 - j2).norm(), 1e-13 * j1.norm());
}

TEST(Residual, ParallelAssemblyIsBitwiseDeterministic) {
  const auto mesh = test::family_mesh("triangular", 2);
  SpaceOptions two;
  two.threads = 3;
  const HhoSpace serial(mesh, 2), parallel(mesh, 2, two);
  std::mt19937 rng(4);
  const auto w = test::random_hybrid(serial, rng, 0.2);
  const auto p = mean_curvature_problem();
  EXPECT_EQ(residual(p, serial, w), residual(p, parallel, w));
  const auto a = condensed_newton_system(p, serial, w), b = condensed_newton_system(p, parallel, w);
  EXPECT_EQ(a.rhs, b.rhs);
  EXPECT_EQ(SparseMatrix(a.matrix - b.matrix).norm(), 0.);
}

TEST(Residual, EvaluationErrorsCarryLocation) {
  const auto mesh = generate_cartesian(2);
  const HhoSpace space(mesh, 1);
  auto nan_source = manufactured_poisson_problem();
  nan_source.f = [](const Vector2& x, double, const Vector2&) { return x.x() > 0.5 ? std::nan("") : 0.; };
  auto throwing = manufactured_poisson_problem();
  throwing.a = [](const Vector2&, double, const Vector2&) -> Vector2 { throw std::domain_error("bad flux"); };
  for (const auto& p : {nan_source, throwing}) {
    try {
      residual(p, space, space.zero());
      FAIL();
    } catch (const Error& e) {
      EXPECT_EQ(e.kind(), ErrorKind::EvaluationError);
      EXPECT_NE(std::string(e.what()).find("cell "), std::string::npos) << e.what();
    }
  }
}

TEST(Jacobian, LinearCaseIsTheStiffnessMatrix) {
  const auto mesh = test::family_mesh("hexagonal", 1);
  const HhoSpace space(mesh, 1);
  std::mt19937 rng(5);
  const auto p = identity_flux_problem();
  const SparseMatrix a = jacobian(p, space, space.zero()), b = jacobian(p, space, test::random_hybrid(space, rng));
  EXPECT_LT(SparseMatrix(a - b).norm(), 1e-13 * a.norm());
  // residual is linear with J as its matrix
  const auto w = test::random_hybrid(space, rng);
  EXPECT_LT((residual(p, space, w) - a * w.values()).norm(), 1e-12 * (a * w.values()).norm());
}

TEST(Jacobian, MeanCurvatureIsSymmetric) {
  const auto mesh = test::family_mesh("kershaw", 1);
  const HhoSpace space(mesh, 2);
  std::mt19937 rng(6);
  const SparseMatrix J = jacobian(mean_curvature_problem(), space, test::random_hybrid(space, rng, 0.3));
  EXPECT_LT(SparseMatrix(J - SparseMatrix(J.transpose())).norm(), 1e-12 * J.norm());
}

TEST(Jacobian, FiniteDifferenceSlopes) {
  std::mt19937 rng(7);
  const auto mesh = test::family_mesh("hexagonal", 1);
  for (int k : {1, 2}) {
    const HhoSpace space(mesh, k);
    const auto w = interpolate(space, [](const Vector2& x) { return std::sin(2 * x.x()) * std::cos(3 * x.y()); }, true);
    const auto mc = mean_curvature_problem();
    const auto rnd = test::randomized_problem(rng);
    for (int dir = 0; dir < 3; ++dir) {
      const auto d = test::random_hybrid(space, rng);
      EXPECT_NEAR(test::finite_difference_slope(mc, space, w, d), 1., 0.2) << "mean-curvature k=" << k;
      EXPECT_NEAR(test::finite_difference_slope(rnd, space, w, d), 1., 0.2) << "randomized k=" << k;
    }
  }
}

// The semi-discrete linearization with coefficients frozen at the exact solution and the fully
// discrete one at the interpolant differ by an amount that shrinks under refinement.
TEST(Jacobian, FrozenCoefficientLinearizationConverges) {
  const auto mc = mean_curvature_problem();
  auto frozen = mc;
  frozen.gradient_flux = nullptr;
  frozen.a_z = [mc](const Vector2& x, double, const Vector2&) {
    return mc.a_z(x, mc.exact_solution(x), mc.exact_gradient(x));
  };
  std::vector<double> h, gap;
  for (std::size_t n : {4, 8, 16}) {
    const auto mesh = generate_cartesian(n);
    const HhoSpace space(mesh, 1);
    const auto iu = interpolate(space, mc.exact_solution, true);
    const SparseMatrix discrete = jacobian(mc, space, iu), exact = jacobian(frozen, space, iu);
    const VectorXd v = iu.values();
    h.push_back(1. / n);
    gap.push_back((discrete * v - exact * v).norm() / (exact * v).norm());
  }
  EXPECT_GT(test::fitted_slope(h, gap), 0.8);
  EXPECT_LT(gap.back(), gap.front());
}

TEST(Condensation, RoutesAgree) {
  const auto mesh = generate_cartesian(4);
  for (int k : {0, 1, 2}) {
    const HhoSpace space(mesh, k);
    const auto p = manufactured_poisson_problem();
    const SparseMatrix J = jacobian(p, space, space.zero());
    const VectorXd b = -residual(p, space, space.zero());

    const auto global = static_condense(space, J, b);
    const auto local = condensed_newton_system(p, space, space.zero());
    EXPECT_EQ(global.matrix.rows(), static_cast<Eigen::Index>(mesh.n_interior_faces() * (k + 1)));
    EXPECT_LT(SparseMatrix(global.matrix - local.matrix).norm(), 1e-12 * local.matrix.norm());
    EXPECT_LT((global.rhs - local.rhs).norm(), 1e-12 * local.rhs.norm());
    EXPECT_LT(SparseMatrix(global.matrix - SparseMatrix(global.matrix.transpose())).norm(), 1e-12 * global.matrix.norm());

    const auto x1 = solve_condensed(space, global), x2 = solve_uncondensed(space, J, b);
    EXPECT_LT((x1 - x2).values().norm(), 1e-10 * x2.values().norm()) << "k=" << k;
    EXPECT_TRUE(x1.has_zero_boundary(mesh));
  }
}

TEST(Condensation, CarriesTheResidualNorm) {
  std::mt19937 rng(31);
  const auto mesh = test::family_mesh("hexagonal", 1);
  const HhoSpace space(mesh, 2);
  const auto rnd = test::randomized_problem(rng);
  for (const auto& p : {mean_curvature_problem(), rnd}) {
    const auto w = test::random_hybrid(space, rng, 0.1);
    EXPECT_NEAR(condensed_newton_system(p, space, w).residual_norm, residual(p, space, w).norm(),
                1e-13 * residual(p, space, w).norm());
  }
}

TEST(Condensation, NonsymmetricSystemsUseLu) {
  std::mt19937 rng(8);
  const auto mesh = test::family_mesh("triangular", 1);
  const HhoSpace space(mesh, 1);
  const auto p = test::randomized_problem(rng);
  const auto w = test::random_hybrid(space, rng, 0.3);
  const SparseMatrix J = jacobian(p, space, w);
  const VectorXd b = -residual(p, space, w);
  const auto x1 = solve_condensed(space, static_condense(space, J, b));
  const auto x2 = solve_condensed(space, condensed_newton_system(p, space, w));
  const auto x3 = solve_uncondensed(space, J, b);
  EXPECT_LT((x1 - x3).values().norm(), 1e-10 * x3.values().norm());
  EXPECT_LT((x2 - x3).values().norm(), 1e-10 * x3.values().norm());
}

TEST(Condensation, SingularCellBlockNamesTheCell) {
  const auto mesh = generate_cartesian(2);
  const HhoSpace space(mesh, 0);
  SparseMatrix J(space.layout().size(), space.layout().size());
  J.setIdentity();
  J.coeffRef(2, 2) = 0.;
  try {
    static_condense(space, J, VectorXd::Zero(J.rows()));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::CondensationFailure);
    EXPECT_NE(std::string(e.what()).find("cell 2"), std::string::npos) << e.what();
  }
}

TEST(LinearSolve, ZeroLoadGivesZero) {
  const auto mesh = generate_triangular(4);
  const HhoSpace space(mesh, 2);
  EXPECT_EQ(solve_linear_hho(identity_flux_problem(), space).values().norm(), 0.);
}

TEST(LinearSolve, BootstrapHasZeroBoundary) {
  const auto mesh = test::family_mesh("hexagonal", 1);
  const HhoSpace space(mesh, 1);
  const auto u0 = poisson_bootstrap(mean_curvature_problem(), space);
  EXPECT_TRUE(u0.has_zero_boundary(mesh));
  EXPECT_GT(u0.values().norm(), 0.);
}

TEST(LinearSolve, PoissonConvergesAtOrderKPlusOne) {
  const auto p = manufactured_poisson_problem();
  for (int k = 0; k <= 2; ++k) {
    std::vector<double> h, e;
    for (std::size_t n : {4, 8, 16}) {
      const auto mesh = generate_cartesian(n);
      const HhoSpace space(mesh, k);
      h.push_back(1. / n);
      e.push_back(relative_gradient_error(space, solve_linear_hho(p, space), p.exact_gradient));
    }
    EXPECT_NEAR(test::pairwise_rates(h, e).back(), k + 1., 0.2) << "k=" << k;
  }
}

TEST(Newton, MeanCurvatureConvergesQuickly) {
  const auto p = mean_curvature_problem();
  for (const auto& family : test::families()) {
    const auto mesh = test::family_mesh(family, 1);
    for (int k = 1; k <= 3; ++k) {
      const HhoSpace space(mesh, k);
      const auto result = newton_solve(p, space);
      const auto& report = result.report;
      EXPECT_TRUE(report.converged);
      EXPECT_LE(report.iterations, 4) << family << " k=" << k;
      EXPECT_EQ(report.increments.size(), static_cast<std::size_t>(report.iterations));
      for (double inc : report.increments) EXPECT_GE(inc, 0.);
      EXPECT_LE(report.increments.back(), 1e-8);
      EXPECT_TRUE(result.solution.has_zero_boundary(mesh));

      // converged residual at round-off, Galerkin orthogonality for random test vectors
      const VectorXd r = residual(p, space, result.solution);
      EXPECT_LT(r.lpNorm<Eigen::Infinity>(), 1e-10) << family << " k=" << k;
      std::mt19937 rng(10 + k);
      for (int t = 0; t < 20; ++t) {
        const auto v = test::random_hybrid(space, rng);
        EXPECT_LE(std::abs(r.dot(v.values())), 1e-9 * discrete_norm_1h(space, v));
      }
    }
  }
}

// J(u^n) delta = -r(u^n) is the full-step form N~(u^n; u^n + delta) - N~(u^n; u^n) + N(u^n) = 0.
TEST(Newton, IncrementFormMatchesFullStepForm) {
  const auto p = mean_curvature_problem();
  const auto mesh = test::family_mesh("triangular", 1);
  const HhoSpace space(mesh, 2);
  HybridVector u = poisson_bootstrap(p, space);
  for (int it = 0; it < 3; ++it) {
    const SparseMatrix J = jacobian(p, space, u);
    const VectorXd r = residual(p, space, u);
    const auto delta = solve_condensed(space, condensed_newton_system(p, space, u));
    const VectorXd full_step = J * (u + delta).values() - J * u.values() + r;
    EXPECT_LT(full_step.norm(), 1e-10 * std::max(1., r.norm()));
    u += delta;
    EXPECT_TRUE(u.has_zero_boundary(mesh));
  }
}

TEST(Newton, LinearProblemConvergesInOneIteration) {
  const auto p = manufactured_poisson_problem();
  std::mt19937 rng(12);
  for (const auto& family : test::families()) {
    const auto mesh = test::family_mesh(family, 2);
    for (int k = 0; k <= 3; ++k) {
      const HhoSpace space(mesh, k);
      const auto direct = solve_linear_hho(p, space);
      for (int start = 0; start < 3; ++start) {
        const auto start_point = test::random_hybrid(space, rng, 10.);
        const auto result = newton_solve(p, space, {}, start_point);
        EXPECT_EQ(result.report.iterations, 1) << family << " k=" << k;
        // round-off of one solve scales with the distance travelled
        EXPECT_LT(discrete_norm_1h(space, result.solution - direct),
                  1e-10 * (discrete_norm_1h(space, direct) + discrete_norm_1h(space, start_point)))
          << family << " k=" << k;
      }
    }
  }
}

TEST(Newton, IncrementTestAloneNeedsAConfirmingStep) {
  const auto p = manufactured_poisson_problem();
  const auto mesh = generate_cartesian(8);
  const HhoSpace space(mesh, 2);
  std::mt19937 rng(12);
  NewtonOptions options;
  options.residual_tolerance = 0.;
  const auto result = newton_solve(p, space, options, test::random_hybrid(space, rng));
  // the first update lands on the solution; the second confirms it at round-off
  ASSERT_EQ(result.report.iterations, 2);
  EXPECT_LT(result.report.increments[1], 1e-12);

  const auto again = newton_solve(p, space, {}, solve_linear_hho(p, space));
  EXPECT_LE(again.report.iterations, 1);

  // the residual test also applies to the last allowed update
  NewtonOptions single;
  single.max_iterations = 1;
  EXPECT_EQ(newton_solve(p, space, single, test::random_hybrid(space, rng)).report.iterations, 1);
}

TEST(Newton, LineSearchReachesTheSameSolution) {
  const auto p = mean_curvature_problem();
  const auto mesh = generate_cartesian(4);
  const HhoSpace space(mesh, 1);
  NewtonOptions damped;
  damped.line_search = true;
  const auto a = newton_solve(p, space), b = newton_solve(p, space, damped);
  EXPECT_LT((a.solution - b.solution).values().norm(), 1e-9 * a.solution.values().norm());
}

TEST(Newton, NonConvergenceCarriesReport) {
  const auto p = mean_curvature_problem();
  const auto mesh = generate_cartesian(4);
  const HhoSpace space(mesh, 1);
  NewtonOptions one;
  one.max_iterations = 1;
  try {
    newton_solve(p, space, one);
    FAIL();
  } catch (const NewtonDivergedError& e) {
    EXPECT_EQ(e.kind(), ErrorKind::NewtonDiverged);
    EXPECT_EQ(e.report().iterations, 1);
    EXPECT_FALSE(e.report().converged);
  }
  one.tolerance = 0.;
  EXPECT_THROW(newton_solve(p, space, one), Error);
}
