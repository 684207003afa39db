// Strongly nonlinear elliptic problems -div a(x,u,grad u) + f(x,u,grad u) = 0 on (0,1)^2 with
// homogeneous Dirichlet data, described by pointwise callbacks.

#ifndef HHO_PROBLEM_HPP
#define HHO_PROBLEM_HPP

#include <functional>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "hho/basis.hpp"
#include "hho/hho.hpp"
#include "hho/kernels.hpp"

namespace hho {

  using Matrix2 = Eigen::Matrix2d;

  /// Callbacks take (x, y, z) = (point, value of u, gradient of u).
  struct NonlinearProblem {
    template <class R>
    using Callback = std::function<R(const Vector2& x, double y, const Vector2& z)>;

    std::string name;
    Callback<Vector2> a;
    Callback<Matrix2> a_z;
    Callback<Vector2> a_y;   ///< empty: identically zero
    Callback<double> f;
    Callback<Vector2> f_z;   ///< empty: identically zero
    Callback<double> f_y;    ///< empty: identically zero

    ScalarField exact_solution;   ///< optional
    VectorField exact_gradient;   ///< optional

    /// Optional batched evaluation of a flux that depends on z only. When set, it replaces
    /// a and a_z in assembly.
    kernels::MeanCurvatureFn gradient_flux = nullptr;
  };

  /// a(z) = z / sqrt(1+|z|^2), f(x,y,z) = -source(x), with the source manufactured from
  /// u = x(1-x)y(1-y).
  NonlinearProblem mean_curvature_problem();

  /// a(z) = z, f(x,y,z) = -load(x): the Dirichlet Poisson problem -Laplace u = load.
  NonlinearProblem poisson_problem(ScalarField load);

  /// Poisson problem with the same manufactured solution as the mean-curvature problem.
  NonlinearProblem manufactured_poisson_problem();

  /// Registered problems by name ("mean-curvature", "poisson"). Throws ConfigError otherwise.
  NonlinearProblem make_problem(const std::string& name);
  std::vector<std::string> problem_names();

  /// Samples random states and checks that a_z is symmetric and that a_z, a_y, f_z, f_y agree
  /// with central differences of a and f. Throws InvalidArgument describing the first failure.
  void validate_problem(const NonlinearProblem& problem, std::mt19937& rng, int samples = 20, double tolerance = 1e-5);

} // namespace hho

#endif
