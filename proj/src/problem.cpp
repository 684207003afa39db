#include "hho/problem.hpp"

#include <cmath>
#include <sstream>

#include "hho/errors.hpp"

namespace hho {

  namespace {

    double bubble(const Vector2& p) { return p.x() * (1 - p.x()) * p.y() * (1 - p.y()); }

    Vector2 bubble_gradient(const Vector2& p) {
      return {(1 - 2 * p.x()) * p.y() * (1 - p.y()), p.x() * (1 - p.x()) * (1 - 2 * p.y())};
    }

    Matrix2 bubble_hessian(const Vector2& p) {
      const double xy = (1 - 2 * p.x()) * (1 - 2 * p.y());
      Matrix2 h;
      h << -2 * p.y() * (1 - p.y()), xy, xy, -2 * p.x() * (1 - p.x());
      return h;
    }

  } // namespace

  NonlinearProblem mean_curvature_problem() {
    NonlinearProblem p;
    p.name = "mean-curvature";
    p.a = [](const Vector2&, double, const Vector2& z) { return Vector2(z / std::sqrt(1. + z.squaredNorm())); };
    p.a_z = [](const Vector2&, double, const Vector2& z) {
      const double r = std::pow(1. + z.squaredNorm(), -1.5);
      Matrix2 m;
      m << 1. + z.y() * z.y(), -z.x() * z.y(), -z.x() * z.y(), 1. + z.x() * z.x();
      return Matrix2(r * m);
    };
    // -div(g / sqrt(q)) = -(Laplace u / sqrt(q) - g^T H g / q^{3/2}), q = 1 + |g|^2
    p.f = [](const Vector2& x, double, const Vector2&) {
      const Vector2 g = bubble_gradient(x);
      const Matrix2 h = bubble_hessian(x);
      const double q = 1. + g.squaredNorm();
      const double source = -(h.trace() / std::sqrt(q) - g.dot(h * g) / std::pow(q, 1.5));
      return -source;
    };
    p.exact_solution = bubble;
    p.exact_gradient = bubble_gradient;
    p.gradient_flux = kernels::active().mean_curvature;
    return p;
  }

  NonlinearProblem poisson_problem(ScalarField load) {
    NonlinearProblem p;
    p.name = "poisson";
    p.a = [](const Vector2&, double, const Vector2& z) { return z; };
    p.a_z = [](const Vector2&, double, const Vector2&) { return Matrix2(Matrix2::Identity()); };
    p.f = [load = std::move(load)](const Vector2& x, double, const Vector2&) { return -load(x); };
    return p;
  }

  NonlinearProblem manufactured_poisson_problem() {
    auto p = poisson_problem([](const Vector2& x) { return -bubble_hessian(x).trace(); });
    p.exact_solution = bubble;
    p.exact_gradient = bubble_gradient;
    return p;
  }

  std::vector<std::string> problem_names() { return {"mean-curvature", "poisson"}; }

  NonlinearProblem make_problem(const std::string& name) {
    if (name == "mean-curvature") return mean_curvature_problem();
    if (name == "poisson") return manufactured_poisson_problem();
    throw Error(ErrorKind::ConfigError, "unknown problem '" + name + "' (known: mean-curvature, poisson)");
  }

  void validate_problem(const NonlinearProblem& problem, std::mt19937& rng, int samples, double tolerance) {
    if (!problem.a || !problem.a_z || !problem.f) {
      throw Error(ErrorKind::InvalidArgument, "problem '" + problem.name + "' needs a, a_z and f");
    }
    std::uniform_real_distribution<double> unit(0., 1.), sym(-2., 2.);
    const double eps = 1e-6;
    auto fail = [&](const std::string& what, const Vector2& x, double y, const Vector2& z) {
      std::ostringstream os;
      os << "problem '" << problem.name << "': " << what << " at x=(" << x.x() << "," << x.y() << "), y=" << y
         << ", z=(" << z.x() << "," << z.y() << ")";
      throw Error(ErrorKind::InvalidArgument, os.str());
    };
    for (int s = 0; s < samples; ++s) {
      const Vector2 x(unit(rng), unit(rng));
      const double y = sym(rng);
      const Vector2 z(sym(rng), sym(rng));
      const Matrix2 az = problem.a_z(x, y, z);
      const double scale = 1. + az.norm();
      if (std::abs(az(0, 1) - az(1, 0)) > 1e-12 * scale) fail("a_z is not symmetric", x, y, z);

      Matrix2 fd_az;
      Vector2 fd_fz;
      for (int c = 0; c < 2; ++c) {
        Vector2 dz = Vector2::Zero();
        dz[c] = eps;
        fd_az.col(c) = (problem.a(x, y, z + dz) - problem.a(x, y, z - dz)) / (2 * eps);
        fd_fz[c] = (problem.f(x, y, z + dz) - problem.f(x, y, z - dz)) / (2 * eps);
      }
      const Vector2 fd_ay = (problem.a(x, y + eps, z) - problem.a(x, y - eps, z)) / (2 * eps);
      const double fd_fy = (problem.f(x, y + eps, z) - problem.f(x, y - eps, z)) / (2 * eps);

      if ((fd_az - az).norm() > tolerance * scale) fail("a_z disagrees with differences of a", x, y, z);
      const Vector2 ay = problem.a_y ? problem.a_y(x, y, z) : Vector2::Zero();
      if ((fd_ay - ay).norm() > tolerance * (1. + ay.norm())) fail("a_y disagrees with differences of a", x, y, z);
      const Vector2 fz = problem.f_z ? problem.f_z(x, y, z) : Vector2::Zero();
      if ((fd_fz - fz).norm() > tolerance * (1. + fz.norm())) fail("f_z disagrees with differences of f", x, y, z);
      const double fy = problem.f_y ? problem.f_y(x, y, z) : 0.;
      if (std::abs(fd_fy - fy) > tolerance * (1. + std::abs(fy))) fail("f_y disagrees with differences of f", x, y, z);
    }
  }

} // namespace hho
