#include "hho/quadrature.hpp"

#include <cmath>
#include <numbers>

#include "hho/errors.hpp"

namespace hho {

  double QuadratureRule::total_weight() const {
    double s = 0.;
    for (double w : weights) s += w;
    return s;
  }

  void gauss_legendre_01(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.);
    weights.assign(n, 0.);
    // Newton iteration on P_n from the Chebyshev-like initial guesses, nodes symmetric about 0.
    const std::size_t m = (n + 1) / 2;
    for (std::size_t i = 0; i < m; ++i) {
      double x = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) / (static_cast<double>(n) + 0.5));
      double dp = 1.;
      for (int it = 0; it < 100; ++it) {
        double p0 = 1., p1 = x;
        for (std::size_t k = 2; k <= n; ++k) {
          const double p2 = ((2. * k - 1.) * x * p1 - (k - 1.) * p0) / static_cast<double>(k);
          p0 = p1;
          p1 = p2;
        }
        if (n == 1) p0 = 1.;
        dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.);
        const double dx = p1 / dp;
        x -= dx;
        if (std::abs(dx) < 1e-16) break;
      }
      // recompute the derivative at the converged node
      double p0 = 1., p1 = x;
      for (std::size_t k = 2; k <= n; ++k) {
        const double p2 = ((2. * k - 1.) * x * p1 - (k - 1.) * p0) / static_cast<double>(k);
        p0 = p1;
        p1 = p2;
      }
      dp = static_cast<double>(n) * (x * p1 - p0) / (x * x - 1.);
      const double w = 2. / ((1. - x * x) * dp * dp);
      nodes[i] = 0.5 * (1. - x);
      nodes[n - 1 - i] = 0.5 * (1. + x);
      weights[i] = 0.5 * w;
      weights[n - 1 - i] = 0.5 * w;
    }
  }

  namespace {

    struct Orbit {
      int kind;    // 1: centroid, 3: (a,a,1-2a), 6: (a,b,1-a-b)
      double a, b;
      double weight;  // normalized so that weights sum to one
    };

    void push_orbits(QuadratureRule& rule, std::initializer_list<Orbit> orbits) {
      auto add = [&](double l1, double l2, double w) {
        rule.points.emplace_back(l1, l2);
        rule.weights.push_back(0.5 * w);
      };
      for (const auto& o : orbits) {
        if (o.kind == 1) {
          add(1. / 3., 1. / 3., o.weight);
        } else if (o.kind == 3) {
          const double c = 1. - 2. * o.a;
          add(o.a, o.a, o.weight);
          add(o.a, c, o.weight);
          add(c, o.a, o.weight);
        } else {
          const double c = 1. - o.a - o.b;
          add(o.a, o.b, o.weight);
          add(o.b, o.a, o.weight);
          add(o.a, c, o.weight);
          add(c, o.a, o.weight);
          add(o.b, c, o.weight);
          add(c, o.b, o.weight);
        }
      }
    }

    QuadratureRule collapsed_rule(int degree) {
      // Duffy map (s,t) -> (s, (1-s) t) with Jacobian (1-s): polynomial degree <= degree+1 in s.
      const std::size_t n = static_cast<std::size_t>(degree + 3) / 2;
      std::vector<double> x, w;
      gauss_legendre_01(n, x, w);
      QuadratureRule rule;
      rule.degree = degree;
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < n; ++j) {
          rule.points.emplace_back(x[i], (1. - x[i]) * x[j]);
          rule.weights.push_back(w[i] * w[j] * (1. - x[i]));
        }
      }
      return rule;
    }

  } // namespace

  QuadratureRule triangle_rule(int degree) {
    if (degree < 0 || degree > max_triangle_degree) {
      throw Error(ErrorKind::UnsupportedDegree, "triangle rule of degree " + std::to_string(degree) + " (supported 0.." + std::to_string(max_triangle_degree) + ")");
    }
    QuadratureRule rule;
    rule.degree = degree;
    switch (degree) {
    case 0:
    case 1:
      push_orbits(rule, {{1, 0., 0., 1.}});
      break;
    case 2:
      push_orbits(rule, {{3, 1. / 6., 0., 1. / 3.}});
      break;
    case 3:
    case 4:
      push_orbits(rule, {{3, 0.445948490915965, 0., 0.223381589678011},
                         {3, 0.091576213509771, 0., 0.109951743655322}});
      break;
    case 5:
      push_orbits(rule, {{1, 0., 0., 0.225},
                         {3, 0.470142064105115, 0., 0.132394152788506},
                         {3, 0.101286507323456, 0., 0.125939180544827}});
      break;
    case 6:
      push_orbits(rule, {{3, 0.063089014491502, 0., 0.050844906370207},
                         {3, 0.249286745170910, 0., 0.116786275726379},
                         {6, 0.053145049844817, 0.310352451033784, 0.082851075618374}});
      break;
    default:
      return collapsed_rule(degree);
    }
    return rule;
  }

  QuadratureRule map_triangle(const QuadratureRule& reference, const Vector2& a, const Vector2& b, const Vector2& c) {
    const Vector2 e1 = b - a, e2 = c - a;
    const double jac = std::abs(e1.x() * e2.y() - e1.y() * e2.x());
    QuadratureRule rule;
    rule.degree = reference.degree;
    rule.points.reserve(reference.size());
    rule.weights.reserve(reference.size());
    for (std::size_t q = 0; q < reference.size(); ++q) {
      const Vector2& r = reference.points[q];
      rule.points.push_back(a + r.x() * e1 + r.y() * e2);
      rule.weights.push_back(reference.weights[q] * jac);
    }
    return rule;
  }

  namespace {

    QuadratureRule fan_rule(const Vector2& centroid, const std::vector<Vector2>& polygon, int degree, const char* what) {
      const QuadratureRule reference = triangle_rule(degree);
      QuadratureRule rule;
      rule.degree = degree;
      rule.points.reserve(reference.size() * polygon.size());
      rule.weights.reserve(reference.size() * polygon.size());
      for (std::size_t i = 0; i < polygon.size(); ++i) {
        const Vector2& a = polygon[i];
        const Vector2& b = polygon[(i + 1) % polygon.size()];
        const Vector2 e1 = a - centroid, e2 = b - centroid;
        const double a2 = e1.x() * e2.y() - e1.y() * e2.x();
        if (!(a2 > 0.)) {
          throw Error(ErrorKind::QuadratureError, std::string(what) + " is not star-shaped with respect to its centroid");
        }
        const auto sub = map_triangle(reference, centroid, a, b);
        rule.points.insert(rule.points.end(), sub.points.begin(), sub.points.end());
        rule.weights.insert(rule.weights.end(), sub.weights.begin(), sub.weights.end());
      }
      return rule;
    }

  } // namespace

  QuadratureRule cell_quadrature(const PolytopalMesh& mesh, const MeshGeometry& geometry, std::size_t cell, int degree) {
    std::vector<Vector2> polygon;
    polygon.reserve(mesh.cell(cell).size());
    for (auto v : mesh.cell(cell)) polygon.push_back(mesh.vertex(v));
    const std::string what = "cell " + std::to_string(cell);
    return fan_rule(geometry.cells[cell].centroid, polygon, degree, what.c_str());
  }

  QuadratureRule polygon_quadrature(const std::vector<Vector2>& polygon, int degree) {
    const Vector2& o = polygon[0];
    double a2 = 0.;
    Vector2 moment = Vector2::Zero();
    for (std::size_t i = 1; i + 1 < polygon.size(); ++i) {
      const Vector2 p = polygon[i] - o, q = polygon[i + 1] - o;
      const double w = p.x() * q.y() - p.y() * q.x();
      a2 += w;
      moment += w * (p + q);
    }
    if (!(a2 > 0.)) throw Error(ErrorKind::QuadratureError, "polygon is degenerate or clockwise");
    return fan_rule(o + moment / (3. * a2), polygon, degree, "polygon");
  }

  QuadratureRule segment_quadrature(const Vector2& a, const Vector2& b, int degree) {
    if (degree < 0 || degree > max_face_degree) {
      throw Error(ErrorKind::UnsupportedDegree, "face rule of degree " + std::to_string(degree) + " (supported 0.." + std::to_string(max_face_degree) + ")");
    }
    const std::size_t n = static_cast<std::size_t>(degree + 2) / 2;
    std::vector<double> x, w;
    gauss_legendre_01(n, x, w);
    const double length = (b - a).norm();
    QuadratureRule rule;
    rule.degree = degree;
    for (std::size_t i = 0; i < n; ++i) {
      rule.points.push_back(a + x[i] * (b - a));
      rule.weights.push_back(w[i] * length);
    }
    return rule;
  }

  QuadratureRule face_quadrature(const PolytopalMesh& mesh, std::size_t face, int degree) {
    const Face& f = mesh.face(face);
    return segment_quadrature(mesh.vertex(f.v0), mesh.vertex(f.v1), degree);
  }

} // namespace hho
