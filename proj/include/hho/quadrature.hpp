// Quadrature on triangles, polygonal cells and straight faces.

#ifndef HHO_QUADRATURE_HPP
#define HHO_QUADRATURE_HPP

#include <cstddef>
#include <vector>

#include "hho/mesh.hpp"

namespace hho {

  /// Weighted point set exact for polynomials of total degree <= `degree`.
  struct QuadratureRule {
    std::vector<Vector2> points;
    std::vector<double> weights;
    int degree = 0;

    std::size_t size() const { return weights.size(); }
    double total_weight() const;
  };

  constexpr int max_triangle_degree = 20;
  constexpr int max_face_degree = 41;

  /// Gauss-Legendre nodes and weights on [0,1].
  void gauss_legendre_01(std::size_t n, std::vector<double>& nodes, std::vector<double>& weights);

  /// Rule on the reference triangle (0,0), (1,0), (0,1). Symmetric rules with positive weights
  /// for degree <= 6, a collapsed Gauss product rule above.
  QuadratureRule triangle_rule(int degree);

  /// Reference rule mapped affinely onto the triangle (a, b, c).
  QuadratureRule map_triangle(const QuadratureRule& reference, const Vector2& a, const Vector2& b, const Vector2& c);

  /// Centroid-fan rule on a mesh cell. Throws QuadratureError if the cell is not star-shaped
  /// with respect to its centroid.
  QuadratureRule cell_quadrature(const PolytopalMesh& mesh, const MeshGeometry& geometry, std::size_t cell, int degree);

  /// Same on a free-standing counterclockwise polygon.
  QuadratureRule polygon_quadrature(const std::vector<Vector2>& polygon, int degree);

  /// Gauss-Legendre rule with ceil((degree+1)/2) points on the segment [a, b].
  QuadratureRule segment_quadrature(const Vector2& a, const Vector2& b, int degree);

  QuadratureRule face_quadrature(const PolytopalMesh& mesh, std::size_t face, int degree);

} // namespace hho

#endif
