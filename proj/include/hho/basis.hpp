// Scaled monomial bases on cells and faces, their Gram matrices and L2 projectors.

#ifndef HHO_BASIS_HPP
#define HHO_BASIS_HPP

#include <array>
#include <cstddef>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "hho/mesh.hpp"
#include "hho/quadrature.hpp"

namespace hho {

  using Eigen::MatrixXd;
  using Eigen::VectorXd;

  using ScalarField = std::function<double(const Vector2&)>;

  /// Highest polynomial degree a basis accepts.
  constexpr int max_basis_degree = 31;

  /// Dimension of the bivariate polynomials of total degree <= l.
  constexpr std::size_t dim_cell(int l) { return l < 0 ? 0 : static_cast<std::size_t>((l + 1) * (l + 2) / 2); }
  /// Dimension of the univariate polynomials of degree <= k.
  constexpr std::size_t dim_face(int k) { return k < 0 ? 0 : static_cast<std::size_t>(k + 1); }

  /// phi_i(x) = ((x - x_T)/h_T)^a ((y - y_T)/h_T)^b with a + b <= degree, graded-lexicographic
  /// (x^d, x^{d-1} y, ..., y^d for d = 0, 1, ...). The lower-degree basis is a prefix.
  ///
  /// With orthonormalize(), the functions are replaced by the lower-triangular (Gram-Schmidt)
  /// combination that is L2(T)-orthonormal; the prefix property is preserved.
  class CellBasis {
  public:
    CellBasis(const Vector2& center, double scale, int degree);

    int degree() const { return m_degree; }
    std::size_t size() const { return m_powers.size(); }
    const Vector2& center() const { return m_center; }
    double scale() const { return m_scale; }
    const std::vector<std::array<int, 2>>& powers() const { return m_powers; }
    bool orthonormalized() const { return m_transform.has_value(); }

    /// Replace the monomials by an L2-orthonormal family computed with `rule`.
    void orthonormalize(const QuadratureRule& rule);

    VectorXd values(const Vector2& x) const;
    /// Row i holds grad phi_i(x).
    Eigen::Matrix<double, Eigen::Dynamic, 2> gradients(const Vector2& x) const;

    /// Values at all rule points, (npts x size) column-major.
    MatrixXd values(const QuadratureRule& rule) const;
    /// d/dx and d/dy at all rule points, each (npts x size).
    std::array<MatrixXd, 2> gradients(const QuadratureRule& rule) const;

  private:
    Vector2 m_center;
    double m_scale;
    int m_degree;
    std::vector<std::array<int, 2>> m_powers;
    std::optional<MatrixXd> m_transform;
  };

  /// psi_j(x) = (s/h_F)^j, s the arc-length coordinate measured from the face midpoint along
  /// the owner's traversal direction.
  class FaceBasis {
  public:
    FaceBasis(const Vector2& midpoint, const Vector2& tangent, double length, int degree);

    int degree() const { return m_degree; }
    std::size_t size() const { return static_cast<std::size_t>(m_degree + 1); }
    double length() const { return m_length; }

    double coordinate(const Vector2& x) const { return (x - m_midpoint).dot(m_tangent); }

    VectorXd values(const Vector2& x) const;
    MatrixXd values(const QuadratureRule& rule) const;

  private:
    Vector2 m_midpoint;
    Vector2 m_tangent;
    double m_length;
    int m_degree;
  };

  CellBasis make_cell_basis(const MeshGeometry& geometry, std::size_t cell, int degree);
  FaceBasis make_face_basis(const MeshGeometry& geometry, std::size_t face, int degree);

  /// Coefficient vector in a given basis.
  template <class Basis>
  struct Polynomial {
    Basis basis;
    VectorXd coefficients;

    double operator()(const Vector2& x) const { return basis.values(x).dot(coefficients); }
  };

  using CellPolynomial = Polynomial<CellBasis>;
  using FacePolynomial = Polynomial<FaceBasis>;

  /// M_ij = int_T phi_i phi_j. `rule` must be exact to degree 2l.
  MatrixXd cell_mass_matrix(const CellBasis& basis, const QuadratureRule& rule);
  /// K_ij = int_T grad phi_i . grad phi_j.
  MatrixXd cell_stiffness_matrix(const CellBasis& basis, const QuadratureRule& rule);
  MatrixXd face_mass_matrix(const FaceBasis& basis, const QuadratureRule& rule);

  /// L2-orthogonal projection onto the span of `basis`. Throws BasisDegenerate if the mass
  /// matrix is not positive definite.
  CellPolynomial l2_project_cell(const ScalarField& f, const CellBasis& basis, const QuadratureRule& rule);
  FacePolynomial l2_project_face(const ScalarField& f, const FaceBasis& basis, const QuadratureRule& rule);

  /// Solve M x = b for a symmetric positive definite Gram matrix, or throw BasisDegenerate.
  MatrixXd solve_spd(const MatrixXd& mass, const MatrixXd& rhs, const char* what);

} // namespace hho

#endif
