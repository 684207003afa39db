#include "hho/basis.hpp"

#include <cmath>
#include <string>

#include "hho/errors.hpp"
#include "hho/kernels.hpp"

namespace hho {

  namespace {

    // p[0..degree] = t^j
    inline void powers_of(double t, int degree, double* p) {
      p[0] = 1.;
      for (int j = 1; j <= degree; ++j) p[j] = p[j - 1] * t;
    }

  } // namespace

  CellBasis::CellBasis(const Vector2& center, double scale, int degree)
    : m_center(center), m_scale(scale), m_degree(degree) {
    if (degree < 0) throw Error(ErrorKind::InvalidArgument, "cell basis degree must be >= 0");
    if (degree > max_basis_degree) throw Error(ErrorKind::UnsupportedDegree, "cell basis degree above " + std::to_string(max_basis_degree));
    if (!(scale > 0.)) throw Error(ErrorKind::BasisDegenerate, "cell basis scale must be positive");
    for (int d = 0; d <= degree; ++d) {
      for (int a = d; a >= 0; --a) m_powers.push_back({a, d - a});
    }
  }

  VectorXd CellBasis::values(const Vector2& x) const {
    double px[32], py[32];
    powers_of((x.x() - m_center.x()) / m_scale, m_degree, px);
    powers_of((x.y() - m_center.y()) / m_scale, m_degree, py);
    VectorXd v(size());
    for (std::size_t i = 0; i < size(); ++i) v[i] = px[m_powers[i][0]] * py[m_powers[i][1]];
    if (m_transform) return *m_transform * v;
    return v;
  }

  Eigen::Matrix<double, Eigen::Dynamic, 2> CellBasis::gradients(const Vector2& x) const {
    double px[32], py[32];
    powers_of((x.x() - m_center.x()) / m_scale, m_degree, px);
    powers_of((x.y() - m_center.y()) / m_scale, m_degree, py);
    Eigen::Matrix<double, Eigen::Dynamic, 2> g(size(), 2);
    for (std::size_t i = 0; i < size(); ++i) {
      const int a = m_powers[i][0], b = m_powers[i][1];
      g(i, 0) = a > 0 ? a * px[a - 1] * py[b] / m_scale : 0.;
      g(i, 1) = b > 0 ? b * px[a] * py[b - 1] / m_scale : 0.;
    }
    if (m_transform) return *m_transform * g;
    return g;
  }

  MatrixXd CellBasis::values(const QuadratureRule& rule) const {
    MatrixXd v(rule.size(), size());
    double px[32], py[32];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      powers_of((rule.points[q].x() - m_center.x()) / m_scale, m_degree, px);
      powers_of((rule.points[q].y() - m_center.y()) / m_scale, m_degree, py);
      for (std::size_t i = 0; i < size(); ++i) v(q, i) = px[m_powers[i][0]] * py[m_powers[i][1]];
    }
    if (m_transform) return v * m_transform->transpose();
    return v;
  }

  std::array<MatrixXd, 2> CellBasis::gradients(const QuadratureRule& rule) const {
    std::array<MatrixXd, 2> g{MatrixXd(rule.size(), size()), MatrixXd(rule.size(), size())};
    double px[32], py[32];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      powers_of((rule.points[q].x() - m_center.x()) / m_scale, m_degree, px);
      powers_of((rule.points[q].y() - m_center.y()) / m_scale, m_degree, py);
      for (std::size_t i = 0; i < size(); ++i) {
        const int a = m_powers[i][0], b = m_powers[i][1];
        g[0](q, i) = a > 0 ? a * px[a - 1] * py[b] / m_scale : 0.;
        g[1](q, i) = b > 0 ? b * px[a] * py[b - 1] / m_scale : 0.;
      }
    }
    if (m_transform) {
      g[0] = g[0] * m_transform->transpose();
      g[1] = g[1] * m_transform->transpose();
    }
    return g;
  }

  void CellBasis::orthonormalize(const QuadratureRule& rule) {
    m_transform.reset();
    const MatrixXd mass = cell_mass_matrix(*this, rule);
    Eigen::LLT<MatrixXd> llt(mass);
    if (llt.info() != Eigen::Success) throw Error(ErrorKind::BasisDegenerate, "mass matrix is not positive definite");
    // psi = L^{-1} phi is orthonormal and lower triangular in phi
    const MatrixXd lower = llt.matrixL();
    m_transform = lower.triangularView<Eigen::Lower>().solve(MatrixXd::Identity(size(), size()));
  }

  FaceBasis::FaceBasis(const Vector2& midpoint, const Vector2& tangent, double length, int degree)
    : m_midpoint(midpoint), m_tangent(tangent), m_length(length), m_degree(degree) {
    if (degree < 0) throw Error(ErrorKind::InvalidArgument, "face basis degree must be >= 0");
    if (degree > max_basis_degree) throw Error(ErrorKind::UnsupportedDegree, "face basis degree above " + std::to_string(max_basis_degree));
    if (!(length > 0.)) throw Error(ErrorKind::BasisDegenerate, "face length must be positive");
  }

  VectorXd FaceBasis::values(const Vector2& x) const {
    VectorXd v(size());
    powers_of(coordinate(x) / m_length, m_degree, v.data());
    return v;
  }

  MatrixXd FaceBasis::values(const QuadratureRule& rule) const {
    MatrixXd v(rule.size(), size());
    double p[64];
    for (std::size_t q = 0; q < rule.size(); ++q) {
      powers_of(coordinate(rule.points[q]) / m_length, m_degree, p);
      for (std::size_t j = 0; j < size(); ++j) v(q, j) = p[j];
    }
    return v;
  }

  CellBasis make_cell_basis(const MeshGeometry& geometry, std::size_t cell, int degree) {
    return CellBasis(geometry.cells[cell].centroid, geometry.cells[cell].diameter, degree);
  }

  FaceBasis make_face_basis(const MeshGeometry& geometry, std::size_t face, int degree) {
    const auto& f = geometry.faces[face];
    return FaceBasis(f.midpoint, f.tangent, f.length, degree);
  }

  MatrixXd cell_mass_matrix(const CellBasis& basis, const QuadratureRule& rule) {
    const MatrixXd phi = basis.values(rule);
    MatrixXd mass(basis.size(), basis.size());
    kernels::active().gram(phi.data(), basis.size(), rule.weights.data(), rule.size(), mass.data());
    return mass;
  }

  MatrixXd cell_stiffness_matrix(const CellBasis& basis, const QuadratureRule& rule) {
    const auto grad = basis.gradients(rule);
    const auto& k = kernels::active();
    MatrixXd stiffness(basis.size(), basis.size()), tmp(basis.size(), basis.size());
    k.gram(grad[0].data(), basis.size(), rule.weights.data(), rule.size(), stiffness.data());
    k.gram(grad[1].data(), basis.size(), rule.weights.data(), rule.size(), tmp.data());
    stiffness += tmp;
    return stiffness;
  }

  MatrixXd face_mass_matrix(const FaceBasis& basis, const QuadratureRule& rule) {
    const MatrixXd psi = basis.values(rule);
    MatrixXd mass(basis.size(), basis.size());
    kernels::active().gram(psi.data(), basis.size(), rule.weights.data(), rule.size(), mass.data());
    return mass;
  }

  MatrixXd solve_spd(const MatrixXd& mass, const MatrixXd& rhs, const char* what) {
    Eigen::LLT<MatrixXd> llt(mass);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::BasisDegenerate, std::string(what) + ": mass matrix is not positive definite");
    }
    return llt.solve(rhs);
  }

  namespace {

    template <class Basis>
    Polynomial<Basis> project(const ScalarField& f, const Basis& basis, const QuadratureRule& rule,
                              const MatrixXd& mass, const char* what) {
      const MatrixXd phi = basis.values(rule);
      VectorXd fw(rule.size());
      for (std::size_t q = 0; q < rule.size(); ++q) fw[q] = f(rule.points[q]) * rule.weights[q];
      const VectorXd b = phi.transpose() * fw;
      return {basis, solve_spd(mass, b, what)};
    }

  } // namespace

  CellPolynomial l2_project_cell(const ScalarField& f, const CellBasis& basis, const QuadratureRule& rule) {
    return project(f, basis, rule, cell_mass_matrix(basis, rule), "cell projection");
  }

  FacePolynomial l2_project_face(const ScalarField& f, const FaceBasis& basis, const QuadratureRule& rule) {
    return project(f, basis, rule, face_mass_matrix(basis, rule), "face projection");
  }

} // namespace hho
