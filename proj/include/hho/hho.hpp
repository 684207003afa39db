// Hybrid discretization layer: DOF layout, hybrid vectors, local reconstructions,
// stabilization, interpolation and discrete norms.

#ifndef HHO_HHO_HPP
#define HHO_HHO_HPP

#include <cstddef>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "hho/basis.hpp"
#include "hho/mesh.hpp"
#include "hho/quadrature.hpp"

namespace hho {

  using VectorField = std::function<Vector2(const Vector2&)>;

  /// Global numbering: all cell blocks first (cell-major), then all face blocks (face-major).
  struct DofLayout {
    int degree = 0;
    std::size_t n_cells = 0;
    std::size_t n_faces = 0;

    std::size_t cell_dofs() const { return dim_cell(degree); }
    std::size_t face_dofs() const { return dim_face(degree); }
    std::size_t cell_offset(std::size_t c) const { return c * cell_dofs(); }
    std::size_t face_offset(std::size_t f) const { return n_cells * cell_dofs() + f * face_dofs(); }
    std::size_t size() const { return n_cells * cell_dofs() + n_faces * face_dofs(); }
  };

  /// Element of U_h^k: one degree-k polynomial per cell and one per face.
  class HybridVector {
  public:
    HybridVector() = default;
    explicit HybridVector(const DofLayout& layout) : m_layout(layout), m_values(VectorXd::Zero(layout.size())) {}
    HybridVector(const DofLayout& layout, VectorXd values);

    const DofLayout& layout() const { return m_layout; }
    int degree() const { return m_layout.degree; }

    VectorXd& values() { return m_values; }
    const VectorXd& values() const { return m_values; }

    auto cell_block(std::size_t c) { return m_values.segment(m_layout.cell_offset(c), m_layout.cell_dofs()); }
    auto cell_block(std::size_t c) const { return m_values.segment(m_layout.cell_offset(c), m_layout.cell_dofs()); }
    auto face_block(std::size_t f) { return m_values.segment(m_layout.face_offset(f), m_layout.face_dofs()); }
    auto face_block(std::size_t f) const { return m_values.segment(m_layout.face_offset(f), m_layout.face_dofs()); }

    /// Membership in U_{h,0}^k.
    bool has_zero_boundary(const PolytopalMesh& mesh) const;
    void zero_boundary(const PolytopalMesh& mesh);

    HybridVector& operator+=(const HybridVector& other);
    HybridVector operator+(const HybridVector& other) const;
    HybridVector operator-(const HybridVector& other) const;
    HybridVector operator*(double s) const;

  private:
    DofLayout m_layout;
    VectorXd m_values;
  };

  /// Cell-local geometric data needed to build operators and integrate on one cell.
  struct CellContext {
    struct FaceData {
      std::size_t face;
      int orientation;
      Vector2 normal;  ///< outward from this cell
      double length;
      FaceBasis basis;
      QuadratureRule rule;
    };

    std::size_t cell;
    int degree;          ///< k
    double diameter;     ///< h_T
    CellBasis basis;     ///< degree k+1; its first dim_cell(k) functions span P^k(T)
    QuadratureRule rule;
    std::vector<FaceData> faces;

    std::size_t cell_dofs() const { return dim_cell(degree); }
    std::size_t face_dofs() const { return dim_face(degree); }
    std::size_t local_size() const { return cell_dofs() + faces.size() * face_dofs(); }
    std::size_t face_local_offset(std::size_t i) const { return cell_dofs() + i * face_dofs(); }
  };

  /// Per-cell operators, each acting on the local DOF block (v_T, v_F for F in F_T).
  struct LocalOperators {
    MatrixXd gradient;       ///< (2 dim P^k) x local: x-component coefficients then y-component
    MatrixXd potential;      ///< dim P^{k+1} x local
    MatrixXd stabilization;  ///< local x local, symmetric positive semidefinite
    MatrixXd mass;           ///< Gram matrix of P^k(T)
  };

  CellContext make_cell_context(const PolytopalMesh& mesh, const MeshGeometry& geometry, std::size_t cell,
                                int degree, int quadrature_degree, bool orthonormal = false);

  /// (G v, tau)_T = (grad v_T, tau)_T + sum_F (v_F - v_T, tau.n_TF)_F for tau in P^k(T)^2.
  MatrixXd build_gradient_reconstruction(const CellContext& ctx);
  /// (grad R v, grad w)_T = (grad v_T, grad w)_T + sum_F (v_F - v_T, grad w.n_TF)_F,
  /// (R v, 1)_T = (v_T, 1)_T, through one Lagrange multiplier.
  MatrixXd build_potential_reconstruction(const CellContext& ctx);
  /// s_T(u,v) = h_T^{-1} sum_F (pi_F(u_F - u_T - (R u - pi_T R u)), pi_F(v_F - v_T - (R v - pi_T R v)))_F.
  MatrixXd build_stabilization(const CellContext& ctx, const MatrixXd& potential);

  LocalOperators build_local_operators(const CellContext& ctx);

  /// Default quadrature degree for forms with a nonlinear integrand.
  constexpr int default_quadrature_degree(int k) { return 2 * (k + 1) + 2; }

  struct SpaceOptions {
    int quadrature_degree = -1;   ///< -1: default_quadrature_degree(k)
    bool orthonormal = false;     ///< Gram-Schmidt cell bases
    unsigned threads = 1;         ///< worker threads for the per-cell operator build
  };

  /// Discrete space U_h^k over a mesh, with every cell's local operators built and cached.
  /// Immutable after construction; safe to share between threads.
  class HhoSpace {
  public:
    HhoSpace(const PolytopalMesh& mesh, int degree, SpaceOptions options = {});

    const PolytopalMesh& mesh() const { return *m_mesh; }
    const MeshGeometry& geometry() const { return m_geometry; }
    int degree() const { return m_degree; }
    int quadrature_degree() const { return m_quadrature_degree; }
    const SpaceOptions& options() const { return m_options; }
    const DofLayout& layout() const { return m_layout; }

    const LocalOperators& operators(std::size_t cell) const { return m_operators[cell]; }
    CellContext context(std::size_t cell) const;

    /// Global indices of the local DOF block of a cell, in local order.
    std::vector<std::size_t> local_dofs(std::size_t cell) const;
    /// Gather the local block of a global vector.
    VectorXd restrict_to_cell(const HybridVector& v, std::size_t cell) const;

    HybridVector zero() const { return HybridVector(m_layout); }

  private:
    const PolytopalMesh* m_mesh;
    MeshGeometry m_geometry;
    int m_degree;
    int m_quadrature_degree;
    SpaceOptions m_options;
    DofLayout m_layout;
    std::vector<LocalOperators> m_operators;
  };

  /// I_h^k v: L2 projections on every cell and face. With `zero_boundary`, boundary face blocks
  /// are set to zero afterwards.
  HybridVector interpolate(const HhoSpace& space, const ScalarField& v, bool zero_boundary = false);

  /// Local interpolant I_T^k restricted to one cell context.
  VectorXd interpolate_local(const CellContext& ctx, const ScalarField& v);

  /// (sum_T ||G_T v||_T^2 + sum_{F in F_T} h_F^{-1} ||v_F - v_T||_F^2)^{1/2}
  double discrete_norm_1h(const HhoSpace& space, const HybridVector& v);

  /// (sum_T ||grad v_T||_{L^p}^p + sum_{F in F_T} h_F^{1-p} ||v_F - v_T||_{L^p(F)}^p)^{1/p}
  double discrete_norm_1ph(const HhoSpace& space, const HybridVector& v, double p);

  /// ||G_h v|| over the whole domain.
  double gradient_norm(const HhoSpace& space, const HybridVector& v);

  /// Cellwise G_T v, evaluable anywhere in the owning cell.
  class PiecewiseGradient {
  public:
    PiecewiseGradient(const HhoSpace& space, std::vector<MatrixXd> coefficients)
      : m_space(&space), m_coefficients(std::move(coefficients)) {}

    /// Coefficients of cell `c`: column 0 is the x-component, column 1 the y-component.
    const MatrixXd& coefficients(std::size_t c) const { return m_coefficients[c]; }
    Vector2 operator()(std::size_t cell, const Vector2& x) const;

  private:
    const HhoSpace* m_space;
    std::vector<MatrixXd> m_coefficients;
  };

  PiecewiseGradient reconstruct_gradient_global(const HhoSpace& space, const HybridVector& v);

  /// Split [0, n) into `threads` contiguous chunks and run fn(begin, end) on each.
  void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t, std::size_t)>& fn);

} // namespace hho

#endif
