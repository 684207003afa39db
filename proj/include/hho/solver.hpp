// Assembly of the discrete nonlinear form and its linearization, static condensation onto
// interior faces, and the Newton iteration.

#ifndef HHO_SOLVER_HPP
#define HHO_SOLVER_HPP

#include <optional>
#include <vector>

#include <Eigen/Sparse>

#include "hho/errors.hpp"
#include "hho/hho.hpp"
#include "hho/problem.hpp"

namespace hho {

  using SparseMatrix = Eigen::SparseMatrix<double>;

  /// N_h(w; e) for every basis function e of U_{h,0}^k. Entries of boundary face DOFs are zero.
  VectorXd residual(const NonlinearProblem& problem, const HhoSpace& space, const HybridVector& w);

  /// Fully discrete linearized form at w, entry (e, d) = N~(w; d, e), on all DOFs of U_{h,0}^k.
  /// Rows and columns of boundary face DOFs are empty.
  SparseMatrix jacobian(const NonlinearProblem& problem, const HhoSpace& space, const HybridVector& w);

  /// Local residual and Jacobian of one cell in the local DOF order of HhoSpace::local_dofs.
  struct LocalSystem {
    VectorXd residual;
    MatrixXd jacobian;
  };
  LocalSystem assemble_local(const NonlinearProblem& problem, const HhoSpace& space, std::size_t cell,
                             const VectorXd& local_w, bool with_jacobian = true);

  /// Numbering of the unknowns that remain after eliminating boundary faces: every cell DOF
  /// and every interior face DOF.
  struct FreeDofs {
    std::vector<std::ptrdiff_t> face_index;   ///< per face: position among interior faces, or -1
    std::size_t n_interior_faces = 0;
  };
  FreeDofs free_dofs(const PolytopalMesh& mesh);

  /// Schur complement onto interior face DOFs and what is needed to recover the cell DOFs.
  struct CondensedSystem {
    SparseMatrix matrix;   ///< (n_interior_faces * (k+1)) square
    VectorXd rhs;
    FreeDofs numbering;
    /// Per cell: A_TT^{-1} b_T and A_TT^{-1} A_TF (columns follow the cell's local face order,
    /// boundary faces included but never used).
    std::vector<VectorXd> cell_rhs;
    std::vector<MatrixXd> cell_coupling;
    /// ||residual(w)|| at the linearization point; set by condensed_newton_system only.
    double residual_norm = 0.;

    /// Cell and face blocks of the full solution from the interior face solution.
    HybridVector recover(const HhoSpace& space, const VectorXd& faces) const;
  };

  /// Condenses J x = b (J from jacobian(), b a full-length vector) onto interior faces. The
  /// cell-cell blocks of J must be block diagonal. Throws CondensationFailure naming the cell
  /// when one of them is singular.
  CondensedSystem static_condense(const HhoSpace& space, const SparseMatrix& J, const VectorXd& b);

  /// Same result, built cell by cell from local systems without forming the global Jacobian:
  /// the condensed Newton system J(w) delta = -residual(w).
  CondensedSystem condensed_newton_system(const NonlinearProblem& problem, const HhoSpace& space, const HybridVector& w);

  /// Sparse direct solve of a condensed system (LDL^T when symmetric, LU otherwise) followed by
  /// recovery. Throws SolverFailure when the factorization fails.
  HybridVector solve_condensed(const HhoSpace& space, const CondensedSystem& system);

  /// Reference route: sparse LU on all cell and interior face DOFs.
  HybridVector solve_uncondensed(const HhoSpace& space, const SparseMatrix& J, const VectorXd& b);

  /// One linearization step from zero: the exact discrete solution when the problem is linear.
  HybridVector solve_linear_hho(const NonlinearProblem& problem, const HhoSpace& space);

  struct NewtonOptions {
    /// Stop when ||G_h delta|| <= tolerance ||G_h u||, ...
    double tolerance = 1e-8;
    /// ... or when ||residual(u)|| <= residual_tolerance ||residual(u^0)||.
    double residual_tolerance = 1e-12;
    int max_iterations = 25;
    /// Halve the step until the residual norm decreases (at most 20 times).
    bool line_search = false;
  };

  struct NewtonReport {
    /// Number of linear solves after the bootstrap; 0 if the start already has zero residual.
    int iterations = 0;
    /// ||G_h(u^{n+1} - u^n)|| / ||G_h u^{n+1}|| per iteration.
    std::vector<double> increments;
    bool converged = false;
  };

  struct NewtonResult {
    HybridVector solution;
    NewtonReport report;
  };

  class NewtonDivergedError : public Error {
  public:
    NewtonDivergedError(const std::string& what, NewtonReport report)
      : Error(ErrorKind::NewtonDiverged, what), m_report(std::move(report)) {}
    const NewtonReport& report() const { return m_report; }

  private:
    NewtonReport m_report;
  };

  /// The Poisson bootstrap: HHO solution of -Laplace u = -f(x, 0, 0).
  HybridVector poisson_bootstrap(const NonlinearProblem& problem, const HhoSpace& space);

  /// Newton iteration J(u^n) delta = -residual(u^n), u^{n+1} = u^n + delta, started from
  /// `initial` or from the Poisson bootstrap. Throws NewtonDivergedError after max_iterations.
  NewtonResult newton_solve(const NonlinearProblem& problem, const HhoSpace& space, const NewtonOptions& options = {},
                            const std::optional<HybridVector>& initial = std::nullopt);

} // namespace hho

#endif
