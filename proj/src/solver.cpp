#include "hho/solver.hpp"

#include <cmath>
#include <sstream>

#include <Eigen/SparseCholesky>
#include <Eigen/SparseLU>

#include "hho/kernels.hpp"

namespace hho {

  namespace {

    struct CellPoints {
      MatrixXd phi;   // npts x dim P^k, same basis as the cached operators
      QuadratureRule rule;
    };

    CellPoints cell_points(const HhoSpace& space, std::size_t c) {
      const int k = space.degree();
      const auto& g = space.geometry().cells[c];
      CellBasis basis(g.centroid, g.diameter, k + 1);
      CellPoints out;
      out.rule = cell_quadrature(space.mesh(), space.geometry(), c, std::max(space.quadrature_degree(), 2 * (k + 1)));
      if (space.options().orthonormal) basis.orthonormalize(out.rule);
      out.phi = basis.values(out.rule).leftCols(dim_cell(k));
      return out;
    }

    [[noreturn]] void evaluation_failure(std::size_t cell, const Vector2& x, const std::string& what) {
      std::ostringstream os;
      os.precision(17);
      os << "cell " << cell << ", point (" << x.x() << ", " << x.y() << "): " << what;
      throw Error(ErrorKind::EvaluationError, os.str());
    }

    template <class Fn>
    auto guarded(std::size_t cell, const Vector2& x, const char* name, Fn&& fn) {
      try {
        return fn();
      } catch (const std::exception& e) {
        evaluation_failure(cell, x, std::string(name) + " threw: " + e.what());
      }
    }

    MatrixXd weighted_gram(const MatrixXd& phi, const VectorXd& c) {
      MatrixXd out(phi.cols(), phi.cols());
      kernels::active().gram(phi.data(), phi.cols(), c.data(), phi.rows(), out.data());
      return out;
    }

    VectorXd weighted_moments(const MatrixXd& phi, const VectorXd& c) {
      VectorXd out(phi.cols());
      kernels::active().moments(phi.data(), phi.cols(), c.data(), phi.rows(), out.data());
      return out;
    }

    bool interior(const FreeDofs& numbering, std::size_t face) { return numbering.face_index[face] >= 0; }

    struct CellSchur {
      MatrixXd matrix;
      VectorXd rhs;
    };

    // Eliminates the cell block of one local system A x = b (local DOF order), storing the
    // recovery data of the cell in `out`.
    CellSchur eliminate_cell(const HhoSpace& space, std::size_t c, const MatrixXd& A, const VectorXd& b,
                             CondensedSystem& out) {
      const std::size_t nT = space.layout().cell_dofs();
      const std::size_t nFL = A.rows() - nT;
      const Eigen::FullPivLU<MatrixXd> lu(A.topLeftCorner(nT, nT));
      if (!lu.isInvertible()) {
        throw Error(ErrorKind::CondensationFailure, "cell " + std::to_string(c) + ": singular cell block");
      }
      out.cell_rhs[c] = lu.solve(b.head(nT));
      out.cell_coupling[c] = lu.solve(A.topRightCorner(nT, nFL));
      return {A.bottomRightCorner(nFL, nFL) - A.bottomLeftCorner(nFL, nT) * out.cell_coupling[c],
              b.tail(nFL) - A.bottomLeftCorner(nFL, nT) * out.cell_rhs[c]};
    }

    void scatter_cell(const HhoSpace& space, std::size_t c, const CellSchur& local, CondensedSystem& out,
                      std::vector<Eigen::Triplet<double>>& triplets) {
      const std::size_t nF = space.layout().face_dofs();
      const auto& faces = space.mesh().cell_faces(c);
      for (std::size_t i = 0; i < faces.size(); ++i) {
        if (!interior(out.numbering, faces[i].face)) continue;
        const std::size_t gi = out.numbering.face_index[faces[i].face] * nF;
        out.rhs.segment(gi, nF) += local.rhs.segment(i * nF, nF);
        for (std::size_t j = 0; j < faces.size(); ++j) {
          if (!interior(out.numbering, faces[j].face)) continue;
          const std::size_t gj = out.numbering.face_index[faces[j].face] * nF;
          for (std::size_t r = 0; r < nF; ++r)
            for (std::size_t s = 0; s < nF; ++s) triplets.emplace_back(gi + r, gj + s, local.matrix(i * nF + r, j * nF + s));
        }
      }
    }

    CondensedSystem empty_condensed(const HhoSpace& space) {
      CondensedSystem out;
      out.numbering = free_dofs(space.mesh());
      const std::size_t n = out.numbering.n_interior_faces * space.layout().face_dofs();
      out.matrix.resize(n, n);
      out.rhs = VectorXd::Zero(n);
      out.cell_rhs.resize(space.mesh().n_cells());
      out.cell_coupling.resize(space.mesh().n_cells());
      return out;
    }

  } // namespace

  LocalSystem assemble_local(const NonlinearProblem& problem, const HhoSpace& space, std::size_t c,
                             const VectorXd& wl, bool with_jacobian) {
    const auto& ops = space.operators(c);
    const std::size_t nT = space.layout().cell_dofs();
    const CellPoints pts = cell_points(space, c);
    const MatrixXd& phi = pts.phi;
    const std::size_t np = pts.rule.size();
    const Eigen::Map<const VectorXd> w(pts.rule.weights.data(), np);

    const VectorXd g = ops.gradient * wl;
    const VectorXd y = phi * wl.head(nT), z1 = phi * g.head(nT), z2 = phi * g.tail(nT);

    VectorXd a1(np), a2(np), fv(np);
    VectorXd a11, a12, a21, a22, ay1, ay2, fz1, fz2, fy;
    if (with_jacobian) {
      a11.resize(np), a12.resize(np), a21.resize(np), a22.resize(np);
      if (problem.a_y) ay1.resize(np), ay2.resize(np);
      if (problem.f_z) fz1.resize(np), fz2.resize(np);
      if (problem.f_y) fy.resize(np);
    }

    if (problem.gradient_flux) {
      problem.gradient_flux(z1.data(), z2.data(), np, a1.data(), a2.data(), with_jacobian ? a11.data() : nullptr,
                            with_jacobian ? a12.data() : nullptr, with_jacobian ? a22.data() : nullptr);
      if (with_jacobian) a21 = a12;
    }
    for (std::size_t q = 0; q < np; ++q) {
      const Vector2& x = pts.rule.points[q];
      const Vector2 z(z1[q], z2[q]);
      if (!problem.gradient_flux) {
        const Vector2 a = guarded(c, x, "a", [&] { return problem.a(x, y[q], z); });
        a1[q] = a.x(), a2[q] = a.y();
        if (with_jacobian) {
          const Matrix2 az = guarded(c, x, "a_z", [&] { return problem.a_z(x, y[q], z); });
          a11[q] = az(0, 0), a12[q] = az(0, 1), a21[q] = az(1, 0), a22[q] = az(1, 1);
        }
      }
      fv[q] = guarded(c, x, "f", [&] { return problem.f(x, y[q], z); });
      if (with_jacobian) {
        if (problem.a_y) {
          const Vector2 v = guarded(c, x, "a_y", [&] { return problem.a_y(x, y[q], z); });
          ay1[q] = v.x(), ay2[q] = v.y();
        }
        if (problem.f_z) {
          const Vector2 v = guarded(c, x, "f_z", [&] { return problem.f_z(x, y[q], z); });
          fz1[q] = v.x(), fz2[q] = v.y();
        }
        if (problem.f_y) fy[q] = guarded(c, x, "f_y", [&] { return problem.f_y(x, y[q], z); });
      }
    }
    auto check = [&](const VectorXd& v, const char* name) {
      for (Eigen::Index q = 0; q < v.size(); ++q) {
        if (!std::isfinite(v[q])) evaluation_failure(c, pts.rule.points[q], std::string(name) + " is not finite");
      }
    };
    check(a1, "a"), check(a2, "a"), check(fv, "f");

    const auto Gx = ops.gradient.topRows(nT), Gy = ops.gradient.bottomRows(nT);
    LocalSystem out;
    out.residual = Gx.transpose() * weighted_moments(phi, w.cwiseProduct(a1)) +
                   Gy.transpose() * weighted_moments(phi, w.cwiseProduct(a2)) + ops.stabilization * wl;
    out.residual.head(nT) += weighted_moments(phi, w.cwiseProduct(fv));
    if (!with_jacobian) return out;

    check(a11, "a_z"), check(a12, "a_z"), check(a21, "a_z"), check(a22, "a_z");
    const MatrixXd A11 = weighted_gram(phi, w.cwiseProduct(a11)), A22 = weighted_gram(phi, w.cwiseProduct(a22));
    const MatrixXd A12 = weighted_gram(phi, w.cwiseProduct(a12));
    const MatrixXd A21 = a21 == a12 ? A12 : weighted_gram(phi, w.cwiseProduct(a21));
    out.jacobian = ops.stabilization;
    out.jacobian.noalias() += Gx.transpose() * (A11 * Gx + A12 * Gy);
    out.jacobian.noalias() += Gy.transpose() * (A21 * Gx + A22 * Gy);
    if (problem.a_y) {
      check(ay1, "a_y"), check(ay2, "a_y");
      out.jacobian.leftCols(nT).noalias() += Gx.transpose() * weighted_gram(phi, w.cwiseProduct(ay1));
      out.jacobian.leftCols(nT).noalias() += Gy.transpose() * weighted_gram(phi, w.cwiseProduct(ay2));
    }
    if (problem.f_z) {
      check(fz1, "f_z"), check(fz2, "f_z");
      out.jacobian.topRows(nT).noalias() += weighted_gram(phi, w.cwiseProduct(fz1)) * Gx;
      out.jacobian.topRows(nT).noalias() += weighted_gram(phi, w.cwiseProduct(fz2)) * Gy;
    }
    if (problem.f_y) {
      check(fy, "f_y");
      out.jacobian.topLeftCorner(nT, nT) += weighted_gram(phi, w.cwiseProduct(fy));
    }
    return out;
  }

  VectorXd residual(const NonlinearProblem& problem, const HhoSpace& space, const HybridVector& w) {
    const std::size_t n_cells = space.mesh().n_cells();
    std::vector<VectorXd> local(n_cells);
    parallel_for(n_cells, space.options().threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        local[c] = assemble_local(problem, space, c, space.restrict_to_cell(w, c), false).residual;
      }
    });
    VectorXd r = VectorXd::Zero(space.layout().size());
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto dofs = space.local_dofs(c);
      for (std::size_t i = 0; i < dofs.size(); ++i) r[dofs[i]] += local[c][i];
    }
    HybridVector masked(space.layout(), std::move(r));
    masked.zero_boundary(space.mesh());
    return masked.values();
  }

  SparseMatrix jacobian(const NonlinearProblem& problem, const HhoSpace& space, const HybridVector& w) {
    const std::size_t n_cells = space.mesh().n_cells();
    std::vector<MatrixXd> local(n_cells);
    parallel_for(n_cells, space.options().threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        local[c] = assemble_local(problem, space, c, space.restrict_to_cell(w, c), true).jacobian;
      }
    });
    const auto& mesh = space.mesh();
    const auto& layout = space.layout();
    std::vector<char> fixed(layout.size(), 0);
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
      if (!mesh.face(f).is_boundary()) continue;
      for (std::size_t i = 0; i < layout.face_dofs(); ++i) fixed[layout.face_offset(f) + i] = 1;
    }
    std::vector<Eigen::Triplet<double>> triplets;
    for (std::size_t c = 0; c < n_cells; ++c) {
      const auto dofs = space.local_dofs(c);
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        if (fixed[dofs[j]]) continue;
        for (std::size_t i = 0; i < dofs.size(); ++i) {
          if (!fixed[dofs[i]]) triplets.emplace_back(dofs[i], dofs[j], local[c](i, j));
        }
      }
    }
    SparseMatrix J(layout.size(), layout.size());
    J.setFromTriplets(triplets.begin(), triplets.end());
    return J;
  }

  FreeDofs free_dofs(const PolytopalMesh& mesh) {
    FreeDofs out;
    out.face_index.assign(mesh.n_faces(), -1);
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
      if (!mesh.face(f).is_boundary()) out.face_index[f] = static_cast<std::ptrdiff_t>(out.n_interior_faces++);
    }
    return out;
  }

  HybridVector CondensedSystem::recover(const HhoSpace& space, const VectorXd& faces) const {
    const std::size_t nF = space.layout().face_dofs();
    HybridVector x = space.zero();
    for (std::size_t f = 0; f < space.mesh().n_faces(); ++f) {
      if (numbering.face_index[f] >= 0) x.face_block(f) = faces.segment(numbering.face_index[f] * nF, nF);
    }
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      const auto& cfs = space.mesh().cell_faces(c);
      VectorXd local(cfs.size() * nF);
      for (std::size_t i = 0; i < cfs.size(); ++i) local.segment(i * nF, nF) = x.face_block(cfs[i].face);
      x.cell_block(c) = cell_rhs[c] - cell_coupling[c] * local;
    }
    return x;
  }

  CondensedSystem static_condense(const HhoSpace& space, const SparseMatrix& J, const VectorXd& b) {
    const std::size_t n = space.layout().size();
    if (static_cast<std::size_t>(J.rows()) != n || static_cast<std::size_t>(J.cols()) != n ||
        static_cast<std::size_t>(b.size()) != n) {
      throw Error(ErrorKind::InvalidArgument, "static_condense: system size does not match the DOF layout");
    }
    CondensedSystem out = empty_condensed(space);
    const std::size_t nT = space.layout().cell_dofs();
    const std::size_t cell_end = space.mesh().n_cells() * nT;
    std::vector<Eigen::Triplet<double>> triplets;
    std::vector<std::ptrdiff_t> local_of(n, -1);
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      const auto dofs = space.local_dofs(c);
      for (std::size_t i = 0; i < dofs.size(); ++i) local_of[dofs[i]] = static_cast<std::ptrdiff_t>(i);

      // Dense local block. Face-face entries of interior faces are shared by the two
      // neighbors, so only the cell's own rows and columns are taken from J here; the
      // global face-face part is added once below.
      MatrixXd A = MatrixXd::Zero(dofs.size(), dofs.size());
      for (std::size_t j = 0; j < dofs.size(); ++j) {
        for (SparseMatrix::InnerIterator it(J, dofs[j]); it; ++it) {
          const std::size_t row = it.row();
          const bool cell_entry = j < nT || row < cell_end;
          if (!cell_entry) continue;
          if (local_of[row] < 0) {
            if (j < nT && row < cell_end) {
              throw Error(ErrorKind::CondensationFailure, "cell " + std::to_string(c) + ": couples to another cell's DOFs");
            }
            continue;
          }
          A(local_of[row], j) = it.value();
        }
      }
      VectorXd bl(dofs.size());
      for (std::size_t i = 0; i < dofs.size(); ++i) bl[i] = i < nT ? b[dofs[i]] : 0.;
      scatter_cell(space, c, eliminate_cell(space, c, A, bl, out), out, triplets);
      for (auto d : dofs) local_of[d] = -1;
    }
    // global face-face block and face right-hand side
    const std::size_t nF = space.layout().face_dofs();
    for (std::size_t f = 0; f < space.mesh().n_faces(); ++f) {
      if (out.numbering.face_index[f] < 0) continue;
      for (std::size_t s = 0; s < nF; ++s) {
        const std::size_t col = space.layout().face_offset(f) + s;
        const std::size_t gcol = out.numbering.face_index[f] * nF + s;
        out.rhs[gcol] += b[col];
        for (SparseMatrix::InnerIterator it(J, col); it; ++it) {
          const std::size_t row = it.row();
          if (row < cell_end) continue;
          const std::size_t rf = (row - cell_end) / nF, rs = (row - cell_end) % nF;
          if (out.numbering.face_index[rf] < 0) continue;
          triplets.emplace_back(out.numbering.face_index[rf] * nF + rs, gcol, it.value());
        }
      }
    }
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return out;
  }

  CondensedSystem condensed_newton_system(const NonlinearProblem& problem, const HhoSpace& space, const HybridVector& w) {
    const std::size_t n_cells = space.mesh().n_cells();
    CondensedSystem out = empty_condensed(space);
    std::vector<CellSchur> local(n_cells);
    std::vector<VectorXd> local_residual(n_cells);
    parallel_for(n_cells, space.options().threads, [&](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) {
        LocalSystem sys = assemble_local(problem, space, c, space.restrict_to_cell(w, c), true);
        local[c] = eliminate_cell(space, c, sys.jacobian, -sys.residual, out);
        local_residual[c] = std::move(sys.residual);
      }
    });
    std::vector<Eigen::Triplet<double>> triplets;
    const std::size_t nT = space.layout().cell_dofs(), nF = space.layout().face_dofs();
    VectorXd face_residual = VectorXd::Zero(out.rhs.size());
    double cell_residual_sq = 0.;
    for (std::size_t c = 0; c < n_cells; ++c) {
      scatter_cell(space, c, local[c], out, triplets);
      local[c] = {};
      const VectorXd& r = local_residual[c];
      cell_residual_sq += r.head(nT).squaredNorm();
      const auto& faces = space.mesh().cell_faces(c);
      for (std::size_t i = 0; i < faces.size(); ++i) {
        if (!interior(out.numbering, faces[i].face)) continue;
        face_residual.segment(out.numbering.face_index[faces[i].face] * nF, nF) += r.segment(nT + i * nF, nF);
      }
      local_residual[c] = {};
    }
    out.residual_norm = std::sqrt(cell_residual_sq + face_residual.squaredNorm());
    out.matrix.setFromTriplets(triplets.begin(), triplets.end());
    return out;
  }

  HybridVector solve_condensed(const HhoSpace& space, const CondensedSystem& system) {
    VectorXd faces = VectorXd::Zero(system.rhs.size());
    if (system.rhs.size() > 0) {
      const SparseMatrix transpose = system.matrix.transpose();
      const double asym = (system.matrix - transpose).norm();
      if (asym <= 1e-12 * system.matrix.norm()) {
        Eigen::SimplicialLDLT<SparseMatrix> ldlt(system.matrix);
        if (ldlt.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "LDL^T factorization of the face system failed");
        faces = ldlt.solve(system.rhs);
      } else {
        Eigen::SparseLU<SparseMatrix> lu;
        lu.analyzePattern(system.matrix);
        lu.factorize(system.matrix);
        if (lu.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "LU factorization of the face system failed: " + lu.lastErrorMessage());
        faces = lu.solve(system.rhs);
      }
      if (!faces.allFinite()) throw Error(ErrorKind::SolverFailure, "face system solve produced non-finite values");
    }
    return system.recover(space, faces);
  }

  HybridVector solve_uncondensed(const HhoSpace& space, const SparseMatrix& J, const VectorXd& b) {
    const auto& layout = space.layout();
    const auto numbering = free_dofs(space.mesh());
    const std::size_t cell_end = space.mesh().n_cells() * layout.cell_dofs();
    const std::size_t nF = layout.face_dofs();
    std::vector<std::ptrdiff_t> index(layout.size(), -1);
    for (std::size_t i = 0; i < cell_end; ++i) index[i] = static_cast<std::ptrdiff_t>(i);
    for (std::size_t f = 0; f < space.mesh().n_faces(); ++f) {
      if (numbering.face_index[f] < 0) continue;
      for (std::size_t s = 0; s < nF; ++s) index[layout.face_offset(f) + s] = cell_end + numbering.face_index[f] * nF + s;
    }
    const std::size_t n = cell_end + numbering.n_interior_faces * nF;
    std::vector<Eigen::Triplet<double>> triplets;
    for (Eigen::Index col = 0; col < J.outerSize(); ++col) {
      if (index[col] < 0) continue;
      for (SparseMatrix::InnerIterator it(J, col); it; ++it) {
        if (index[it.row()] >= 0) triplets.emplace_back(index[it.row()], index[col], it.value());
      }
    }
    SparseMatrix A(n, n);
    A.setFromTriplets(triplets.begin(), triplets.end());
    VectorXd rhs(n);
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (index[i] >= 0) rhs[index[i]] = b[i];
    }
    Eigen::SparseLU<SparseMatrix> lu;
    lu.analyzePattern(A);
    lu.factorize(A);
    if (lu.info() != Eigen::Success) throw Error(ErrorKind::SolverFailure, "LU factorization of the full system failed: " + lu.lastErrorMessage());
    const VectorXd x = lu.solve(rhs);
    HybridVector out = space.zero();
    for (std::size_t i = 0; i < layout.size(); ++i) {
      if (index[i] >= 0) out.values()[i] = x[index[i]];
    }
    return out;
  }

  HybridVector solve_linear_hho(const NonlinearProblem& problem, const HhoSpace& space) {
    return solve_condensed(space, condensed_newton_system(problem, space, space.zero()));
  }

  HybridVector poisson_bootstrap(const NonlinearProblem& problem, const HhoSpace& space) {
    const auto f = problem.f;
    return solve_linear_hho(poisson_problem([f](const Vector2& x) { return -f(x, 0., Vector2::Zero()); }), space);
  }

  NewtonResult newton_solve(const NonlinearProblem& problem, const HhoSpace& space, const NewtonOptions& options,
                            const std::optional<HybridVector>& initial) {
    if (!(options.tolerance > 0.) || !(options.residual_tolerance >= 0.) || options.max_iterations < 1) {
      throw Error(ErrorKind::InvalidArgument, "Newton needs a positive tolerance and at least one iteration");
    }
    NewtonResult result{initial ? *initial : poisson_bootstrap(problem, space), {}};
    HybridVector& u = result.solution;
    NewtonReport& report = result.report;
    u.zero_boundary(space.mesh());
    double r_start = 0.;

    for (int it = 1;; ++it) {
      const CondensedSystem system = condensed_newton_system(problem, space, u);
      // residual test on the previous update, free since the system carries ||residual(u)||
      if (it == 1) r_start = system.residual_norm;
      if (system.residual_norm <= options.residual_tolerance * r_start || system.residual_norm == 0.) {
        report.converged = true;
        return result;
      }
      if (it > options.max_iterations) break;
      HybridVector delta = solve_condensed(space, system);
      if (options.line_search) {
        const double r0 = system.residual_norm;
        double step = 1.;
        for (int halvings = 0; halvings < 20; ++halvings) {
          if (residual(problem, space, u + delta * step).norm() <= r0) break;
          step *= 0.5;
        }
        delta = delta * step;
      }
      u += delta;
      report.iterations = it;
      const double num = gradient_norm(space, delta), den = gradient_norm(space, u);
      const double increment = num == 0. ? 0. : num / den;
      report.increments.push_back(increment);
      if (!std::isfinite(increment)) throw NewtonDivergedError("non-finite Newton increment at iteration " + std::to_string(it), report);
      if (increment <= options.tolerance) {
        report.converged = true;
        return result;
      }
    }
    std::ostringstream os;
    os << "no convergence in " << options.max_iterations << " iterations (last relative increment "
       << report.increments.back() << ")";
    throw NewtonDivergedError(os.str(), report);
  }

} // namespace hho
