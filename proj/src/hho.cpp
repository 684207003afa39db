#include "hho/hho.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <thread>

#include "hho/errors.hpp"
#include "hho/kernels.hpp"

namespace hho {

  // --- HybridVector -------------------------------------------------------------------------

  HybridVector::HybridVector(const DofLayout& layout, VectorXd values)
    : m_layout(layout), m_values(std::move(values)) {
    if (static_cast<std::size_t>(m_values.size()) != layout.size()) {
      throw Error(ErrorKind::InvalidArgument, "hybrid vector size does not match its DOF layout");
    }
  }

  bool HybridVector::has_zero_boundary(const PolytopalMesh& mesh) const {
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
      if (mesh.face(f).is_boundary() && !face_block(f).isZero(0.)) return false;
    }
    return true;
  }

  void HybridVector::zero_boundary(const PolytopalMesh& mesh) {
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
      if (mesh.face(f).is_boundary()) face_block(f).setZero();
    }
  }

  HybridVector& HybridVector::operator+=(const HybridVector& other) {
    m_values += other.m_values;
    return *this;
  }

  HybridVector HybridVector::operator+(const HybridVector& other) const {
    return HybridVector(m_layout, m_values + other.m_values);
  }

  HybridVector HybridVector::operator-(const HybridVector& other) const {
    return HybridVector(m_layout, m_values - other.m_values);
  }

  HybridVector HybridVector::operator*(double s) const { return HybridVector(m_layout, s * m_values); }

  // --- local operators ----------------------------------------------------------------------

  CellContext make_cell_context(const PolytopalMesh& mesh, const MeshGeometry& geometry, std::size_t cell,
                                int degree, int quadrature_degree, bool orthonormal) {
    if (degree < 0) throw Error(ErrorKind::InvalidArgument, "polynomial degree must be >= 0");
    // mass matrices of P^{k+1}(T) must be integrated exactly
    const int qdeg = std::max(quadrature_degree, 2 * (degree + 1));
    CellContext ctx{cell, degree, geometry.cells[cell].diameter, make_cell_basis(geometry, cell, degree + 1),
                    cell_quadrature(mesh, geometry, cell, qdeg), {}};
    if (orthonormal) ctx.basis.orthonormalize(ctx.rule);
    for (const auto& cf : mesh.cell_faces(cell)) {
      ctx.faces.push_back({cf.face, cf.orientation, geometry.outward_normal(cf), geometry.faces[cf.face].length,
                           make_face_basis(geometry, cf.face, degree), face_quadrature(mesh, cf.face, qdeg)});
    }
    return ctx;
  }

  MatrixXd build_gradient_reconstruction(const CellContext& ctx) {
    const auto& K = kernels::active();
    const std::size_t nT = ctx.cell_dofs(), nF = ctx.face_dofs(), nL = ctx.local_size();
    const MatrixXd phi = ctx.basis.values(ctx.rule);
    const auto dphi = ctx.basis.gradients(ctx.rule);
    const double* w = ctx.rule.weights.data();
    const std::size_t np = ctx.rule.size();

    MatrixXd mass(nT, nT);
    K.gram(phi.data(), nT, w, np, mass.data());

    MatrixXd rhs = MatrixXd::Zero(2 * nT, nL);
    MatrixXd block(nT, nT);
    for (int c = 0; c < 2; ++c) {
      K.cross_gram(phi.data(), nT, dphi[c].data(), nT, w, np, block.data());
      rhs.block(c * nT, 0, nT, nT) = block;
    }
    MatrixXd cell_face(nT, nF), cell_cell(nT, nT);
    for (std::size_t i = 0; i < ctx.faces.size(); ++i) {
      const auto& face = ctx.faces[i];
      const MatrixXd phi_f = ctx.basis.values(face.rule);
      const MatrixXd psi = face.basis.values(face.rule);
      const double* wf = face.rule.weights.data();
      K.cross_gram(phi_f.data(), nT, psi.data(), nF, wf, face.rule.size(), cell_face.data());
      K.gram(phi_f.data(), nT, wf, face.rule.size(), cell_cell.data());
      for (int c = 0; c < 2; ++c) {
        rhs.block(c * nT, ctx.face_local_offset(i), nT, nF) += face.normal[c] * cell_face;
        rhs.block(c * nT, 0, nT, nT) -= face.normal[c] * cell_cell;
      }
    }

    Eigen::LLT<MatrixXd> llt(mass);
    if (llt.info() != Eigen::Success) {
      throw Error(ErrorKind::BasisDegenerate, "cell " + std::to_string(ctx.cell) + ": mass matrix is not positive definite");
    }
    MatrixXd gradient(2 * nT, nL);
    gradient.topRows(nT) = llt.solve(rhs.topRows(nT));
    gradient.bottomRows(nT) = llt.solve(rhs.bottomRows(nT));
    return gradient;
  }

  MatrixXd build_potential_reconstruction(const CellContext& ctx) {
    const auto& K = kernels::active();
    const std::size_t nT = ctx.cell_dofs(), nF = ctx.face_dofs(), nL = ctx.local_size();
    const std::size_t nR = ctx.basis.size();
    const MatrixXd phi = ctx.basis.values(ctx.rule);
    const auto dphi = ctx.basis.gradients(ctx.rule);
    const double* w = ctx.rule.weights.data();
    const std::size_t np = ctx.rule.size();

    MatrixXd stiffness(nR, nR), tmp(nR, nR);
    K.gram(dphi[0].data(), nR, w, np, stiffness.data());
    K.gram(dphi[1].data(), nR, w, np, tmp.data());
    stiffness += tmp;

    MatrixXd rhs = MatrixXd::Zero(nR + 1, nL);
    rhs.topLeftCorner(nR, nT) = stiffness.leftCols(nT);
    MatrixXd grad_face(nR, nF), grad_cell(nR, nT);
    for (std::size_t i = 0; i < ctx.faces.size(); ++i) {
      const auto& face = ctx.faces[i];
      const auto dphi_f = ctx.basis.gradients(face.rule);
      const MatrixXd normal_derivative = face.normal.x() * dphi_f[0] + face.normal.y() * dphi_f[1];
      const MatrixXd phi_f = ctx.basis.values(face.rule);
      const MatrixXd psi = face.basis.values(face.rule);
      const double* wf = face.rule.weights.data();
      K.cross_gram(normal_derivative.data(), nR, psi.data(), nF, wf, face.rule.size(), grad_face.data());
      K.cross_gram(normal_derivative.data(), nR, phi_f.data(), nT, wf, face.rule.size(), grad_cell.data());
      rhs.block(0, ctx.face_local_offset(i), nR, nF) += grad_face;
      rhs.topLeftCorner(nR, nT) -= grad_cell;
    }

    VectorXd mean(nR);
    K.moments(phi.data(), nR, w, np, mean.data());
    rhs.bottomLeftCorner(1, nT) = mean.head(nT).transpose();

    MatrixXd system = MatrixXd::Zero(nR + 1, nR + 1);
    system.topLeftCorner(nR, nR) = stiffness;
    system.topRightCorner(nR, 1) = mean;
    system.bottomLeftCorner(1, nR) = mean.transpose();

    Eigen::FullPivLU<MatrixXd> lu(system);
    if (!lu.isInvertible()) {
      throw Error(ErrorKind::OperatorBuildFailure, "cell " + std::to_string(ctx.cell) + ": singular potential reconstruction system");
    }
    return lu.solve(rhs).topRows(nR);
  }

  MatrixXd build_stabilization(const CellContext& ctx, const MatrixXd& potential) {
    const auto& K = kernels::active();
    const std::size_t nT = ctx.cell_dofs(), nF = ctx.face_dofs(), nL = ctx.local_size();
    const std::size_t nR = ctx.basis.size();
    const MatrixXd phi = ctx.basis.values(ctx.rule);

    MatrixXd mass(nR, nR);
    K.gram(phi.data(), nR, ctx.rule.weights.data(), ctx.rule.size(), mass.data());
    // pi_T^k on P^{k+1}(T) coefficients
    const MatrixXd projector = solve_spd(mass.topLeftCorner(nT, nT), mass.topRows(nT), "stabilization");

    // v_T + (R v - pi_T^k R v) in the degree k+1 basis
    MatrixXd corrected = potential;
    corrected.topRows(nT) -= projector * potential;
    corrected.topLeftCorner(nT, nT) += MatrixXd::Identity(nT, nT);

    MatrixXd stabilization = MatrixXd::Zero(nL, nL);
    MatrixXd face_mass(nF, nF), face_cell(nF, nR);
    for (std::size_t i = 0; i < ctx.faces.size(); ++i) {
      const auto& face = ctx.faces[i];
      const MatrixXd phi_f = ctx.basis.values(face.rule);
      const MatrixXd psi = face.basis.values(face.rule);
      const double* wf = face.rule.weights.data();
      K.gram(psi.data(), nF, wf, face.rule.size(), face_mass.data());
      K.cross_gram(psi.data(), nF, phi_f.data(), nR, wf, face.rule.size(), face_cell.data());
      MatrixXd jump = -solve_spd(face_mass, face_cell * corrected, "stabilization");
      jump.middleCols(ctx.face_local_offset(i), nF) += MatrixXd::Identity(nF, nF);
      stabilization.noalias() += jump.transpose() * face_mass * jump;
    }
    stabilization /= ctx.diameter;
    return 0.5 * (stabilization + stabilization.transpose());
  }

  LocalOperators build_local_operators(const CellContext& ctx) {
    LocalOperators ops;
    ops.gradient = build_gradient_reconstruction(ctx);
    ops.potential = build_potential_reconstruction(ctx);
    ops.stabilization = build_stabilization(ctx, ops.potential);
    const MatrixXd phi = ctx.basis.values(ctx.rule);
    ops.mass.resize(ctx.cell_dofs(), ctx.cell_dofs());
    kernels::active().gram(phi.data(), ctx.cell_dofs(), ctx.rule.weights.data(), ctx.rule.size(), ops.mass.data());
    return ops;
  }

  // --- space --------------------------------------------------------------------------------

  void parallel_for(std::size_t n, unsigned threads, const std::function<void(std::size_t, std::size_t)>& fn) {
    threads = std::max(1u, std::min<unsigned>(threads, static_cast<unsigned>(std::max<std::size_t>(n, 1))));
    if (threads == 1) {
      fn(0, n);
      return;
    }
    std::vector<std::exception_ptr> errors(threads);
    std::vector<std::thread> workers;
    const std::size_t chunk = (n + threads - 1) / threads;
    for (unsigned t = 0; t < threads; ++t) {
      const std::size_t begin = std::min(n, t * chunk), end = std::min(n, begin + chunk);
      workers.emplace_back([&, t, begin, end] {
        try {
          fn(begin, end);
        } catch (...) {
          errors[t] = std::current_exception();
        }
      });
    }
    for (auto& w : workers) w.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  HhoSpace::HhoSpace(const PolytopalMesh& mesh, int degree, SpaceOptions options)
    : m_mesh(&mesh), m_geometry(compute_geometry(mesh)), m_degree(degree),
      m_quadrature_degree(options.quadrature_degree < 0 ? default_quadrature_degree(degree) : options.quadrature_degree),
      m_options(options) {
    if (degree < 0) throw Error(ErrorKind::InvalidArgument, "polynomial degree must be >= 0");
    m_layout = DofLayout{degree, mesh.n_cells(), mesh.n_faces()};
    m_operators.resize(mesh.n_cells());
    parallel_for(mesh.n_cells(), options.threads, [this](std::size_t begin, std::size_t end) {
      for (std::size_t c = begin; c < end; ++c) m_operators[c] = build_local_operators(context(c));
    });
  }

  CellContext HhoSpace::context(std::size_t cell) const {
    return make_cell_context(*m_mesh, m_geometry, cell, m_degree, m_quadrature_degree, m_options.orthonormal);
  }

  std::vector<std::size_t> HhoSpace::local_dofs(std::size_t cell) const {
    const std::size_t nT = m_layout.cell_dofs(), nF = m_layout.face_dofs();
    std::vector<std::size_t> dofs;
    dofs.reserve(nT + nF * m_mesh->cell_faces(cell).size());
    for (std::size_t i = 0; i < nT; ++i) dofs.push_back(m_layout.cell_offset(cell) + i);
    for (const auto& cf : m_mesh->cell_faces(cell)) {
      for (std::size_t i = 0; i < nF; ++i) dofs.push_back(m_layout.face_offset(cf.face) + i);
    }
    return dofs;
  }

  VectorXd HhoSpace::restrict_to_cell(const HybridVector& v, std::size_t cell) const {
    const std::size_t nT = m_layout.cell_dofs(), nF = m_layout.face_dofs();
    const auto& faces = m_mesh->cell_faces(cell);
    VectorXd local(nT + nF * faces.size());
    local.head(nT) = v.cell_block(cell);
    for (std::size_t i = 0; i < faces.size(); ++i) local.segment(nT + i * nF, nF) = v.face_block(faces[i].face);
    return local;
  }

  // --- interpolation and norms --------------------------------------------------------------

  namespace {

    VectorXd project_prefix(const MatrixXd& values, std::size_t n, const QuadratureRule& rule, const ScalarField& f,
                            const char* what) {
      const auto& K = kernels::active();
      MatrixXd mass(n, n);
      K.gram(values.data(), n, rule.weights.data(), rule.size(), mass.data());
      VectorXd fw(rule.size());
      for (std::size_t q = 0; q < rule.size(); ++q) fw[q] = f(rule.points[q]);
      VectorXd b(n);
      K.moments(values.data(), n, fw.cwiseProduct(Eigen::Map<const VectorXd>(rule.weights.data(), rule.size())).eval().data(),
                rule.size(), b.data());
      return solve_spd(mass, b, what);
    }

  } // namespace

  VectorXd interpolate_local(const CellContext& ctx, const ScalarField& v) {
    const std::size_t nT = ctx.cell_dofs(), nF = ctx.face_dofs();
    VectorXd local(ctx.local_size());
    local.head(nT) = project_prefix(ctx.basis.values(ctx.rule), nT, ctx.rule, v, "cell interpolation");
    for (std::size_t i = 0; i < ctx.faces.size(); ++i) {
      const auto& face = ctx.faces[i];
      local.segment(ctx.face_local_offset(i), nF) = project_prefix(face.basis.values(face.rule), nF, face.rule, v, "face interpolation");
    }
    return local;
  }

  HybridVector interpolate(const HhoSpace& space, const ScalarField& v, bool zero_boundary) {
    const auto& mesh = space.mesh();
    const int k = space.degree();
    HybridVector result = space.zero();
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      const auto& g = space.geometry().cells[c];
      CellBasis basis(g.centroid, g.diameter, k + 1);
      const QuadratureRule rule = cell_quadrature(mesh, space.geometry(), c, std::max(space.quadrature_degree(), 2 * k + 2));
      if (space.options().orthonormal) basis.orthonormalize(rule);
      result.cell_block(c) = project_prefix(basis.values(rule), dim_cell(k), rule, v, "cell interpolation");
    }
    for (std::size_t f = 0; f < mesh.n_faces(); ++f) {
      if (zero_boundary && mesh.face(f).is_boundary()) continue;
      const FaceBasis basis = make_face_basis(space.geometry(), f, k);
      const QuadratureRule rule = face_quadrature(mesh, f, std::max(space.quadrature_degree(), 2 * k + 2));
      result.face_block(f) = project_prefix(basis.values(rule), dim_face(k), rule, v, "face interpolation");
    }
    return result;
  }

  namespace {

    double cell_gradient_sq(const HhoSpace& space, const HybridVector& v, std::size_t c) {
      const auto& ops = space.operators(c);
      const std::size_t nT = space.layout().cell_dofs();
      const VectorXd g = ops.gradient * space.restrict_to_cell(v, c);
      return g.head(nT).dot(ops.mass * g.head(nT)) + g.tail(nT).dot(ops.mass * g.tail(nT));
    }

  } // namespace

  double gradient_norm(const HhoSpace& space, const HybridVector& v) {
    double s = 0.;
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) s += cell_gradient_sq(space, v, c);
    return std::sqrt(std::max(s, 0.));
  }

  double discrete_norm_1h(const HhoSpace& space, const HybridVector& v) {
    const std::size_t nT = space.layout().cell_dofs();
    double s = 0.;
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      s += cell_gradient_sq(space, v, c);
      const CellContext ctx = space.context(c);
      const VectorXd vT = v.cell_block(c);
      for (const auto& face : ctx.faces) {
        const MatrixXd phi_f = ctx.basis.values(face.rule);
        const MatrixXd psi = face.basis.values(face.rule);
        const VectorXd diff = psi * v.face_block(face.face) - phi_f.leftCols(nT) * vT;
        double jump = 0.;
        for (std::size_t q = 0; q < face.rule.size(); ++q) jump += face.rule.weights[q] * diff[q] * diff[q];
        s += jump / face.length;
      }
    }
    return std::sqrt(std::max(s, 0.));
  }

  double discrete_norm_1ph(const HhoSpace& space, const HybridVector& v, double p) {
    if (!(p >= 1.)) throw Error(ErrorKind::InvalidArgument, "discrete W^{1,p} norm needs p >= 1");
    const std::size_t nT = space.layout().cell_dofs();
    double s = 0.;
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      const CellContext ctx = space.context(c);
      const VectorXd vT = v.cell_block(c);
      const auto dphi = ctx.basis.gradients(ctx.rule);
      const VectorXd gx = dphi[0].leftCols(nT) * vT, gy = dphi[1].leftCols(nT) * vT;
      for (std::size_t q = 0; q < ctx.rule.size(); ++q) {
        s += ctx.rule.weights[q] * std::pow(gx[q] * gx[q] + gy[q] * gy[q], 0.5 * p);
      }
      for (const auto& face : ctx.faces) {
        const MatrixXd phi_f = ctx.basis.values(face.rule);
        const MatrixXd psi = face.basis.values(face.rule);
        const VectorXd diff = psi * v.face_block(face.face) - phi_f.leftCols(nT) * vT;
        double jump = 0.;
        for (std::size_t q = 0; q < face.rule.size(); ++q) jump += face.rule.weights[q] * std::pow(std::abs(diff[q]), p);
        s += std::pow(face.length, 1. - p) * jump;
      }
    }
    return std::pow(s, 1. / p);
  }

  Vector2 PiecewiseGradient::operator()(std::size_t cell, const Vector2& x) const {
    const auto& g = m_space->geometry().cells[cell];
    const int k = m_space->degree();
    CellBasis basis(g.centroid, g.diameter, k);
    if (m_space->options().orthonormal) {
      basis.orthonormalize(cell_quadrature(m_space->mesh(), m_space->geometry(), cell, 2 * k + 2));
    }
    const VectorXd phi = basis.values(x);
    return Vector2(phi.dot(m_coefficients[cell].col(0)), phi.dot(m_coefficients[cell].col(1)));
  }

  PiecewiseGradient reconstruct_gradient_global(const HhoSpace& space, const HybridVector& v) {
    const std::size_t nT = space.layout().cell_dofs();
    std::vector<MatrixXd> coefficients(space.mesh().n_cells());
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      const VectorXd g = space.operators(c).gradient * space.restrict_to_cell(v, c);
      coefficients[c].resize(nT, 2);
      coefficients[c].col(0) = g.head(nT);
      coefficients[c].col(1) = g.tail(nT);
    }
    return PiecewiseGradient(space, std::move(coefficients));
  }

} // namespace hho
