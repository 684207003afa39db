#include "hho/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <utility>

#include "hho/errors.hpp"

namespace hho {

  const char* to_string(ErrorKind kind) {
    switch (kind) {
    case ErrorKind::InvalidArgument: return "invalid-argument";
    case ErrorKind::FormatError: return "format-error";
    case ErrorKind::MeshInvalid: return "mesh-invalid";
    case ErrorKind::UnsupportedDegree: return "unsupported-degree";
    case ErrorKind::QuadratureError: return "quadrature-error";
    case ErrorKind::BasisDegenerate: return "basis-degenerate";
    case ErrorKind::OperatorBuildFailure: return "operator-build-failure";
    case ErrorKind::EvaluationError: return "evaluation-error";
    case ErrorKind::CondensationFailure: return "condensation-failure";
    case ErrorKind::SolverFailure: return "solver-failure";
    case ErrorKind::NewtonDiverged: return "newton-diverged";
    case ErrorKind::InvalidSequence: return "invalid-sequence";
    case ErrorKind::DegenerateExactSolution: return "degenerate-exact-solution";
    case ErrorKind::ConfigError: return "config-error";
    }
    return "unknown";
  }

  namespace {

    double cross(const Vector2& a, const Vector2& b) { return a.x() * b.y() - a.y() * b.x(); }

    // Twice the signed area, computed relative to the first vertex to limit cancellation.
    double twice_signed_area(const std::vector<Vector2>& vertices, const std::vector<std::size_t>& cell) {
      const Vector2& o = vertices[cell[0]];
      double sum = 0.;
      for (std::size_t i = 1; i + 1 < cell.size(); ++i) {
        sum += cross(vertices[cell[i]] - o, vertices[cell[i + 1]] - o);
      }
      return sum;
    }

    bool segments_intersect(const Vector2& p1, const Vector2& p2, const Vector2& q1, const Vector2& q2) {
      auto orient = [](const Vector2& a, const Vector2& b, const Vector2& c) {
        const double v = cross(b - a, c - a);
        const double scale = (b - a).norm() * (c - a).norm();
        if (std::abs(v) <= 1e-14 * scale) return 0;
        return v > 0 ? 1 : -1;
      };
      auto on_segment = [](const Vector2& a, const Vector2& b, const Vector2& p) {
        return std::min(a.x(), b.x()) <= p.x() && p.x() <= std::max(a.x(), b.x())
          && std::min(a.y(), b.y()) <= p.y() && p.y() <= std::max(a.y(), b.y());
      };
      const int o1 = orient(p1, p2, q1), o2 = orient(p1, p2, q2);
      const int o3 = orient(q1, q2, p1), o4 = orient(q1, q2, p2);
      if (o1 != o2 && o3 != o4 && o1 != 0 && o2 != 0 && o3 != 0 && o4 != 0) return true;
      if (o1 == 0 && on_segment(p1, p2, q1)) return true;
      if (o2 == 0 && on_segment(p1, p2, q2)) return true;
      if (o3 == 0 && on_segment(q1, q2, p1)) return true;
      if (o4 == 0 && on_segment(q1, q2, p2)) return true;
      return false;
    }

    bool is_simple(const std::vector<Vector2>& vertices, const std::vector<std::size_t>& cell) {
      const std::size_t n = cell.size();
      for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
          // adjacent edges share a vertex by construction
          if (j == i + 1 || (i == 0 && j == n - 1)) continue;
          if (segments_intersect(vertices[cell[i]], vertices[cell[(i + 1) % n]],
                                 vertices[cell[j]], vertices[cell[(j + 1) % n]])) {
            return false;
          }
        }
      }
      return true;
    }

    [[noreturn]] void invalid(const std::string& what) { throw Error(ErrorKind::MeshInvalid, what); }

  } // namespace

  PolytopalMesh PolytopalMesh::from_cells(std::vector<Vector2> vertices,
                                          std::vector<std::vector<std::size_t>> cells,
                                          ValidationReport* report) {
    if (vertices.empty()) invalid("mesh has no vertices");
    if (cells.empty()) invalid("mesh has no cells");

    PolytopalMesh mesh;
    mesh.m_min = vertices[0];
    mesh.m_max = vertices[0];
    for (const auto& v : vertices) {
      if (!std::isfinite(v.x()) || !std::isfinite(v.y())) invalid("non-finite vertex coordinate");
      mesh.m_min = mesh.m_min.cwiseMin(v);
      mesh.m_max = mesh.m_max.cwiseMax(v);
    }

    ValidationReport local_report;
    double total_area = 0.;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      auto& cell = cells[c];
      const std::string where = "cell " + std::to_string(c);
      if (cell.size() < 3) invalid(where + " has fewer than 3 vertices");
      for (auto v : cell) {
        if (v >= vertices.size()) invalid(where + " references vertex " + std::to_string(v) + " out of range");
      }
      std::vector<std::size_t> sorted = cell;
      std::sort(sorted.begin(), sorted.end());
      if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) invalid(where + " repeats a vertex");

      double a2 = twice_signed_area(vertices, cell);
      double scale = 0.;
      for (auto v : cell) scale = std::max(scale, (vertices[v] - vertices[cell[0]]).squaredNorm());
      if (std::abs(a2) <= 1e-14 * scale) invalid("orientation: " + where + " has zero area");
      if (a2 < 0.) {
        std::reverse(cell.begin(), cell.end());
        a2 = -a2;
        ++local_report.repaired_orientations;
      }
      if (!is_simple(vertices, cell)) invalid("simplicity: " + where + " is self-intersecting");
      total_area += 0.5 * a2;
    }

    // Derive faces from cell edges.
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> edge_to_face;
    mesh.m_cell_faces.resize(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto& cell = cells[c];
      for (std::size_t i = 0; i < cell.size(); ++i) {
        const std::size_t a = cell[i], b = cell[(i + 1) % cell.size()];
        const auto key = std::minmax(a, b);
        auto it = edge_to_face.find(key);
        if (it == edge_to_face.end()) {
          edge_to_face.emplace(key, mesh.m_faces.size());
          mesh.m_cell_faces[c].push_back({mesh.m_faces.size(), +1});
          mesh.m_faces.push_back(Face{a, b, c, std::nullopt});
        } else {
          Face& f = mesh.m_faces[it->second];
          if (f.neighbor) {
            invalid("face incidence: edge (" + std::to_string(a) + "," + std::to_string(b) + ") shared by more than two cells");
          }
          if (f.v0 == a) {
            invalid("face incidence: cells " + std::to_string(f.owner) + " and " + std::to_string(c) + " overlap along an edge");
          }
          f.neighbor = c;
          mesh.m_cell_faces[c].push_back({it->second, -1});
        }
      }
    }

    const Vector2 extent = mesh.m_max - mesh.m_min;
    const double tol = 1e-12 * std::max(extent.x(), extent.y());
    auto on_boundary_side = [&](const Vector2& p, const Vector2& q) {
      return (std::abs(p.x() - mesh.m_min.x()) <= tol && std::abs(q.x() - mesh.m_min.x()) <= tol)
        || (std::abs(p.x() - mesh.m_max.x()) <= tol && std::abs(q.x() - mesh.m_max.x()) <= tol)
        || (std::abs(p.y() - mesh.m_min.y()) <= tol && std::abs(q.y() - mesh.m_min.y()) <= tol)
        || (std::abs(p.y() - mesh.m_max.y()) <= tol && std::abs(q.y() - mesh.m_max.y()) <= tol);
    };
    for (std::size_t f = 0; f < mesh.m_faces.size(); ++f) {
      const Face& face = mesh.m_faces[f];
      if (!face.is_boundary()) continue;
      ++mesh.m_n_boundary_faces;
      if (!on_boundary_side(vertices[face.v0], vertices[face.v1])) {
        invalid("boundary faces: face " + std::to_string(f) + " has a single cell but does not lie on the domain boundary");
      }
    }

    const double domain_area = extent.x() * extent.y();
    if (std::abs(total_area - domain_area) > 1e-12 * domain_area) {
      invalid("covering: sum of cell areas differs from the domain area");
    }

    mesh.m_vertices = std::move(vertices);
    mesh.m_cells = std::move(cells);
    if (report) *report = local_report;
    return mesh;
  }

  MeshGeometry compute_geometry(const PolytopalMesh& mesh) {
    MeshGeometry geometry;
    geometry.cells.reserve(mesh.n_cells());
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      const auto& cell = mesh.cell(c);
      const Vector2& o = mesh.vertex(cell[0]);
      double a2 = 0.;
      Vector2 moment = Vector2::Zero();
      for (std::size_t i = 1; i + 1 < cell.size(); ++i) {
        const Vector2 p = mesh.vertex(cell[i]) - o;
        const Vector2 q = mesh.vertex(cell[i + 1]) - o;
        const double w = cross(p, q);
        a2 += w;
        moment += w * (p + q);
      }
      if (!(a2 > 0.)) throw Error(ErrorKind::MeshInvalid, "cell " + std::to_string(c) + " has non-positive area");
      double diameter = 0.;
      for (std::size_t i = 0; i < cell.size(); ++i) {
        for (std::size_t j = i + 1; j < cell.size(); ++j) {
          diameter = std::max(diameter, (mesh.vertex(cell[i]) - mesh.vertex(cell[j])).norm());
        }
      }
      geometry.cells.push_back(CellGeometry{o + moment / (3. * a2), 0.5 * a2, diameter});
    }

    geometry.faces.reserve(mesh.n_faces());
    for (const Face& face : mesh.faces()) {
      const Vector2& a = mesh.vertex(face.v0);
      const Vector2& b = mesh.vertex(face.v1);
      const double length = (b - a).norm();
      const Vector2 tangent = (b - a) / length;
      // owner is counterclockwise, so its exterior is on the right of the edge
      geometry.faces.push_back(FaceGeometry{0.5 * (a + b), length, tangent, Vector2(tangent.y(), -tangent.x())});
    }
    return geometry;
  }

  MeshSizeInfo mesh_size(const PolytopalMesh& mesh, const MeshGeometry& geometry) {
    MeshSizeInfo info{0., std::numeric_limits<double>::max(), 1., 1., 0};
    double min_ratio = std::numeric_limits<double>::max();
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) {
      const double hT = geometry.cells[c].diameter;
      info.h = std::max(info.h, hT);
      info.h_min = std::min(info.h_min, hT);
      info.max_faces_per_cell = std::max(info.max_faces_per_cell, mesh.cell_faces(c).size());
      for (const auto& cf : mesh.cell_faces(c)) {
        min_ratio = std::min(min_ratio, geometry.faces[cf.face].length / hT);
      }
    }
    info.quasi_uniformity = info.h / info.h_min;
    info.regularity = std::sqrt(min_ratio);
    return info;
  }

} // namespace hho
