#include "hho/errors.hpp"
#include "hho/mesh.hpp"

namespace hho {

  namespace {

    std::vector<Vector2> lattice_vertices(std::size_t n) {
      std::vector<Vector2> vertices;
      vertices.reserve((n + 1) * (n + 1));
      const double dn = static_cast<double>(n);
      for (std::size_t j = 0; j <= n; ++j) {
        for (std::size_t i = 0; i <= n; ++i) {
          vertices.emplace_back(static_cast<double>(i) / dn, static_cast<double>(j) / dn);
        }
      }
      return vertices;
    }

  } // namespace

  PolytopalMesh generate_cartesian(std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "cartesian mesh needs n >= 1");
    auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    std::vector<std::vector<std::size_t>> cells;
    cells.reserve(n * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
    return PolytopalMesh::from_cells(lattice_vertices(n), std::move(cells));
  }

  PolytopalMesh generate_triangular(std::size_t n) {
    if (n == 0) throw Error(ErrorKind::InvalidArgument, "triangular mesh needs n >= 1");
    auto id = [n](std::size_t i, std::size_t j) { return j * (n + 1) + i; };
    std::vector<std::vector<std::size_t>> cells;
    cells.reserve(2 * n * n);
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t i = 0; i < n; ++i) {
        cells.push_back({id(i, j), id(i + 1, j), id(i + 1, j + 1)});
        cells.push_back({id(i, j), id(i + 1, j + 1), id(i, j + 1)});
      }
    }
    return PolytopalMesh::from_cells(lattice_vertices(n), std::move(cells));
  }

} // namespace hho
