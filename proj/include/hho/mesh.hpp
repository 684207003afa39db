// Polytopal meshes of a rectangular 2D domain: topology, validation, geometry and generators.

#ifndef HHO_MESH_HPP
#define HHO_MESH_HPP

#include <cstddef>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace hho {

  using Vector2 = Eigen::Vector2d;

  /// A straight mesh face (an edge in 2D).
  struct Face {
    std::size_t v0;                       ///< first vertex, in the traversal order of the owner cell
    std::size_t v1;                       ///< second vertex
    std::size_t owner;                    ///< cell traversing v0 -> v1 counterclockwise
    std::optional<std::size_t> neighbor;  ///< absent on boundary faces

    bool is_boundary() const { return !neighbor.has_value(); }
  };

  /// Face incident to a cell together with its orientation relative to that cell:
  /// +1 when the cell is the owner of the face, -1 otherwise.
  struct CellFace {
    std::size_t face;
    int orientation;
  };

  /// Outcome of validating a list of cells.
  struct ValidationReport {
    std::size_t repaired_orientations = 0;  ///< clockwise cells that were reversed on load
  };

  /// Polytopal mesh. Cells are stored counterclockwise; faces are derived from the cells and
  /// never supplied by the caller. Instances are immutable once built.
  class PolytopalMesh {
  public:
    /// Builds and validates a mesh. Clockwise cells are reversed (and counted in the report);
    /// every other invariant violation throws ErrorKind::MeshInvalid naming the invariant.
    static PolytopalMesh from_cells(std::vector<Vector2> vertices,
                                    std::vector<std::vector<std::size_t>> cells,
                                    ValidationReport* report = nullptr);

    std::size_t n_vertices() const { return m_vertices.size(); }
    std::size_t n_cells() const { return m_cells.size(); }
    std::size_t n_faces() const { return m_faces.size(); }
    std::size_t n_boundary_faces() const { return m_n_boundary_faces; }
    std::size_t n_interior_faces() const { return m_faces.size() - m_n_boundary_faces; }

    const std::vector<Vector2>& vertices() const { return m_vertices; }
    const Vector2& vertex(std::size_t i) const { return m_vertices[i]; }
    const std::vector<std::vector<std::size_t>>& cells() const { return m_cells; }
    const std::vector<std::size_t>& cell(std::size_t i) const { return m_cells[i]; }
    const std::vector<Face>& faces() const { return m_faces; }
    const Face& face(std::size_t i) const { return m_faces[i]; }
    const std::vector<CellFace>& cell_faces(std::size_t i) const { return m_cell_faces[i]; }

    /// Bounding box of the vertices; the domain is this rectangle.
    Vector2 domain_min() const { return m_min; }
    Vector2 domain_max() const { return m_max; }

  private:
    PolytopalMesh() = default;

    std::vector<Vector2> m_vertices;
    std::vector<std::vector<std::size_t>> m_cells;
    std::vector<Face> m_faces;
    std::vector<std::vector<CellFace>> m_cell_faces;
    std::size_t m_n_boundary_faces = 0;
    Vector2 m_min = Vector2::Zero();
    Vector2 m_max = Vector2::Zero();
  };

  struct CellGeometry {
    Vector2 centroid;
    double area;
    double diameter;  ///< h_T, max pairwise vertex distance
  };

  struct FaceGeometry {
    Vector2 midpoint;
    double length;    ///< h_F
    Vector2 tangent;  ///< unit vector from v0 to v1
    Vector2 normal;   ///< unit normal pointing out of the owner cell
  };

  /// Derived geometric quantities of a mesh.
  struct MeshGeometry {
    std::vector<CellGeometry> cells;
    std::vector<FaceGeometry> faces;

    /// Unit normal of face `cf` pointing out of the cell it was listed for.
    Vector2 outward_normal(const CellFace& cf) const {
      return static_cast<double>(cf.orientation) * faces[cf.face].normal;
    }
  };

  MeshGeometry compute_geometry(const PolytopalMesh& mesh);

  struct MeshSizeInfo {
    double h;                  ///< max cell diameter
    double h_min;              ///< min cell diameter
    double quasi_uniformity;   ///< h / h_min
    double regularity;         ///< largest r with r^2 h_T <= h_F for all T and F in F_T
    std::size_t max_faces_per_cell;
  };

  MeshSizeInfo mesh_size(const PolytopalMesh& mesh, const MeshGeometry& geometry);

  // --- generators -------------------------------------------------------------------------

  /// n x n uniform squares on (0,1)^2.
  PolytopalMesh generate_cartesian(std::size_t n);

  /// n x n squares on (0,1)^2, each split into two triangles along the lower-left to
  /// upper-right diagonal.
  PolytopalMesh generate_triangular(std::size_t n);

  // --- file formats -----------------------------------------------------------------------

  enum class MeshFormat { NativeJson, FvcaTyp2 };

  /// Picks the format from the file extension (".typ2" -> FVCA, everything else JSON).
  MeshFormat format_from_path(const std::string& path);

  PolytopalMesh read_mesh(const std::string& path, MeshFormat format,
                          ValidationReport* report = nullptr);
  PolytopalMesh read_mesh(const std::string& path, ValidationReport* report = nullptr);

  PolytopalMesh parse_native_json(const std::string& text, ValidationReport* report = nullptr);
  PolytopalMesh parse_fvca_typ2(const std::string& text, ValidationReport* report = nullptr);

  std::string to_native_json(const PolytopalMesh& mesh);
  void write_native_json(const PolytopalMesh& mesh, const std::string& path);

} // namespace hho

#endif
