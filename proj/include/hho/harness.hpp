// Convergence studies: mesh families, relative gradient errors, rates, CSV and plot output.

#ifndef HHO_HARNESS_HPP
#define HHO_HARNESS_HPP

#include <optional>
#include <string>
#include <vector>

#include "hho/hho.hpp"
#include "hho/mesh.hpp"
#include "hho/solver.hpp"

namespace hho {

  /// Mesh families: "cartesian" and "triangular" are generated, "hexagonal" and "kershaw" are
  /// read from files.
  const std::vector<std::string>& mesh_families();
  bool is_generated_family(const std::string& family);

  /// Directory holding the shipped mesh files: $HHO_DATA_DIR if set, else the build-time default.
  std::string data_dir();

  /// One refinement level: a grid size n for generated families, a file level (1, 2, ...) for
  /// file families, or an explicit mesh path for either.
  struct MeshLevel {
    std::size_t n = 0;
    std::string path;
  };

  /// Mesh file of a file family at a given level inside data_dir().
  std::string family_file(const std::string& family, std::size_t level);
  PolytopalMesh load_level_mesh(const std::string& family, const MeshLevel& level);

  /// Meshsize as reported in the tables: 1/n for generated Cartesian grids, the largest cell
  /// diameter otherwise.
  double reported_meshsize(const std::string& family, const MeshLevel& level, const PolytopalMesh& mesh,
                           const MeshGeometry& geometry);

  struct StudyConfig {
    std::string problem = "mean-curvature";
    std::string family = "cartesian";
    std::vector<MeshLevel> levels;
    std::vector<int> degrees{1, 2, 3};
    double tolerance = 1e-8;
    int max_iterations = 25;
    unsigned threads = 1;
    std::string out_dir;   ///< empty: no files written
  };

  /// Throws ConfigError unless there are at least two levels, every k is in 0..3 and the family
  /// and problem are known.
  void validate(const StudyConfig& config);

  /// JSON dialect of the mesh format: {"problem", "family", "levels": [16, 32] or paths,
  /// "k": [1, 2], "tolerance", "max_iterations", "threads", "out"}.
  StudyConfig parse_study_config(const std::string& json_text);
  StudyConfig load_study_config(const std::string& path);

  /// ||grad u - G_h u_h|| / ||grad u|| with cellwise quadrature of degree 2(k+1)+2. Throws
  /// DegenerateExactSolution when ||grad u|| = 0.
  double gradient_error(const HhoSpace& space, const HybridVector& uh, const VectorField& exact_gradient);

  struct ConvergenceRecord {
    std::string family;
    int k = 0;
    double h = 0.;
    double error = 0.;
    std::optional<double> rate;
    int newton_iterations = 0;

    bool operator==(const ConvergenceRecord&) const = default;
  };

  /// rate_l = log(e_l / e_{l-1}) / log(h_l / h_{l-1}) within each consecutive run of equal
  /// (family, k); the first record of a run has no rate. Throws InvalidSequence on equal
  /// consecutive h or on a run with fewer than two records.
  std::vector<ConvergenceRecord> convergence_rate(std::vector<ConvergenceRecord> records);

  struct StudyResult {
    std::vector<ConvergenceRecord> records;   ///< ordered by (k, level)
    std::vector<std::string> diagnostics;     ///< one line per aborted (family, k) column
  };

  /// Solves every (k, level) of the configuration. A failing solve aborts its k column only.
  StudyResult run_study(const StudyConfig& config);

  /// CSV with header family,k,h,error,rate,newton_iters; numbers in %.4e, rate empty on the
  /// first row of each column.
  std::string to_csv(const std::vector<ConvergenceRecord>& records);
  std::vector<ConvergenceRecord> parse_csv(const std::string& text);

  /// Whitespace-separated "h error" blocks, one per k, separated by two blank lines.
  std::string to_plot_data(const std::vector<ConvergenceRecord>& records);
  /// Gnuplot script drawing every block of `data_file` on log-log axes into `image_file`.
  std::string to_gnuplot_script(const std::vector<ConvergenceRecord>& records, const std::string& data_file,
                                const std::string& image_file);

  /// Text table: h, then e_h and rate per k.
  std::string format_table(const std::vector<ConvergenceRecord>& records);

  /// Writes <family>.csv, <family>.dat and <family>.gp into `dir` (created if missing).
  void write_study_files(const std::vector<ConvergenceRecord>& records, const std::string& family, const std::string& dir);

} // namespace hho

#endif
