// Command-line front end: solve one problem, run a convergence study, or inspect a mesh.

#include <cstdio>
#include <iostream>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "hho/errors.hpp"
#include "hho/harness.hpp"
#include "hho/solver.hpp"

using namespace hho;

namespace {

  constexpr int usage_error = 2;

  struct MeshChoice {
    std::string family;
    std::size_t n = 0;
    std::string path;

    MeshLevel level() const { return {n, path}; }
    std::string label() const { return path.empty() ? family + " n=" + std::to_string(n) : path; }
  };

  // Exactly one of --mesh or --family/--n must be given.
  void check_mesh_choice(const MeshChoice& m) {
    if (!m.path.empty()) {
      if (!m.family.empty() && m.family != "cartesian" && m.family != "triangular" && m.family != "hexagonal" && m.family != "kershaw") {
        throw CLI::ValidationError("--family", "unknown family '" + m.family + "'");
      }
      return;
    }
    if (m.family.empty()) throw CLI::RequiredError("--mesh or --family");
    if (m.n == 0) throw CLI::RequiredError("--n");
  }

  std::vector<MeshLevel> parse_levels(const std::vector<std::string>& items) {
    std::vector<MeshLevel> levels;
    for (const auto& item : items) {
      const bool numeric = !item.empty() && item.find_first_not_of("0123456789") == std::string::npos;
      if (numeric) levels.push_back({std::stoul(item), {}});
      else levels.push_back({0, item});
    }
    return levels;
  }

  int run_solve(const MeshChoice& m, int k, const std::string& problem_name, double tol, int max_iter, unsigned threads) {
    const std::string family = m.family.empty() ? "cartesian" : m.family;
    const PolytopalMesh mesh = load_level_mesh(family, m.level());
    SpaceOptions options;
    options.threads = threads;
    const HhoSpace space(mesh, k, options);
    const NonlinearProblem problem = make_problem(problem_name);
    NewtonOptions newton;
    newton.tolerance = tol;
    newton.max_iterations = max_iter;
    const auto result = newton_solve(problem, space, newton);
    const double h = reported_meshsize(family, m.level(), mesh, space.geometry());
    std::printf("mesh %s, k=%d, h=%.4e, e_h=%.4e\n", m.label().c_str(), k, h,
                gradient_error(space, result.solution, problem.exact_gradient));
    std::printf("newton: %d iterations, increments", result.report.iterations);
    for (double inc : result.report.increments) std::printf(" %.3e", inc);
    std::printf("\n");
    return 0;
  }

  int run_mesh_info(const MeshChoice& m) {
    ValidationReport report;
    const PolytopalMesh mesh = m.path.empty() ? load_level_mesh(m.family, m.level()) : read_mesh(m.path, &report);
    const auto geometry = compute_geometry(mesh);
    const auto info = mesh_size(mesh, geometry);
    std::size_t min_faces = mesh.n_cells() ? mesh.cell(0).size() : 0;
    for (std::size_t c = 0; c < mesh.n_cells(); ++c) min_faces = std::min(min_faces, mesh.cell(c).size());
    std::printf("mesh %s\n", m.label().c_str());
    std::printf("cells %zu\nfaces %zu (%zu boundary)\nvertices %zu\n", mesh.n_cells(), mesh.n_faces(), mesh.n_boundary_faces(),
                mesh.n_vertices());
    std::printf("faces per cell %zu..%zu\n", min_faces, info.max_faces_per_cell);
    std::printf("h %.4e\nh_min %.4e\nquasi-uniformity %.4f\nregularity %.4f\n", info.h, info.h_min, info.quasi_uniformity,
                info.regularity);
    std::printf("repaired orientations %zu\n", report.repaired_orientations);
    return 0;
  }

  int run_study_command(StudyConfig config) {
    validate(config);
    const auto result = run_study(config);
    std::cout << format_table(result.records);
    for (const auto& d : result.diagnostics) std::cerr << "aborted column: " << d << "\n";
    if (config.out_dir.empty()) std::cout << "\n" << to_csv(result.records);
    return result.diagnostics.empty() ? 0 : 1;
  }

} // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hybrid high-order solver for strongly nonlinear elliptic problems on polygonal meshes"};
  app.require_subcommand(1);

  MeshChoice solve_mesh;
  int solve_k = 1;
  std::string problem = "mean-curvature";
  double tol = 1e-8;
  int max_iter = 25;
  unsigned threads = 1;
  auto* solve = app.add_subcommand("solve", "Solve on one mesh and print e_h and the Newton report");
  solve->add_option("--family", solve_mesh.family, "cartesian, triangular, hexagonal or kershaw");
  solve->add_option("--n", solve_mesh.n, "grid size (generated families) or file level (file families)");
  solve->add_option("--mesh", solve_mesh.path, "mesh file (.json or .typ2)");
  solve->add_option("--k", solve_k, "polynomial degree")->check(CLI::Range(0, 3));
  solve->add_option("--problem", problem, "problem name")->check(CLI::IsMember(problem_names()));
  solve->add_option("--tol", tol, "Newton tolerance")->check(CLI::PositiveNumber);
  solve->add_option("--max-iter", max_iter, "Newton iteration limit")->check(CLI::PositiveNumber);
  solve->add_option("--threads", threads, "assembly threads");

  StudyConfig study_config;
  std::string config_path, study_family;
  std::vector<int> study_k;
  std::vector<std::string> study_levels;
  auto* study = app.add_subcommand("study", "Run a convergence study and emit the table, CSV and plot data");
  study->add_option("--config", config_path, "JSON study configuration")->check(CLI::ExistingFile);
  study->add_option("--family", study_family, "mesh family");
  study->add_option("--k", study_k, "polynomial degrees, e.g. 1,2,3")->delimiter(',');
  study->add_option("--levels", study_levels, "grid sizes, file levels or mesh paths, e.g. 16,32,64")->delimiter(',');
  study->add_option("--problem", problem, "problem name")->check(CLI::IsMember(problem_names()));
  study->add_option("--tol", tol, "Newton tolerance")->check(CLI::PositiveNumber);
  study->add_option("--threads", threads, "assembly threads");
  std::string out_dir;
  study->add_option("--out", out_dir, "directory for CSV and plot files");

  MeshChoice info_mesh;
  auto* info = app.add_subcommand("mesh-info", "Validate a mesh and print a geometry summary");
  info->add_option("mesh", info_mesh.path, "mesh file")->check(CLI::ExistingFile);
  info->add_option("--family", info_mesh.family, "generated family instead of a file");
  info->add_option("--n", info_mesh.n, "grid size or file level");

  try {
    app.parse(argc, argv);
    if (*solve) check_mesh_choice(solve_mesh);
    if (*info) check_mesh_choice(info_mesh);
    if (*study) {
      if (!config_path.empty()) study_config = load_study_config(config_path);
      if (!study_family.empty()) study_config.family = study_family;
      if (!study_k.empty()) study_config.degrees = study_k;
      if (!study_levels.empty()) study_config.levels = parse_levels(study_levels);
      if (study->count("--problem")) study_config.problem = problem;
      if (study->count("--tol")) study_config.tolerance = tol;
      if (study->count("--threads")) study_config.threads = threads;
      if (!out_dir.empty()) study_config.out_dir = out_dir;
      validate(study_config);
    }
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : usage_error;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return usage_error;
  }

  try {
    if (*solve) return run_solve(solve_mesh, solve_k, problem, tol, max_iter, threads);
    if (*study) return run_study_command(study_config);
    return run_mesh_info(info_mesh);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == ErrorKind::FormatError ? usage_error : 1;
  }
}
