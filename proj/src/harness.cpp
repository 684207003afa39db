#include "hho/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "hho/errors.hpp"
#include "hho/problem.hpp"

#ifndef HHO_DEFAULT_DATA_DIR
#define HHO_DEFAULT_DATA_DIR "data"
#endif

namespace hho {

  namespace {

    std::string format_number(double v) {
      char buf[32];
      std::snprintf(buf, sizeof buf, "%.4e", v);
      return buf;
    }

    std::vector<std::string> split(const std::string& line, char sep) {
      std::vector<std::string> out;
      std::string field;
      std::istringstream in(line);
      while (std::getline(in, field, sep)) out.push_back(field);
      if (!line.empty() && line.back() == sep) out.emplace_back();
      return out;
    }

    double parse_double(const std::string& s, std::size_t line) {
      std::size_t used = 0;
      double v = 0.;
      try {
        v = std::stod(s, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != s.size() || s.empty()) {
        throw Error(ErrorKind::FormatError, "CSV line " + std::to_string(line) + ": '" + s + "' is not a number");
      }
      return v;
    }

    void write_file(const std::filesystem::path& path, const std::string& text) {
      std::ofstream out(path, std::ios::binary);
      out << text;
      if (!out) throw Error(ErrorKind::ConfigError, "cannot write '" + path.string() + "'");
    }

  } // namespace

  const std::vector<std::string>& mesh_families() {
    static const std::vector<std::string> all{"cartesian", "triangular", "hexagonal", "kershaw"};
    return all;
  }

  bool is_generated_family(const std::string& family) { return family == "cartesian" || family == "triangular"; }

  std::string data_dir() {
    if (const char* env = std::getenv("HHO_DATA_DIR"); env && *env) return env;
    return HHO_DEFAULT_DATA_DIR;
  }

  std::string family_file(const std::string& family, std::size_t level) {
    if (family == "hexagonal") return data_dir() + "/hexagonal" + std::to_string(level) + ".typ2";
    if (family == "kershaw") return data_dir() + "/kershaw" + std::to_string(level) + ".json";
    throw Error(ErrorKind::ConfigError, "family '" + family + "' has no mesh files");
  }

  PolytopalMesh load_level_mesh(const std::string& family, const MeshLevel& level) {
    if (!level.path.empty()) return read_mesh(level.path);
    if (family == "cartesian") return generate_cartesian(level.n);
    if (family == "triangular") return generate_triangular(level.n);
    return read_mesh(family_file(family, level.n));
  }

  double reported_meshsize(const std::string& family, const MeshLevel& level, const PolytopalMesh& mesh,
                           const MeshGeometry& geometry) {
    if (family == "cartesian" && level.path.empty()) return 1. / static_cast<double>(level.n);
    return mesh_size(mesh, geometry).h;
  }

  void validate(const StudyConfig& config) {
    const auto& families = mesh_families();
    if (std::find(families.begin(), families.end(), config.family) == families.end()) {
      throw Error(ErrorKind::ConfigError, "unknown mesh family '" + config.family + "'");
    }
    const auto problems = problem_names();
    if (std::find(problems.begin(), problems.end(), config.problem) == problems.end()) {
      throw Error(ErrorKind::ConfigError, "unknown problem '" + config.problem + "'");
    }
    if (config.levels.size() < 2) throw Error(ErrorKind::ConfigError, "a study needs at least two refinement levels");
    for (const auto& level : config.levels) {
      if (level.path.empty() && level.n == 0) throw Error(ErrorKind::ConfigError, "refinement levels must be positive");
    }
    if (config.degrees.empty()) throw Error(ErrorKind::ConfigError, "no polynomial degree given");
    for (int k : config.degrees) {
      if (k < 0 || k > 3) throw Error(ErrorKind::ConfigError, "polynomial degree " + std::to_string(k) + " outside 0..3");
    }
    if (!(config.tolerance > 0.)) throw Error(ErrorKind::ConfigError, "tolerance must be positive");
    if (config.max_iterations < 1) throw Error(ErrorKind::ConfigError, "max_iterations must be at least 1");
  }

  StudyConfig parse_study_config(const std::string& text) {
    StudyConfig config;
    try {
      const auto j = nlohmann::json::parse(text);
      if (!j.is_object()) throw Error(ErrorKind::ConfigError, "study configuration must be a JSON object");
      for (const auto& [key, value] : j.items()) {
        if (key == "problem") config.problem = value.get<std::string>();
        else if (key == "family") config.family = value.get<std::string>();
        else if (key == "k") config.degrees = value.get<std::vector<int>>();
        else if (key == "tolerance") config.tolerance = value.get<double>();
        else if (key == "max_iterations") config.max_iterations = value.get<int>();
        else if (key == "threads") config.threads = value.get<unsigned>();
        else if (key == "out") config.out_dir = value.get<std::string>();
        else if (key == "levels") {
          for (const auto& level : value) {
            if (level.is_string()) config.levels.push_back({0, level.get<std::string>()});
            else if (level.is_number_unsigned()) config.levels.push_back({level.get<std::size_t>(), {}});
            else throw Error(ErrorKind::ConfigError, "levels must be positive integers or mesh paths");
          }
        } else {
          throw Error(ErrorKind::ConfigError, "unknown configuration key '" + key + "'");
        }
      }
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorKind::ConfigError, std::string("invalid study configuration: ") + e.what());
    }
    validate(config);
    return config;
  }

  StudyConfig load_study_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorKind::ConfigError, "cannot open configuration '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    try {
      return parse_study_config(ss.str());
    } catch (const Error& e) {
      throw Error(e.kind(), path + ": " + e.message());
    }
  }

  double gradient_error(const HhoSpace& space, const HybridVector& uh, const VectorField& exact_gradient) {
    if (!exact_gradient) throw Error(ErrorKind::InvalidArgument, "gradient_error needs the exact gradient");
    const int k = space.degree();
    const std::size_t nT = space.layout().cell_dofs();
    const int degree = default_quadrature_degree(k);
    double err = 0., norm = 0.;
    for (std::size_t c = 0; c < space.mesh().n_cells(); ++c) {
      const auto& cell = space.geometry().cells[c];
      CellBasis basis(cell.centroid, cell.diameter, k + 1);
      if (space.options().orthonormal) {
        basis.orthonormalize(cell_quadrature(space.mesh(), space.geometry(), c, std::max(space.quadrature_degree(), 2 * (k + 1))));
      }
      const auto rule = cell_quadrature(space.mesh(), space.geometry(), c, degree);
      const MatrixXd phi = basis.values(rule).leftCols(nT);
      const VectorXd g = space.operators(c).gradient * space.restrict_to_cell(uh, c);
      const VectorXd gx = phi * g.head(nT), gy = phi * g.tail(nT);
      for (std::size_t q = 0; q < rule.size(); ++q) {
        const Vector2 exact = exact_gradient(rule.points[q]);
        err += rule.weights[q] * (exact - Vector2(gx[q], gy[q])).squaredNorm();
        norm += rule.weights[q] * exact.squaredNorm();
      }
    }
    if (!(norm > 0.)) throw Error(ErrorKind::DegenerateExactSolution, "the exact gradient vanishes identically");
    return std::sqrt(err / norm);
  }

  std::vector<ConvergenceRecord> convergence_rate(std::vector<ConvergenceRecord> records) {
    std::size_t start = 0;
    while (start < records.size()) {
      std::size_t end = start + 1;
      while (end < records.size() && records[end].family == records[start].family && records[end].k == records[start].k) ++end;
      if (end - start < 2) {
        throw Error(ErrorKind::InvalidSequence, "family " + records[start].family + ", k=" + std::to_string(records[start].k) +
                                                  ": rates need at least two levels");
      }
      records[start].rate.reset();
      for (std::size_t i = start + 1; i < end; ++i) {
        const auto& prev = records[i - 1];
        auto& cur = records[i];
        if (cur.h == prev.h) {
          throw Error(ErrorKind::InvalidSequence, "equal consecutive meshsizes h=" + format_number(cur.h));
        }
        cur.rate = std::log(cur.error / prev.error) / std::log(cur.h / prev.h);
      }
      start = end;
    }
    return records;
  }

  StudyResult run_study(const StudyConfig& config) {
    validate(config);
    const NonlinearProblem problem = make_problem(config.problem);
    NewtonOptions newton;
    newton.tolerance = config.tolerance;
    newton.max_iterations = config.max_iterations;

    // meshes are shared by every k
    std::vector<PolytopalMesh> meshes;
    for (const auto& level : config.levels) meshes.push_back(load_level_mesh(config.family, level));

    StudyResult result;
    for (int k : config.degrees) {
      std::vector<ConvergenceRecord> column;
      try {
        for (std::size_t l = 0; l < meshes.size(); ++l) {
          SpaceOptions options;
          options.threads = config.threads;
          const HhoSpace space(meshes[l], k, options);
          const auto solved = newton_solve(problem, space, newton);
          column.push_back({config.family, k, reported_meshsize(config.family, config.levels[l], meshes[l], space.geometry()),
                            gradient_error(space, solved.solution, problem.exact_gradient), std::nullopt,
                            solved.report.iterations});
        }
        column = convergence_rate(std::move(column));
      } catch (const Error& e) {
        result.diagnostics.push_back(config.family + " k=" + std::to_string(k) + ": " + e.what());
        continue;
      }
      result.records.insert(result.records.end(), column.begin(), column.end());
    }
    if (!config.out_dir.empty() && !result.records.empty()) write_study_files(result.records, config.family, config.out_dir);
    return result;
  }

  std::string to_csv(const std::vector<ConvergenceRecord>& records) {
    std::string out = "family,k,h,error,rate,newton_iters\n";
    for (const auto& r : records) {
      out += r.family + "," + std::to_string(r.k) + "," + format_number(r.h) + "," + format_number(r.error) + "," +
             (r.rate ? format_number(*r.rate) : std::string()) + "," + std::to_string(r.newton_iterations) + "\n";
    }
    return out;
  }

  std::vector<ConvergenceRecord> parse_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != "family,k,h,error,rate,newton_iters") {
      throw Error(ErrorKind::FormatError, "CSV line 1: unexpected header");
    }
    std::vector<ConvergenceRecord> records;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
      ++lineno;
      if (line.empty()) continue;
      const auto fields = split(line, ',');
      if (fields.size() != 6) throw Error(ErrorKind::FormatError, "CSV line " + std::to_string(lineno) + ": expected 6 fields");
      ConvergenceRecord r;
      r.family = fields[0];
      r.k = static_cast<int>(parse_double(fields[1], lineno));
      r.h = parse_double(fields[2], lineno);
      r.error = parse_double(fields[3], lineno);
      if (!fields[4].empty()) r.rate = parse_double(fields[4], lineno);
      r.newton_iterations = static_cast<int>(parse_double(fields[5], lineno));
      records.push_back(r);
    }
    return records;
  }

  std::string to_plot_data(const std::vector<ConvergenceRecord>& records) {
    std::string out;
    int current = -1;
    for (const auto& r : records) {
      if (r.k != current) {
        if (current >= 0) out += "\n\n";
        out += "# " + r.family + " k=" + std::to_string(r.k) + "\n# h error\n";
        current = r.k;
      }
      out += format_number(r.h) + " " + format_number(r.error) + "\n";
    }
    return out;
  }

  std::string to_gnuplot_script(const std::vector<ConvergenceRecord>& records, const std::string& data_file,
                                const std::string& image_file) {
    std::vector<int> degrees;
    for (const auto& r : records) {
      if (degrees.empty() || degrees.back() != r.k) degrees.push_back(r.k);
    }
    std::string out = "set terminal pngcairo size 800,600\nset output '" + image_file + "'\n"
                      "set logscale xy\nset xlabel 'h'\nset ylabel 'relative gradient error'\nset key left top\n"
                      "plot ";
    for (std::size_t i = 0; i < degrees.size(); ++i) {
      if (i) out += ", \\\n     ";
      out += "'" + data_file + "' index " + std::to_string(i) + " using 1:2 with linespoints title 'k=" +
             std::to_string(degrees[i]) + "'";
    }
    return out + "\n";
  }

  std::string format_table(const std::vector<ConvergenceRecord>& records) {
    std::vector<int> degrees;
    std::vector<double> hs;
    std::map<std::pair<int, std::size_t>, const ConvergenceRecord*> cell;
    std::map<int, std::size_t> row_of_k;
    for (const auto& r : records) {
      if (std::find(degrees.begin(), degrees.end(), r.k) == degrees.end()) degrees.push_back(r.k);
      const std::size_t row = row_of_k[r.k]++;
      if (row >= hs.size()) hs.push_back(r.h);
      cell[{r.k, row}] = &r;
    }
    std::ostringstream os;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%-11s", "h");
    os << buf;
    for (int k : degrees) {
      std::snprintf(buf, sizeof buf, " | k=%d %-10s %-6s", k, "e_h", "rate");
      os << buf;
    }
    os << "\n";
    for (std::size_t row = 0; row < hs.size(); ++row) {
      std::snprintf(buf, sizeof buf, "%-11s", format_number(hs[row]).c_str());
      os << buf;
      for (int k : degrees) {
        const auto it = cell.find({k, row});
        if (it == cell.end()) {
          std::snprintf(buf, sizeof buf, " | %-21s", "");
        } else {
          const auto* r = it->second;
          char rate[16] = "-";
          if (r->rate) std::snprintf(rate, sizeof rate, "%.3f", *r->rate);
          std::snprintf(buf, sizeof buf, " | %-14s %-6s", format_number(r->error).c_str(), rate);
        }
        os << buf;
      }
      os << "\n";
    }
    return os.str();
  }

  void write_study_files(const std::vector<ConvergenceRecord>& records, const std::string& family, const std::string& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error(ErrorKind::ConfigError, "cannot create output directory '" + dir + "': " + ec.message());
    const std::filesystem::path base(dir);
    write_file(base / (family + ".csv"), to_csv(records));
    write_file(base / (family + ".dat"), to_plot_data(records));
    write_file(base / (family + ".gp"), to_gnuplot_script(records, family + ".dat", family + ".png"));
  }

} // namespace hho
