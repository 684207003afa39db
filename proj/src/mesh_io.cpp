#include <fstream>
#include <sstream>

#include <json.hpp>

#include "hho/errors.hpp"
#include "hho/mesh.hpp"

namespace hho {

  namespace {

    std::string slurp(const std::string& path) {
      std::ifstream in(path, std::ios::binary);
      if (!in) throw Error(ErrorKind::FormatError, "cannot open mesh file '" + path + "'");
      std::ostringstream ss;
      ss << in.rdbuf();
      return ss.str();
    }

    std::string lowercase(std::string s) {
      for (auto& ch : s) ch = static_cast<char>(std::tolower(static_cast<unsigned char>(ch)));
      return s;
    }

    // Line-oriented tokenizer that remembers where each token came from.
    class Typ2Reader {
    public:
      explicit Typ2Reader(const std::string& text) {
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
          ++lineno;
          std::istringstream ls(line);
          std::string tok;
          while (ls >> tok) m_tokens.push_back({tok, lineno});
        }
      }

      bool done() const { return m_pos >= m_tokens.size(); }
      std::size_t line() const { return done() ? (m_tokens.empty() ? 0 : m_tokens.back().second) : m_tokens[m_pos].second; }

      std::string word(const char* what) {
        if (done()) fail(std::string("unexpected end of file, expected ") + what);
        return m_tokens[m_pos++].first;
      }

      template <class T>
      T number(const char* what) {
        const std::size_t at = line();
        const std::string tok = word(what);
        std::istringstream ss(tok);
        T value{};
        ss >> value;
        if (ss.fail() || !ss.eof()) {
          throw Error(ErrorKind::FormatError, "line " + std::to_string(at) + ": expected " + what + ", got '" + tok + "'");
        }
        return value;
      }

      [[noreturn]] void fail(const std::string& what) const {
        throw Error(ErrorKind::FormatError, "line " + std::to_string(line()) + ": " + what);
      }

    private:
      std::vector<std::pair<std::string, std::size_t>> m_tokens;
      std::size_t m_pos = 0;
    };

  } // namespace

  MeshFormat format_from_path(const std::string& path) {
    const auto dot = path.find_last_of('.');
    if (dot != std::string::npos && lowercase(path.substr(dot)) == ".typ2") return MeshFormat::FvcaTyp2;
    return MeshFormat::NativeJson;
  }

  PolytopalMesh parse_native_json(const std::string& text, ValidationReport* report) {
    nlohmann::json doc;
    try {
      doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
      throw Error(ErrorKind::FormatError, std::string("JSON ") + e.what());
    }
    if (!doc.is_object() || !doc.contains("vertices") || !doc.contains("cells")) {
      throw Error(ErrorKind::FormatError, "mesh JSON must be an object with 'vertices' and 'cells'");
    }
    const auto& jv = doc["vertices"];
    const auto& jc = doc["cells"];
    if (!jv.is_array() || !jc.is_array()) throw Error(ErrorKind::FormatError, "'vertices' and 'cells' must be arrays");

    std::vector<Vector2> vertices;
    vertices.reserve(jv.size());
    for (std::size_t i = 0; i < jv.size(); ++i) {
      const auto& p = jv[i];
      if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number()) {
        throw Error(ErrorKind::FormatError, "vertices[" + std::to_string(i) + "] is not a pair of numbers");
      }
      vertices.emplace_back(p[0].get<double>(), p[1].get<double>());
    }
    std::vector<std::vector<std::size_t>> cells;
    cells.reserve(jc.size());
    for (std::size_t c = 0; c < jc.size(); ++c) {
      const auto& cell = jc[c];
      if (!cell.is_array()) throw Error(ErrorKind::FormatError, "cells[" + std::to_string(c) + "] is not an array");
      std::vector<std::size_t> ids;
      for (const auto& v : cell) {
        if (!v.is_number_unsigned()) {
          throw Error(ErrorKind::FormatError, "cells[" + std::to_string(c) + "] contains a non-index entry");
        }
        ids.push_back(v.get<std::size_t>());
      }
      cells.push_back(std::move(ids));
    }
    return PolytopalMesh::from_cells(std::move(vertices), std::move(cells), report);
  }

  PolytopalMesh parse_fvca_typ2(const std::string& text, ValidationReport* report) {
    Typ2Reader in(text);
    if (lowercase(in.word("'Vertices' header")) != "vertices") in.fail("expected 'Vertices' header");
    const auto nv = in.number<std::size_t>("vertex count");
    std::vector<Vector2> vertices;
    vertices.reserve(nv);
    for (std::size_t i = 0; i < nv; ++i) {
      const double x = in.number<double>("vertex x coordinate");
      const double y = in.number<double>("vertex y coordinate");
      vertices.emplace_back(x, y);
    }
    if (lowercase(in.word("'cells' header")) != "cells") in.fail("expected 'cells' header");
    const auto nc = in.number<std::size_t>("cell count");
    std::vector<std::vector<std::size_t>> cells(nc);
    for (std::size_t c = 0; c < nc; ++c) {
      const auto n = in.number<std::size_t>("cell vertex count");
      for (std::size_t i = 0; i < n; ++i) {
        const auto id = in.number<std::size_t>("cell vertex index");
        if (id == 0 || id > nv) in.fail("vertex index " + std::to_string(id) + " out of range (1-based)");
        cells[c].push_back(id - 1);
      }
    }
    // Any trailing sections (edges, ...) are redundant with the cell list and ignored.
    return PolytopalMesh::from_cells(std::move(vertices), std::move(cells), report);
  }

  PolytopalMesh read_mesh(const std::string& path, MeshFormat format, ValidationReport* report) {
    const std::string text = slurp(path);
    try {
      return format == MeshFormat::FvcaTyp2 ? parse_fvca_typ2(text, report) : parse_native_json(text, report);
    } catch (const Error& e) {
      throw Error(e.kind(), path + ": " + e.message());
    }
  }

  PolytopalMesh read_mesh(const std::string& path, ValidationReport* report) {
    return read_mesh(path, format_from_path(path), report);
  }

  std::string to_native_json(const PolytopalMesh& mesh) {
    nlohmann::json doc;
    doc["vertices"] = nlohmann::json::array();
    for (const auto& v : mesh.vertices()) doc["vertices"].push_back({v.x(), v.y()});
    doc["cells"] = mesh.cells();
    return doc.dump();
  }

  void write_native_json(const PolytopalMesh& mesh, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path + "'");
    out << to_native_json(mesh) << '\n';
  }

} // namespace hho
