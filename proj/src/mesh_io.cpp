#include "sketchret/mesh.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

namespace sketchret {

ObjParseError::ObjParseError(std::size_t line, const std::string& what)
    : std::runtime_error("obj line " + std::to_string(line) + ": " + what), line_(line) {}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_double(std::string_view tok, std::size_t line_no) {
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) {
    throw ObjParseError(line_no, "bad number '" + std::string(tok) + "'");
  }
  return value;
}

long parse_index(std::string_view tok, std::size_t line_no) {
  auto slash = tok.find('/');
  auto head = tok.substr(0, slash);
  long value = 0;
  auto [ptr, ec] = std::from_chars(head.data(), head.data() + head.size(), value);
  if (head.empty() || ec != std::errc() || ptr != head.data() + head.size() || value == 0) {
    throw ObjParseError(line_no, "bad face index '" + std::string(tok) + "'");
  }
  return value;
}

}  // namespace

Mesh parse_obj(std::string_view text, std::string id) {
  Mesh mesh;
  mesh.id = std::move(id);
  // Faces are resolved after all vertices are known so forward references fail
  // with a structural error rather than a syntax error.
  struct RawFace {
    std::vector<long> idx;
    std::size_t line;
  };
  std::vector<RawFace> faces;

  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;

    if (auto hash = line.find('#'); hash != std::string_view::npos) line = line.substr(0, hash);
    auto tokens = split_ws(line);
    if (tokens.empty()) continue;

    if (tokens[0] == "v") {
      if (tokens.size() < 4) throw ObjParseError(line_no, "vertex needs 3 coordinates");
      Vec3 p(parse_double(tokens[1], line_no), parse_double(tokens[2], line_no),
             parse_double(tokens[3], line_no));
      if (!p.allFinite()) throw ObjParseError(line_no, "non-finite vertex coordinate");
      mesh.vertices.push_back(p);
    } else if (tokens[0] == "f") {
      if (tokens.size() < 4) throw ObjParseError(line_no, "face needs at least 3 vertices");
      RawFace face{{}, line_no};
      for (std::size_t t = 1; t < tokens.size(); ++t) {
        long k = parse_index(tokens[t], line_no);
        // Negative indices are relative to the vertices read so far.
        if (k < 0) k = static_cast<long>(mesh.vertices.size()) + k + 1;
        face.idx.push_back(k - 1);
      }
      faces.push_back(std::move(face));
    }
  }
  const long n = static_cast<long>(mesh.vertices.size());
  for (const auto& face : faces) {
    for (long k : face.idx) {
      if (k < 0 || k >= n) {
        throw MeshStructureError("face on line " + std::to_string(face.line) +
                                 " references vertex " + std::to_string(k + 1) + " of " +
                                 std::to_string(n));
      }
    }
    for (std::size_t t = 1; t + 1 < face.idx.size(); ++t) {
      mesh.triangles.push_back({static_cast<std::uint32_t>(face.idx[0]),
                                static_cast<std::uint32_t>(face.idx[t]),
                                static_cast<std::uint32_t>(face.idx[t + 1])});
    }
  }
  if (mesh.vertices.size() < 3) {
    throw MeshStructureError("mesh has " + std::to_string(mesh.vertices.size()) +
                             " vertices, need at least 3");
  }
  return mesh;
}

Mesh load_obj(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  std::string stem = path;
  if (auto slash = stem.find_last_of('/'); slash != std::string::npos) stem = stem.substr(slash + 1);
  if (auto dot = stem.rfind('.'); dot != std::string::npos) stem = stem.substr(0, dot);
  return parse_obj(buf.str(), stem);
}

std::string serialize_obj(const Mesh& mesh) {
  std::string out;
  char buf[128];
  if (!mesh.id.empty()) out += "# " + mesh.id + "\n";
  for (const auto& v : mesh.vertices) {
    std::snprintf(buf, sizeof buf, "v %.17g %.17g %.17g\n", v.x(), v.y(), v.z());
    out += buf;
  }
  for (const auto& t : mesh.triangles) {
    std::snprintf(buf, sizeof buf, "f %u %u %u\n", t[0] + 1, t[1] + 1, t[2] + 1);
    out += buf;
  }
  return out;
}

void save_obj(const Mesh& mesh, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << serialize_obj(mesh);
}

void validate(const Mesh& mesh) {
  if (mesh.vertices.size() < 3) throw MeshStructureError("mesh needs at least 3 vertices");
  for (const auto& v : mesh.vertices) {
    if (!v.allFinite()) throw MeshStructureError("non-finite vertex coordinate");
  }
  for (const auto& t : mesh.triangles) {
    for (auto k : t) {
      if (k >= mesh.vertices.size()) throw MeshStructureError("triangle index out of range");
    }
  }
}

Aabb bounding_box(const Mesh& mesh) {
  if (mesh.vertices.empty()) throw std::invalid_argument("bounding_box: mesh has no vertices");
  Aabb box{mesh.vertices.front(), mesh.vertices.front()};
  for (const auto& v : mesh.vertices) {
    box.min = box.min.cwiseMin(v);
    box.max = box.max.cwiseMax(v);
  }
  return box;
}

Mesh normalize_to_box(const Mesh& mesh) {
  const Aabb box = bounding_box(mesh);
  const double largest = box.extent().maxCoeff();
  if (!(largest > 0.0)) throw MeshStructureError("normalize_to_box: degenerate mesh (zero extent)");
  const Vec3 center = box.center();
  const double scale = 2.0 / largest;
  Mesh out = mesh;
  for (auto& v : out.vertices) v = (v - center) * scale;
  return out;
}

Eigen::Matrix3d rotation_matrix(Axis axis, double degrees) {
  const double r = degrees * std::numbers::pi / 180.0;
  const double c = std::cos(r);
  const double s = std::sin(r);
  Eigen::Matrix3d m;
  switch (axis) {
    case Axis::X: m << 1, 0, 0, 0, c, -s, 0, s, c; break;
    case Axis::Y: m << c, 0, s, 0, 1, 0, -s, 0, c; break;
    case Axis::Z: m << c, -s, 0, s, c, 0, 0, 0, 1; break;
  }
  return m;
}

Mesh rotate_about_axis(const Mesh& mesh, Axis axis, double degrees) {
  const Eigen::Matrix3d rot = rotation_matrix(axis, degrees);
  Mesh out = mesh;
  for (auto& v : out.vertices) v = rot * v;
  return out;
}

Axis parse_axis(std::string_view name) {
  if (name == "x" || name == "X") return Axis::X;
  if (name == "y" || name == "Y") return Axis::Y;
  if (name == "z" || name == "Z") return Axis::Z;
  throw std::invalid_argument("unknown axis '" + std::string(name) + "'");
}

std::string_view axis_name(Axis axis) {
  switch (axis) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

}  // namespace sketchret
