#pragma once

#include <Eigen/Core>

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sketchret {

using Vec3 = Eigen::Vector3d;

struct Mesh {
  std::string id;
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

struct Aabb {
  Vec3 min;
  Vec3 max;

  Vec3 extent() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

enum class Axis { X, Y, Z };

/// Malformed OBJ syntax. Carries the 1-based line number.
class ObjParseError : public std::runtime_error {
 public:
  ObjParseError(std::size_t line, const std::string& what);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

/// Well-formed input that violates mesh invariants (index range, vertex count, non-finite values).
class MeshStructureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses the `v` / `f` subset of Wavefront OBJ. Polygon faces are fan-triangulated,
/// `f` entries may use `i/t/n` syntax and negative (relative) indices, and every other
/// directive is skipped.
Mesh parse_obj(std::string_view text, std::string id = {});
Mesh load_obj(const std::string& path);

/// Writes `v` and `f` lines with round-trip precision.
std::string serialize_obj(const Mesh& mesh);
void save_obj(const Mesh& mesh, const std::string& path);

/// Throws MeshStructureError if any invariant of Mesh is broken.
void validate(const Mesh& mesh);

Aabb bounding_box(const Mesh& mesh);

/// Recenters the mesh on its bounding-box center and scales uniformly so that the
/// largest extent is exactly 2.
Mesh normalize_to_box(const Mesh& mesh);

Eigen::Matrix3d rotation_matrix(Axis axis, double degrees);
Mesh rotate_about_axis(const Mesh& mesh, Axis axis, double degrees);

Axis parse_axis(std::string_view name);
std::string_view axis_name(Axis axis);

}  // namespace sketchret
