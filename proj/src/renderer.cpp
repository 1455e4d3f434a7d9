#include "sketchret/renderer.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sketchret {

namespace {

constexpr double kDeg = std::numbers::pi / 180.0;
constexpr double kNearPlane = 1e-3;

CameraPose make_pose(const Vec3& position, const Vec3& up, int ring, int azimuth, double elevation,
                     double azimuth_deg) {
  CameraPose pose;
  pose.position = position;
  pose.up = up;
  pose.ring_index = ring;
  pose.azimuth_index = azimuth;
  pose.elevation_deg = elevation;
  pose.azimuth_deg = azimuth_deg;
  return pose;
}

/// Depth-resolved coverage: for each pixel the index of the nearest triangle, or -1.
struct Coverage {
  int width = 0;
  int height = 0;
  std::vector<int> triangle;
};

struct ScreenVertex {
  double x;
  double y;
  double inv_depth;
};

// Pixels whose center lies exactly on a shared edge belong to exactly one of the two
// triangles (top-left rule), which keeps silhouettes of closed meshes free of cracks.
bool owns_edge(double ex, double ey) { return (ey > 0.0) || (ey == 0.0 && ex < 0.0); }

Coverage rasterize(const Mesh& mesh, const CameraPose& pose, const RasterSettings& rs) {
  if (rs.resolution < 16) throw std::invalid_argument("render: resolution must be at least 16");
  for (const auto& t : mesh.triangles) {
    for (auto k : t) {
      if (k >= mesh.vertices.size()) throw MeshStructureError("render: triangle index out of range");
    }
  }
  const Vec3 forward_raw = pose.look_at - pose.position;
  if (forward_raw.norm() == 0.0) throw std::invalid_argument("render: camera sits on its target");
  const Vec3 forward = forward_raw.normalized();
  const Vec3 right_raw = forward.cross(pose.up);
  if (right_raw.norm() < 1e-12) throw std::invalid_argument("render: up vector parallel to view");
  const Vec3 right = right_raw.normalized();
  const Vec3 cam_up = right.cross(forward);

  const int n = rs.resolution;
  Coverage cov{n, n, std::vector<int>(static_cast<std::size_t>(n) * n, -1)};
  std::vector<double> depth(cov.triangle.size(), 0.0);  // stores 1/z; larger is closer

  const double focal = 1.0 / std::tan(0.5 * rs.vertical_fov_deg * kDeg);
  const double half = 0.5 * n;

  std::vector<ScreenVertex> screen(mesh.vertices.size());
  std::vector<bool> visible(mesh.vertices.size());
  for (std::size_t i = 0; i < mesh.vertices.size(); ++i) {
    const Vec3 rel = mesh.vertices[i] - pose.position;
    const double zc = rel.dot(forward);
    visible[i] = zc > kNearPlane;
    const double inv = visible[i] ? 1.0 / zc : 0.0;
    screen[i] = {half + rel.dot(right) * focal * inv * half, half - rel.dot(cam_up) * focal * inv * half,
                 inv};
  }

  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    const auto& tri = mesh.triangles[t];
    if (!visible[tri[0]] || !visible[tri[1]] || !visible[tri[2]]) continue;
    ScreenVertex a = screen[tri[0]];
    ScreenVertex b = screen[tri[1]];
    ScreenVertex c = screen[tri[2]];
    double area = (b.x - a.x) * (c.y - a.y) - (b.y - a.y) * (c.x - a.x);
    if (area == 0.0 || !std::isfinite(area)) continue;
    if (area < 0.0) {
      std::swap(b, c);
      area = -area;
    }
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x, b.x, c.x}))));
    const int x1 = std::min(n - 1, static_cast<int>(std::ceil(std::max({a.x, b.x, c.x}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y, b.y, c.y}))));
    const int y1 = std::min(n - 1, static_cast<int>(std::ceil(std::max({a.y, b.y, c.y}))));

    // With y pointing down and positive area, the interior is where all three edge
    // functions are non-negative.
    auto edge = [](const ScreenVertex& p, const ScreenVertex& q, double px, double py) {
      return (q.x - p.x) * (py - p.y) - (q.y - p.y) * (px - p.x);
    };
    const bool own_bc = owns_edge(c.x - b.x, c.y - b.y);
    const bool own_ca = owns_edge(a.x - c.x, a.y - c.y);
    const bool own_ab = owns_edge(b.x - a.x, b.y - a.y);

    for (int y = y0; y <= y1; ++y) {
      const double py = y + 0.5;
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5;
        const double w0 = edge(b, c, px, py);
        const double w1 = edge(c, a, px, py);
        const double w2 = edge(a, b, px, py);
        if (w0 < 0.0 || w1 < 0.0 || w2 < 0.0) continue;
        if ((w0 == 0.0 && !own_bc) || (w1 == 0.0 && !own_ca) || (w2 == 0.0 && !own_ab)) continue;
        const double inv_z = (w0 * a.inv_depth + w1 * b.inv_depth + w2 * c.inv_depth) / area;
        const std::size_t idx = static_cast<std::size_t>(y) * n + x;
        if (inv_z > depth[idx]) {
          depth[idx] = inv_z;
          cov.triangle[idx] = static_cast<int>(t);
        }
      }
    }
  }
  return cov;
}

// Foreground never takes the background value, so shaded coverage is recoverable.
// Ambient floor keeps every lit pixel at least kMinShade - 128 levels above the grey
// background, so outlines survive even where the surface turns away from the light.
constexpr double kMinShade = 200.0;

std::uint8_t shade_value(double lambert) {
  return static_cast<std::uint8_t>(std::lround(kMinShade + (255.0 - kMinShade) * std::clamp(lambert, 0.0, 1.0)));
}

}  // namespace

CameraPose orbit_pose(double elevation_deg, double azimuth_deg, double distance) {
  if (!(distance > 0.0)) throw std::invalid_argument("orbit_pose: distance must be positive");
  if (std::abs(elevation_deg) > 90.0) throw std::invalid_argument("orbit_pose: elevation outside [-90, 90]");
  const double e = elevation_deg * kDeg;
  const double a = azimuth_deg * kDeg;
  if (std::abs(std::abs(elevation_deg) - 90.0) < 1e-9) {
    const Vec3 pos(0.0, elevation_deg > 0 ? distance : -distance, 0.0);
    return make_pose(pos, Vec3::UnitX(), 0, 0, elevation_deg, azimuth_deg);
  }
  // Rotation of (d cos e, d sin e, 0) about +Y by the azimuth.
  const Vec3 pos(distance * std::cos(e) * std::cos(a), distance * std::sin(e), -distance * std::cos(e) * std::sin(a));
  return make_pose(pos, Vec3::UnitY(), 0, 0, elevation_deg, azimuth_deg);
}

std::vector<CameraPose> ring_camera_poses(int ring_count, int views_per_ring, double distance) {
  if (!(distance > 0.0)) throw std::invalid_argument("ring_camera_poses: distance must be positive");
  if (ring_count < 2 || views_per_ring < 1) throw std::invalid_argument("ring_camera_poses: bad layout");
  std::vector<CameraPose> poses;
  poses.reserve(static_cast<std::size_t>(ring_count) * views_per_ring);
  for (int k = 0; k < ring_count; ++k) {
    const double elevation = -90.0 + 180.0 * k / (ring_count - 1);
    for (int j = 0; j < views_per_ring; ++j) {
      CameraPose pose = orbit_pose(elevation, 360.0 * j / views_per_ring, distance);
      pose.ring_index = k;
      pose.azimuth_index = j;
      poses.push_back(pose);
    }
  }
  return poses;
}

std::vector<CameraPose> thp_camera_poses(double distance) {
  if (!(distance > 0.0)) throw std::invalid_argument("thp_camera_poses: distance must be positive");
  std::vector<CameraPose> poses;
  poses.reserve(48);
  const double lift = 30.0 * kDeg;
  for (int setup = 0; setup < 4; ++setup) {
    const bool raised = setup == 1 || setup == 3;
    const double e = raised ? lift : 0.0;
    for (int j = 0; j < 12; ++j) {
      const double azimuth = 30.0 * j;
      const double a = azimuth * kDeg;
      Vec3 pos;
      Vec3 up;
      if (setup < 2) {
        pos = distance * Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
        up = Vec3::UnitZ();
      } else {
        pos = distance * Vec3(std::sin(e), std::cos(e) * std::cos(a), std::cos(e) * std::sin(a));
        // The orbit axis is X, which is never parallel to these view directions.
        up = Vec3::UnitX();
      }
      poses.push_back(make_pose(pos, up, setup, j, raised ? 30.0 : 0.0, azimuth));
    }
  }
  return poses;
}

ViewImage render_shaded(const Mesh& mesh, const CameraPose& pose, const RasterSettings& rs) {
  const Coverage cov = rasterize(mesh, pose, rs);
  ViewImage img(cov.width, cov.height, kShadedBackground, ImageKind::Shaded);
  std::vector<std::int16_t> shade(mesh.triangles.size(), -1);
  for (std::size_t i = 0; i < cov.triangle.size(); ++i) {
    const int t = cov.triangle[i];
    if (t < 0) continue;
    if (shade[t] < 0) {
      const auto& tri = mesh.triangles[t];
      const Vec3& a = mesh.vertices[tri[0]];
      const Vec3& b = mesh.vertices[tri[1]];
      const Vec3& c = mesh.vertices[tri[2]];
      const Vec3 normal = (b - a).cross(c - a);
      const Vec3 to_light = pose.position - (a + b + c) / 3.0;
      const double denom = normal.norm() * to_light.norm();
      const double lambert = denom > 0.0 ? std::abs(normal.dot(to_light)) / denom : 0.0;
      shade[t] = shade_value(lambert);
    }
    img.pixels[i] = static_cast<std::uint8_t>(shade[t]);
  }
  return img;
}

ViewImage render_silhouette(const Mesh& mesh, const CameraPose& pose, const RasterSettings& rs) {
  const Coverage cov = rasterize(mesh, pose, rs);
  ViewImage img(cov.width, cov.height, 0, ImageKind::Silhouette);
  for (std::size_t i = 0; i < cov.triangle.size(); ++i) {
    if (cov.triangle[i] >= 0) img.pixels[i] = 255;
  }
  return img;
}

RenderConfig RenderConfig::dh() {
  RenderConfig c;
  c.layout = RingLayout::Dh;
  c.rings = {2, 3, 4};
  c.views_per_ring = 7;
  return c;
}

RenderConfig RenderConfig::thp() {
  RenderConfig c;
  c.layout = RingLayout::Thp;
  c.rings = {0, 1, 2, 3};
  c.views_per_ring = 12;
  return c;
}

std::size_t RingSet::view_count() const {
  std::size_t n = 0;
  for (const auto& [k, views] : rings) n += views.size();
  return n;
}

std::vector<CameraPose> config_poses(const RenderConfig& config) {
  std::vector<CameraPose> all = config.layout == RingLayout::Thp
                                    ? thp_camera_poses(config.distance)
                                    : ring_camera_poses(7, config.views_per_ring, config.distance);
  if (config.layout == RingLayout::Thp) return all;
  std::vector<CameraPose> out;
  for (int ring : config.rings) {
    if (ring < 0 || ring > 6) throw std::invalid_argument("render config: ring index out of range");
    for (const auto& p : all) {
      if (p.ring_index == ring) out.push_back(p);
    }
  }
  return out;
}

RingSet render_rings(const Mesh& mesh, const RenderConfig& config) {
  RingSet set;
  set.object_id = mesh.id;
  for (const auto& pose : config_poses(config)) {
    ViewImage img = config.style == ImageKind::Silhouette ? render_silhouette(mesh, pose, config.raster)
                                                          : render_shaded(mesh, pose, config.raster);
    set.rings[pose.ring_index].push_back({pose, std::move(img)});
  }
  return set;
}

}  // namespace sketchret
