#include "doctest.h"
#include "test_support.hpp"

#include "sketchret/renderer.hpp"
#include "sketchret/synthetic.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

using namespace sketchret;

namespace {

constexpr double kPi = std::numbers::pi;

// Independent pinhole projection: camera basis from the pose, pixel = center + focal * (x/z, -y/z).
Eigen::Vector2d project(const CameraPose& pose, const RasterSettings& rs, const Vec3& p) {
  const Vec3 f = (pose.look_at - pose.position).normalized();
  const Vec3 r = f.cross(pose.up).normalized();
  const Vec3 u = r.cross(f);
  const Vec3 rel = p - pose.position;
  const double half = rs.resolution / 2.0;
  const double focal_px = half / std::tan(rs.vertical_fov_deg * kPi / 360.0);
  return {half + focal_px * rel.dot(r) / rel.dot(f), half - focal_px * rel.dot(u) / rel.dot(f)};
}

double cross2(const Eigen::Vector2d& o, const Eigen::Vector2d& a, const Eigen::Vector2d& b) {
  return (a - o).x() * (b - o).y() - (a - o).y() * (b - o).x();
}

// Area of the convex hull of projected points (monotone chain + shoelace).
double hull_area(std::vector<Eigen::Vector2d> pts) {
  std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) { return a.x() < b.x() || (a.x() == b.x() && a.y() < b.y()); });
  std::vector<Eigen::Vector2d> hull(2 * pts.size());
  std::size_t k = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    while (k >= 2 && cross2(hull[k - 2], hull[k - 1], pts[i]) <= 0) --k;
    hull[k++] = pts[i];
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i > 0; --i) {
    while (k >= t && cross2(hull[k - 2], hull[k - 1], pts[i - 1]) <= 0) --k;
    hull[k++] = pts[i - 1];
  }
  hull.resize(k - 1);
  double area = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    const auto& a = hull[i];
    const auto& b = hull[(i + 1) % hull.size()];
    area += a.x() * b.y() - b.x() * a.y();
  }
  return std::abs(area) / 2.0;
}

std::size_t foreground(const ViewImage& img, std::uint8_t background) {
  return static_cast<std::size_t>(std::count_if(img.pixels.begin(), img.pixels.end(), [&](auto p) { return p != background; }));
}

int components4(const ViewImage& img) {
  std::vector<bool> seen(img.size(), false);
  int count = 0;
  for (std::size_t s = 0; s < img.size(); ++s) {
    if (img.pixels[s] == 0 || seen[s]) continue;
    ++count;
    std::vector<std::size_t> stack{s};
    seen[s] = true;
    while (!stack.empty()) {
      const std::size_t i = stack.back();
      stack.pop_back();
      const int x = static_cast<int>(i % img.width);
      const int y = static_cast<int>(i / img.width);
      const int dx[4] = {1, -1, 0, 0};
      const int dy[4] = {0, 0, 1, -1};
      for (int k = 0; k < 4; ++k) {
        const int nx = x + dx[k];
        const int ny = y + dy[k];
        if (nx < 0 || ny < 0 || nx >= img.width || ny >= img.height) continue;
        const std::size_t n = static_cast<std::size_t>(ny) * img.width + nx;
        if (img.pixels[n] != 0 && !seen[n]) {
          seen[n] = true;
          stack.push_back(n);
        }
      }
    }
  }
  return count;
}

Mesh unit_cube() {
  Mesh m = make_box(Vec3::Zero(), Vec3(1, 1, 1));
  m.id = "cube";
  return m;
}

}  // namespace

TEST_CASE("ring camera poses") {
  const auto poses = ring_camera_poses(7, 12, 3.0);
  REQUIRE(poses.size() == 84);
  for (const auto& p : poses) {
    CHECK(std::abs(p.position.norm() - 3.0) < 1e-9);
    CHECK(p.position != p.look_at);
    CHECK((p.look_at - p.position).normalized().cross(p.up).norm() > 1e-6);
  }
  const auto& r3v0 = poses[3 * 12];
  CHECK(r3v0.ring_index == 3);
  CHECK(r3v0.azimuth_index == 0);
  CHECK((r3v0.position - Vec3(3, 0, 0)).norm() < 1e-9);
  CHECK(r3v0.elevation_deg == 0.0);
  CHECK(poses[0].elevation_deg == -90.0);
  CHECK(poses[0].position.y() == doctest::Approx(-3.0));
  CHECK(poses[83].elevation_deg == 90.0);

  // azimuths uniformly spaced within every ring
  for (int ring = 1; ring < 6; ++ring) {
    for (int j = 0; j < 12; ++j) {
      const Vec3 a = poses[ring * 12 + j].position;
      const Vec3 b = poses[ring * 12 + (j + 1) % 12].position;
      const Vec3 fa(a.x(), 0, a.z());
      const Vec3 fb(b.x(), 0, b.z());
      const double angle = std::acos(std::clamp(fa.normalized().dot(fb.normalized()), -1.0, 1.0));
      CHECK(angle == doctest::Approx(kPi / 6));
    }
  }
}

TEST_CASE("four-setup projection poses") {
  const auto poses = thp_camera_poses(3.0);
  REQUIRE(poses.size() == 48);
  CHECK(poses[0].ring_index == 0);
  CHECK(poses[0].elevation_deg == 0.0);
  CHECK(poses[0].azimuth_deg == 0.0);
  CHECK((poses[0].position - Vec3(3, 0, 0)).norm() < 1e-9);
  for (int j = 0; j < 12; ++j) {
    const Vec3& p = poses[12 + j].position;
    // setup (b): 30 degrees above the Oxy plane with +Z up
    CHECK(std::asin(p.z() / p.norm()) * 180.0 / kPi == doctest::Approx(30.0).epsilon(1e-12));
    CHECK(std::abs(poses[j].position.z()) < 1e-9);  // setup (a) stays in Oxy
    CHECK(std::abs(poses[24 + j].position.x()) < 1e-9);  // setup (c) stays in Oyz
  }
  std::set<int> setups;
  for (const auto& p : poses) {
    setups.insert(p.ring_index);
    CHECK(std::abs(p.position.norm() - 3.0) < 1e-9);
  }
  CHECK(setups == std::set<int>{0, 1, 2, 3});
}

TEST_CASE("render config view counts") {
  const Mesh m = normalize_to_box(make_creature(3, 1));
  RenderConfig rc;
  rc.raster.resolution = 32;
  CHECK(render_rings(m, rc).view_count() == 36);
  rc.rings = {3};
  CHECK(render_rings(m, rc).view_count() == 12);
  RenderConfig dh = RenderConfig::dh();
  dh.raster.resolution = 32;
  CHECK(render_rings(m, dh).view_count() == 21);
  RenderConfig thp = RenderConfig::thp();
  thp.raster.resolution = 32;
  const RingSet t = render_rings(m, thp);
  CHECK(t.view_count() == 48);
  CHECK(t.rings.size() == 4);
}

TEST_CASE("empty mesh renders to background") {
  Mesh empty;
  const CameraPose pose = orbit_pose(0, 0, 3);
  RasterSettings rs;
  rs.resolution = 32;
  const ViewImage shaded = render_shaded(empty, pose, rs);
  CHECK(foreground(shaded, kShadedBackground) == 0);
  CHECK(shaded.size() == 32u * 32u);
  CHECK(count_nonzero(render_silhouette(empty, pose, rs)) == 0);
}

TEST_CASE("cube coverage matches the analytic projected area") {
  const Mesh cube = unit_cube();
  RasterSettings rs;
  rs.resolution = 256;  // a face edge may lose up to one pixel row, so keep the cube > 100 px wide
  for (auto [elev, az] : {std::pair{0.0, 0.0}, {20.0, 35.0}, {-35.0, 200.0}, {60.0, 110.0}}) {
    const CameraPose pose = orbit_pose(elev, az, 6.0);
    std::vector<Eigen::Vector2d> corners;
    for (const auto& v : cube.vertices) corners.push_back(project(pose, rs, v));
    const double expected = hull_area(corners) / (256.0 * 256.0);
    const double got = static_cast<double>(count_nonzero(render_silhouette(cube, pose, rs))) / (256.0 * 256.0);
    CHECK_MESSAGE(std::abs(got - expected) <= 0.02 * expected, elev, " ", az, " ", got, " ", expected);
  }
}

TEST_CASE("sphere silhouette area is the analytic disc area") {
  const Mesh sphere = make_icosphere(1.0, 4);
  RasterSettings rs;
  const double distance = 3.0;
  const double focal_px = (rs.resolution / 2.0) / std::tan(rs.vertical_fov_deg * kPi / 360.0);
  // The silhouette cone has half-angle asin(r/d); its image is a circle of radius f tan(asin(r/d)).
  const double radius_px = focal_px * std::tan(std::asin(1.0 / distance));
  const double expected = kPi * radius_px * radius_px;
  Rng rng(3);
  for (int trial = 0; trial < 8; ++trial) {
    const CameraPose pose = orbit_pose(uniform_real(rng, -89, 89), uniform_real(rng, 0, 360), distance);
    const ViewImage sil = render_silhouette(sphere, pose, rs);
    CHECK(std::abs(static_cast<double>(count_nonzero(sil)) - expected) <= 0.03 * expected);
    CHECK(components4(sil) == 1);
  }
}

TEST_CASE("silhouette of closed convex meshes is one 4-connected component") {
  Rng rng(9);
  const std::vector<Mesh> shapes = {unit_cube(), make_ellipsoid(Vec3::Zero(), Vec3(1.0, 0.4, 0.7)),
                                    make_cylinder(Vec3(-1, 0, 0), Vec3(1, 0, 0), 0.3),
                                    make_cone(Vec3(0, -1, 0), Vec3(0, 1, 0), 0.8)};
  for (const auto& shape : shapes) {
    for (int trial = 0; trial < 10; ++trial) {
      const CameraPose pose = orbit_pose(uniform_real(rng, -80, 80), uniform_real(rng, 0, 360), uniform_real(rng, 3, 6));
      CHECK(components4(render_silhouette(shape, pose, {64, 45.0})) == 1);
    }
  }
}

TEST_CASE("silhouette foreground equals shaded foreground; rendering is deterministic") {
  const Mesh m = normalize_to_box(make_creature(7, 4));
  for (const auto& pose : ring_camera_poses(7, 4, 3.0)) {
    const ViewImage shaded = render_shaded(m, pose, {96, 45.0});
    const ViewImage sil = render_silhouette(m, pose, {96, 45.0});
    for (std::size_t i = 0; i < shaded.size(); ++i) {
      CHECK_MESSAGE((shaded.pixels[i] != kShadedBackground) == (sil.pixels[i] != 0), "pixel ", i);
    }
    CHECK(render_shaded(m, pose, {96, 45.0}) == shaded);
  }
}

TEST_CASE("shading follows the documented Lambert formula") {
  // A face seen head-on is brightest; a 60 degree tilt gives round(200 + 55 * 0.5).
  Mesh quad;
  quad.vertices = {{0, -0.5, -0.5}, {0, 0.5, -0.5}, {0, 0.5, 0.5}, {0, -0.5, 0.5}};
  quad.triangles = {{0, 1, 2}, {0, 2, 3}};
  RasterSettings rs{64, 45.0};
  const ViewImage head_on = render_shaded(quad, orbit_pose(0, 0, 20.0), rs);
  CHECK(head_on.at(32, 32) == 255);
  const Mesh tilted = rotate_about_axis(quad, Axis::Y, 60.0);
  const ViewImage oblique = render_shaded(tilted, orbit_pose(0, 0, 1000.0), {1024, 0.2});
  CHECK(std::abs(int(oblique.at(512, 512)) - 228) <= 1);
}

TEST_CASE("rotating the mesh about the vertical axis permutes equator views") {
  const Mesh m = normalize_to_box(make_creature(17, 2));
  const Mesh rotated = rotate_about_axis(m, Axis::Y, 30.0);
  const Eigen::Matrix3d rot = rotation_matrix(Axis::Y, 30.0);
  const auto poses = ring_camera_poses(7, 12, 3.0);
  const RasterSettings rs{128, 45.0};
  for (int j = 0; j < 12; ++j) {
    const CameraPose& pose = poses[36 + j];
    // Rendering R m from c equals rendering m from R^T c.
    const Vec3 source = rot.transpose() * pose.position;
    int match = -1;
    for (int k = 0; k < 12; ++k) {
      if ((poses[36 + k].position - source).norm() < 1e-6) match = k;
    }
    REQUIRE(match >= 0);
    const ViewImage a = render_silhouette(rotated, pose, rs);
    const ViewImage b = render_silhouette(m, poses[36 + match], rs);
    std::size_t agree = 0;
    for (std::size_t i = 0; i < a.size(); ++i) agree += a.pixels[i] == b.pixels[i];
    CHECK(static_cast<double>(agree) / a.size() >= 0.99);
  }
}

TEST_CASE("degenerate cameras are rejected") {
  const Mesh cube = unit_cube();
  CameraPose bad;
  bad.position = Vec3::Zero();
  CHECK_THROWS(render_shaded(cube, bad));
  CameraPose parallel;
  parallel.position = Vec3(0, 3, 0);
  parallel.up = Vec3::UnitY();
  CHECK_THROWS(render_shaded(cube, parallel));
  CHECK_THROWS(orbit_pose(91, 0, 3));
  CHECK_NOTHROW(render_shaded(cube, orbit_pose(90, 0, 3), {32, 45.0}));
}
