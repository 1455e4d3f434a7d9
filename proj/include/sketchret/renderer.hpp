#pragma once

#include "sketchret/image.hpp"
#include "sketchret/mesh.hpp"

#include <map>
#include <string>
#include <vector>

namespace sketchret {

/// Camera orbiting the origin. For ring layouts `ring_index` is the ring (0 = bottom pole);
/// for the four-setup projection layout it is the setup index.
struct CameraPose {
  Vec3 position;
  Vec3 look_at = Vec3::Zero();
  Vec3 up = Vec3::UnitY();
  int ring_index = 0;
  int azimuth_index = 0;
  double elevation_deg = 0.0;
  double azimuth_deg = 0.0;
};

/// Camera on the sphere of radius `distance` looking at the origin with +Y up (+X at the
/// poles). Ring and azimuth indices are left at 0.
CameraPose orbit_pose(double elevation_deg, double azimuth_deg, double distance);

/// The world vertical axis for ring layouts is +Y (Wavefront convention).
/// Ring k of `ring_count` sits at elevation -90 + 180 k / (ring_count - 1) degrees; azimuth
/// step is 360 / views_per_ring starting at 0, so ring 3 of 7, view 0 is at (d, 0, 0).
std::vector<CameraPose> ring_camera_poses(int ring_count = 7, int views_per_ring = 12,
                                          double distance = 3.0);

/// 4 setups x 12 views with the object standing along +Z: (0) orbit in the Oxy plane,
/// (1) raised 30 degrees above Oxy, (2) orbit in the Oyz plane, (3) setup 2 raised 30 degrees
/// towards +X. `ring_index` holds the setup.
std::vector<CameraPose> thp_camera_poses(double distance = 3.0);

struct RasterSettings {
  int resolution = 224;
  double vertical_fov_deg = 45.0;
};

inline constexpr std::uint8_t kShadedBackground = 128;

/// Flat two-sided Lambert shading with the light at the camera: a triangle whose normal makes
/// angle t with the view ray gets round(200 + 55 |cos t|) on a grey background.
ViewImage render_shaded(const Mesh& mesh, const CameraPose& pose, const RasterSettings& rs = {});
ViewImage render_silhouette(const Mesh& mesh, const CameraPose& pose, const RasterSettings& rs = {});

enum class RingLayout { Rings, Thp, Dh };

struct RenderConfig {
  RingLayout layout = RingLayout::Rings;
  std::vector<int> rings{2, 3, 4};  // subset of the 7-ring layout; ignored for Thp
  int views_per_ring = 12;
  double distance = 3.0;
  RasterSettings raster;
  ImageKind style = ImageKind::Shaded;  // Shaded or Silhouette

  /// Three rings of seven azimuths: 21 perspectives.
  static RenderConfig dh();
  static RenderConfig thp();
};

struct RingView {
  CameraPose pose;
  ViewImage image;
};

struct RingSet {
  std::string object_id;
  std::map<int, std::vector<RingView>> rings;

  std::size_t view_count() const;
};

/// Camera poses selected by a render config, in ring-then-azimuth order.
std::vector<CameraPose> config_poses(const RenderConfig& config);

RingSet render_rings(const Mesh& mesh, const RenderConfig& config);

}  // namespace sketchret
