// Deterministic software rasterizer: perspective projection, near-plane
// clipping, top-left fill rule and a z-buffer writing RGB, object ids and
// camera-space depth.
#pragma once

#include "orbitbench/core.hpp"
#include "orbitbench/geometry.hpp"
#include "orbitbench/scene.hpp"

#include <cstdint>
#include <optional>
#include <vector>

namespace orbitbench::raster {

struct CameraIntrinsics {
  int width_px = 512;
  int height_px = 512;
  double vertical_fov_deg = 60.0;
  double near_m = 0.1;
  double far_m = 2000.0;

  void validate() const;
  double focal_px() const;
  double cx() const { return 0.5 * width_px; }
  double cy() const { return 0.5 * height_px; }
};

struct FrameBuffers {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgb;    // row-major, 3 bytes per pixel
  std::vector<std::uint32_t> id;    // 0 = background and terrain
  std::vector<float> depth;         // camera-space meters, far plane where empty

  FrameBuffers() = default;
  FrameBuffers(int w, int h, Rgb clear, float far);

  std::size_t index(int x, int y) const {
    return static_cast<std::size_t>(y) * static_cast<std::size_t>(width) +
           static_cast<std::size_t>(x);
  }
  std::uint32_t id_at(int x, int y) const { return id[index(x, y)]; }
};

struct Projection {
  double u_px = 0.0;
  double v_px = 0.0;
  double depth_m = 0.0;
};

// Pixel coordinates have the origin at the top-left image corner, x right,
// y down; pixel (i, j) covers [i, i+1) x [j, j+1). Returns nullopt for points
// at or behind the near plane.
std::optional<Projection> project_point(const geometry::CameraPose& camera,
                                        const CameraIntrinsics& intrinsics, const Vec3& world_point);

struct WorldTriangle {
  std::array<Vec3, 3> v;
  Vec3 normal;  // outward unit normal
  Rgb color;
  std::uint32_t object_id = 0;
};

// Flattened, shaded-ready triangle list for one scene. Build once and reuse
// across every frame of a sweep that shares the scene.
struct PreparedScene {
  std::vector<WorldTriangle> triangles;
  Vec3 sun_direction = -Vec3::UnitZ();
  double ambient_fraction = 0.4;
};

PreparedScene prepare(const scene::SceneSpec& scene);

inline constexpr Rgb kSkyColor{172, 198, 226};

FrameBuffers render(const PreparedScene& prepared, const geometry::CameraPose& camera,
                    const CameraIntrinsics& intrinsics);
FrameBuffers render(const scene::SceneSpec& scene, const geometry::CameraPose& camera,
                    const CameraIntrinsics& intrinsics);

// Number of pixels carrying the given object id.
std::size_t count_pixels(const FrameBuffers& buffers, std::uint32_t object_id);

}  // namespace orbitbench::raster
