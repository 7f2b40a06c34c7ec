#include "orbitbench/raster.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace orbitbench::raster {

void CameraIntrinsics::validate() const {
  if (width_px < 1) throw ConfigError("width_px", "must be >= 1");
  if (height_px < 1) throw ConfigError("height_px", "must be >= 1");
  if (width_px > 16384 || height_px > 16384) throw ConfigError("width_px", "must be <= 16384");
  if (!(vertical_fov_deg > 0.0 && vertical_fov_deg < 180.0))
    throw ConfigError("vertical_fov_deg", "must lie in (0, 180)");
  if (!(near_m > 0.0)) throw ConfigError("near_m", "must be > 0");
  if (!(far_m > near_m) || !std::isfinite(far_m)) throw ConfigError("far_m", "must exceed near_m");
}

double CameraIntrinsics::focal_px() const {
  return 0.5 * height_px / std::tan(deg2rad(0.5 * vertical_fov_deg));
}

FrameBuffers::FrameBuffers(int w, int h, Rgb clear, float far)
    : width(w),
      height(h),
      rgb(static_cast<std::size_t>(w) * static_cast<std::size_t>(h) * 3),
      id(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), 0),
      depth(static_cast<std::size_t>(w) * static_cast<std::size_t>(h), far) {
  for (std::size_t i = 0; i < id.size(); ++i) {
    rgb[3 * i] = clear.r;
    rgb[3 * i + 1] = clear.g;
    rgb[3 * i + 2] = clear.b;
  }
}

namespace {

Vec3 to_camera(const geometry::CameraPose& camera, const Vec3& world) {
  return camera.rotation.transpose() * (world - camera.position);
}

}  // namespace

std::optional<Projection> project_point(const geometry::CameraPose& camera,
                                        const CameraIntrinsics& intrinsics,
                                        const Vec3& world_point) {
  const Vec3 c = to_camera(camera, world_point);
  const double depth = -c.z();
  if (!(depth > intrinsics.near_m)) return std::nullopt;
  const double f = intrinsics.focal_px();
  return Projection{intrinsics.cx() + f * c.x() / depth, intrinsics.cy() - f * c.y() / depth,
                    depth};
}

// ---------------------------------------------------------------------------

namespace {

Rgb shade(Rgb base, const Vec3& normal, const Vec3& sun_dir, double ambient) {
  const double lambert = std::max(0.0, normal.dot(-sun_dir));
  const double k = ambient + (1.0 - ambient) * lambert;
  const auto apply = [k](std::uint8_t c) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(c * k), 0L, 255L));
  };
  return {apply(base.r), apply(base.g), apply(base.b)};
}

void push_triangle(PreparedScene& out, const Vec3& a, const Vec3& b, const Vec3& c, Rgb color,
                   std::uint32_t object_id) {
  const Vec3 n = (b - a).cross(c - a);
  const double len = n.norm();
  if (!(len > 0.0)) return;
  WorldTriangle t;
  t.v = {a, b, c};
  t.normal = n / len;
  t.color = shade(color, t.normal, out.sun_direction, out.ambient_fraction);
  t.object_id = object_id;
  out.triangles.push_back(t);
}

}  // namespace

PreparedScene prepare(const scene::SceneSpec& scene) {
  scene.sun.validate();
  PreparedScene out;
  out.sun_direction = scene::sun_direction(scene.sun);
  out.ambient_fraction = scene.sun.ambient_fraction;

  if (scene.terrain) {
    const auto& terrain = *scene.terrain;
    const int n = terrain.vertices_per_side();
    out.triangles.reserve(static_cast<std::size_t>(n) * static_cast<std::size_t>(n) * 2);
    for (int j = 0; j + 1 < n; ++j) {
      for (int i = 0; i + 1 < n; ++i) {
        const Vec3 p00 = terrain.vertex_position(i, j);
        const Vec3 p10 = terrain.vertex_position(i + 1, j);
        const Vec3 p11 = terrain.vertex_position(i + 1, j + 1);
        const Vec3 p01 = terrain.vertex_position(i, j + 1);
        const Vec3 c0 = (p00 + p10 + p11) / 3.0;
        const Vec3 c1 = (p00 + p11 + p01) / 3.0;
        push_triangle(out, p00, p10, p11, terrain.color_at(c0.x(), c0.y()), 0);
        push_triangle(out, p00, p11, p01, terrain.color_at(c1.x(), c1.y()), 0);
      }
    }
  }

  for (const auto& target : scene.targets) {
    if (target.object_id < 1) throw GeometryError("prepare: target has no object id");
    for (const auto& part : target.world_mesh()) {
      for (const auto& face : part.faces) {
        push_triangle(out, part.vertices[static_cast<std::size_t>(face[0])],
                      part.vertices[static_cast<std::size_t>(face[1])],
                      part.vertices[static_cast<std::size_t>(face[2])], part.color,
                      static_cast<std::uint32_t>(target.object_id));
      }
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

namespace {

constexpr int kSubpixelBits = 8;
constexpr std::int64_t kSubpixel = std::int64_t{1} << kSubpixelBits;
// Triangles are clipped to a frustum this many half-widths wide so snapped
// coordinates stay small enough for exact 64-bit edge functions.
constexpr double kGuardBand = 4.0;

// Keeps the part of the convex polygon where plane(p) >= 0.
template <typename Plane>
void clip_polygon(std::vector<Vec3>& poly, std::vector<Vec3>& scratch, Plane plane) {
  scratch.clear();
  const std::size_t n = poly.size();
  for (std::size_t i = 0; i < n; ++i) {
    const Vec3& a = poly[i];
    const Vec3& b = poly[(i + 1) % n];
    const double da = plane(a);
    const double db = plane(b);
    if (da >= 0.0) scratch.push_back(a);
    if ((da >= 0.0) != (db >= 0.0)) {
      const double t = da / (da - db);
      scratch.push_back(a + t * (b - a));
    }
  }
  poly.swap(scratch);
}

struct ScreenVertex {
  std::int64_t x;
  std::int64_t y;
  double inv_depth;
};

// Edges that own their boundary pixels: the top-left rule for a
// consistently oriented edge direction. Exactly one of (a, b) and (b, a)
// qualifies, so shared edges are never drawn twice nor skipped.
bool owns_edge(const ScreenVertex& a, const ScreenVertex& b) {
  const std::int64_t dy = b.y - a.y;
  const std::int64_t dx = b.x - a.x;
  return dy < 0 || (dy == 0 && dx > 0);
}

std::int64_t edge(const ScreenVertex& a, const ScreenVertex& b, std::int64_t px, std::int64_t py) {
  return (b.x - a.x) * (py - a.y) - (b.y - a.y) * (px - a.x);
}

class Rasterizer {
 public:
  Rasterizer(FrameBuffers& fb, std::vector<double>& zbuf, double far)
      : fb_(fb), zbuf_(zbuf), far_(far) {}

  void draw(ScreenVertex v0, ScreenVertex v1, ScreenVertex v2, Rgb color,
            std::uint32_t object_id) {
    std::int64_t area = edge(v0, v1, v2.x, v2.y);
    if (area == 0) return;
    if (area < 0) {
      std::swap(v1, v2);
      area = -area;
    }

    const std::int64_t min_x = std::min({v0.x, v1.x, v2.x});
    const std::int64_t max_x = std::max({v0.x, v1.x, v2.x});
    const std::int64_t min_y = std::min({v0.y, v1.y, v2.y});
    const std::int64_t max_y = std::max({v0.y, v1.y, v2.y});
    // Pixel i has its center at i + 0.5, i.e. i * kSubpixel + kSubpixel / 2.
    const auto first_pixel = [](std::int64_t lo) {
      return static_cast<int>(
          std::ceil(static_cast<double>(lo - kSubpixel / 2) / static_cast<double>(kSubpixel)));
    };
    const auto last_pixel = [](std::int64_t hi) {
      return static_cast<int>(
          std::floor(static_cast<double>(hi - kSubpixel / 2) / static_cast<double>(kSubpixel)));
    };
    const int x0 = std::max(0, first_pixel(min_x));
    const int x1 = std::min(fb_.width - 1, last_pixel(max_x));
    const int y0 = std::max(0, first_pixel(min_y));
    const int y1 = std::min(fb_.height - 1, last_pixel(max_y));
    if (x0 > x1 || y0 > y1) return;

    const std::int64_t bias0 = owns_edge(v1, v2) ? 0 : -1;
    const std::int64_t bias1 = owns_edge(v2, v0) ? 0 : -1;
    const std::int64_t bias2 = owns_edge(v0, v1) ? 0 : -1;
    const double inv_area = 1.0 / static_cast<double>(area);

    for (int y = y0; y <= y1; ++y) {
      const std::int64_t py = y * kSubpixel + kSubpixel / 2;
      for (int x = x0; x <= x1; ++x) {
        const std::int64_t px = x * kSubpixel + kSubpixel / 2;
        const std::int64_t w0 = edge(v1, v2, px, py);
        const std::int64_t w1 = edge(v2, v0, px, py);
        const std::int64_t w2 = edge(v0, v1, px, py);
        if (w0 + bias0 < 0 || w1 + bias1 < 0 || w2 + bias2 < 0) continue;
        const double inv_depth =
            (static_cast<double>(w0) * v0.inv_depth + static_cast<double>(w1) * v1.inv_depth +
             static_cast<double>(w2) * v2.inv_depth) *
            inv_area;
        if (!(inv_depth > 0.0)) continue;
        const double depth = 1.0 / inv_depth;
        if (!(depth < far_)) continue;
        const std::size_t idx = fb_.index(x, y);
        const double current = zbuf_[idx];
        if (depth < current || (depth == current && object_id < fb_.id[idx])) {
          zbuf_[idx] = depth;
          fb_.id[idx] = object_id;
          fb_.depth[idx] = static_cast<float>(depth);
          fb_.rgb[3 * idx] = color.r;
          fb_.rgb[3 * idx + 1] = color.g;
          fb_.rgb[3 * idx + 2] = color.b;
        }
      }
    }
  }

 private:
  FrameBuffers& fb_;
  std::vector<double>& zbuf_;
  double far_;
};

}  // namespace

FrameBuffers render(const PreparedScene& prepared, const geometry::CameraPose& camera,
                    const CameraIntrinsics& intrinsics) {
  intrinsics.validate();
  FrameBuffers fb(intrinsics.width_px, intrinsics.height_px, kSkyColor,
                  static_cast<float>(intrinsics.far_m));
  std::vector<double> zbuf(fb.id.size(), std::numeric_limits<double>::infinity());
  Rasterizer rasterizer(fb, zbuf, intrinsics.far_m);

  const double f = intrinsics.focal_px();
  const double cx = intrinsics.cx();
  const double cy = intrinsics.cy();
  const double near = intrinsics.near_m;
  const double kx = kGuardBand * cx / f;
  const double ky = kGuardBand * cy / f;
  const Mat3 world_to_camera = camera.rotation.transpose();

  std::vector<Vec3> poly;
  std::vector<Vec3> scratch;
  std::vector<ScreenVertex> screen;
  poly.reserve(10);
  scratch.reserve(10);
  screen.reserve(10);

  for (const auto& tri : prepared.triangles) {
    poly.clear();
    bool all_inside = true;
    for (const auto& v : tri.v) {
      const Vec3 c = world_to_camera * (v - camera.position);
      poly.push_back(c);
      const double d = -c.z();
      if (!(d > near && std::fabs(c.x()) <= kx * d && std::fabs(c.y()) <= ky * d))
        all_inside = false;
    }
    if (!all_inside) {
      // Cheap reject when every vertex is behind the near plane.
      if (-poly[0].z() <= near && -poly[1].z() <= near && -poly[2].z() <= near) continue;
      clip_polygon(poly, scratch, [near](const Vec3& p) { return -p.z() - near; });
      clip_polygon(poly, scratch, [kx](const Vec3& p) { return kx * -p.z() + p.x(); });
      clip_polygon(poly, scratch, [kx](const Vec3& p) { return kx * -p.z() - p.x(); });
      clip_polygon(poly, scratch, [ky](const Vec3& p) { return ky * -p.z() + p.y(); });
      clip_polygon(poly, scratch, [ky](const Vec3& p) { return ky * -p.z() - p.y(); });
      if (poly.size() < 3) continue;
    }

    screen.clear();
    for (const auto& c : poly) {
      const double d = -c.z();
      const double u = cx + f * c.x() / d;
      const double v = cy - f * c.y() / d;
      screen.push_back({std::llround(u * kSubpixel), std::llround(v * kSubpixel), 1.0 / d});
    }
    for (std::size_t k = 1; k + 1 < screen.size(); ++k) {
      rasterizer.draw(screen[0], screen[k], screen[k + 1], tri.color, tri.object_id);
    }
  }
  return fb;
}

FrameBuffers render(const scene::SceneSpec& scene, const geometry::CameraPose& camera,
                    const CameraIntrinsics& intrinsics) {
  return render(prepare(scene), camera, intrinsics);
}

std::size_t count_pixels(const FrameBuffers& buffers, std::uint32_t object_id) {
  return static_cast<std::size_t>(std::count(buffers.id.begin(), buffers.id.end(), object_id));
}

}  // namespace orbitbench::raster
