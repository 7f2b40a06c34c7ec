#include "orbitbench/scene.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>

namespace orbitbench::scene {

std::string_view to_string(Pose pose) {
  switch (pose) {
    case Pose::Standing:
      return "Standing";
    case Pose::Squatting:
      return "Squatting";
    case Pose::Prone:
      return "Prone";
  }
  return "Unknown";
}

Pose pose_from_string(std::string_view name) {
  for (Pose p : {Pose::Standing, Pose::Squatting, Pose::Prone}) {
    if (to_string(p) == name) return p;
  }
  throw ConfigError("pose", "unknown pose '" + std::string(name) + "'");
}

Aabb bounds(const Mesh& mesh) {
  Aabb box;
  for (const auto& part : mesh) {
    for (const auto& v : part.vertices) box.extend(v);
  }
  return box;
}

// ---------------------------------------------------------------------------
// Illumination

void IlluminationCondition::validate() const {
  if (!(sun_elevation_deg > 0.0 && sun_elevation_deg <= 90.0))
    throw ConfigError("sun_elevation_deg", "must lie in (0, 90]");
  if (!std::isfinite(sun_azimuth_deg)) throw ConfigError("sun_azimuth_deg", "must be finite");
  if (!(ambient_fraction >= 0.0 && ambient_fraction <= 1.0))
    throw ConfigError("ambient_fraction", "must lie in [0, 1]");
}

IlluminationCondition default_illumination(SunCondition name) {
  switch (name) {
    case SunCondition::EarlyMorning:
      return {name, 15.0, 90.0, 0.25};
    case SunCondition::Noon:
      return {name, 60.0, 180.0, 0.40};
    case SunCondition::MidAfternoon:
      return {name, 35.0, 225.0, 0.30};
    case SunCondition::LateAfternoon:
      return {name, 10.0, 270.0, 0.20};
  }
  return {};
}

Vec3 sun_direction(const IlluminationCondition& condition) {
  const double e = deg2rad(condition.sun_elevation_deg);
  const double a = deg2rad(condition.sun_azimuth_deg);
  return -Vec3(std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e));
}

// ---------------------------------------------------------------------------
// Terrain

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

double lattice_value(std::uint64_t seed, std::int64_t ix, std::int64_t iy) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ static_cast<std::uint64_t>(ix));
  h = splitmix64(h ^ static_cast<std::uint64_t>(iy));
  return static_cast<double>(h >> 11) * 0x1.0p-53;
}

double smootherstep(double t) { return t * t * t * (t * (t * 6.0 - 15.0) + 10.0); }

// Value noise in [0, 1): hashed lattice values blended with a quintic fade.
double value_noise(std::uint64_t seed, double x, double y) {
  const double fx = std::floor(x);
  const double fy = std::floor(y);
  const auto ix = static_cast<std::int64_t>(fx);
  const auto iy = static_cast<std::int64_t>(fy);
  const double tx = smootherstep(x - fx);
  const double ty = smootherstep(y - fy);
  const double v00 = lattice_value(seed, ix, iy);
  const double v10 = lattice_value(seed, ix + 1, iy);
  const double v01 = lattice_value(seed, ix, iy + 1);
  const double v11 = lattice_value(seed, ix + 1, iy + 1);
  const double a = v00 + (v10 - v00) * tx;
  const double b = v01 + (v11 - v01) * tx;
  return a + (b - a) * ty;
}

// Fractal sum normalized back into [0, 1).
double fbm(std::uint64_t seed, double x, double y, int octaves) {
  double sum = 0.0;
  double norm = 0.0;
  double amplitude = 1.0;
  double frequency = 1.0;
  for (int o = 0; o < octaves; ++o) {
    sum += amplitude * value_noise(seed + static_cast<std::uint64_t>(o) * 7919ULL, x * frequency,
                                   y * frequency);
    norm += amplitude;
    amplitude *= 0.5;
    frequency *= 2.0;
  }
  return sum / norm;
}

double smoothstep(double edge0, double edge1, double x) {
  const double t = std::clamp((x - edge0) / (edge1 - edge0), 0.0, 1.0);
  return t * t * (3.0 - 2.0 * t);
}

constexpr double kTerrainWavelength = 64.0;
constexpr double kRampWidth = 30.0;

}  // namespace

Terrain::Terrain(const TerrainParams& params) : params_(params) {
  if (!(params.extent_m > 0.0) || !std::isfinite(params.extent_m))
    throw ConfigError("terrain_extent_m", "must be > 0");
  if (!(params.cell_m > 0.0) || !std::isfinite(params.cell_m))
    throw ConfigError("terrain_cell_m", "must be > 0");
  if (params.extent_m / params.cell_m > 8192.0)
    throw ConfigError("terrain_cell_m", "grid would exceed 8192 cells per side");
  if (!(params.flat_radius_m >= 0.0)) throw ConfigError("flat_radius_m", "must be >= 0");
  if (!(params.max_amplitude_m >= 0.0)) throw ConfigError("max_amplitude_m", "must be >= 0");

  const int cells = static_cast<int>(std::ceil(params.extent_m / params.cell_m - 1e-9));
  n_ = cells + 1;
  origin_ = -0.5 * cells * params.cell_m;
  heights_.assign(static_cast<std::size_t>(n_) * static_cast<std::size_t>(n_), 0.0);

  // The ramp starts two cells outside the disc so bilinear queries inside the
  // disc only ever touch zero-height vertices.
  const double ramp_start = params.flat_radius_m + 2.0 * params.cell_m;
  for (int j = 0; j < n_; ++j) {
    for (int i = 0; i < n_; ++i) {
      const Vec3 p = vertex_position(i, j);
      const double ramp = smoothstep(ramp_start, ramp_start + kRampWidth, std::hypot(p.x(), p.y()));
      if (ramp <= 0.0) continue;
      const double n =
          fbm(params.seed, p.x() / kTerrainWavelength, p.y() / kTerrainWavelength, 4);
      heights_[index(i, j)] = params.max_amplitude_m * ramp * n;
    }
  }
}

Vec3 Terrain::vertex_position(int i, int j) const {
  const double x = origin_ + i * params_.cell_m;
  const double y = origin_ + j * params_.cell_m;
  return {x, y, heights_.empty() ? 0.0 : heights_[index(i, j)]};
}

double Terrain::elevation_at(double x, double y) const {
  if (std::hypot(x, y) <= params_.flat_radius_m) return 0.0;
  const double gx = std::clamp((x - origin_) / params_.cell_m, 0.0, n_ - 1.0);
  const double gy = std::clamp((y - origin_) / params_.cell_m, 0.0, n_ - 1.0);
  const int i = std::min(static_cast<int>(gx), n_ - 2);
  const int j = std::min(static_cast<int>(gy), n_ - 2);
  if (n_ < 2) return heights_.front();
  const double tx = gx - i;
  const double ty = gy - j;
  const double a = vertex_elevation(i, j) + (vertex_elevation(i + 1, j) - vertex_elevation(i, j)) * tx;
  const double b =
      vertex_elevation(i, j + 1) + (vertex_elevation(i + 1, j + 1) - vertex_elevation(i, j + 1)) * tx;
  return a + (b - a) * ty;
}

Rgb Terrain::color_at(double x, double y) const {
  const double mottle = fbm(params_.seed ^ 0xA5A5A5A5ULL, x / 7.3, y / 7.3, 3);
  const double k = 0.86 + 0.26 * mottle;
  const auto scale = [k](std::uint8_t c) {
    return static_cast<std::uint8_t>(std::clamp(std::lround(c * k), 0L, 255L));
  };
  return {scale(kSand.r), scale(kSand.g), scale(kSand.b)};
}

std::shared_ptr<const Terrain> build_terrain(std::uint64_t seed, double extent_m, double cell_m) {
  TerrainParams params;
  params.seed = seed;
  params.extent_m = extent_m;
  params.cell_m = cell_m;
  return build_terrain(params);
}

std::shared_ptr<const Terrain> build_terrain(const TerrainParams& params) {
  return std::make_shared<const Terrain>(params);
}

// ---------------------------------------------------------------------------
// Targets

namespace {

constexpr int kSegments = 24;
constexpr int kHemisphereRings = 6;

constexpr Rgb kBodyBase{70, 95, 150};
constexpr Rgb kSkin{205, 165, 135};
constexpr Rgb kChestMarker{165, 45, 40};

struct ProfilePoint {
  double radius;
  double z;
};

// Surface of revolution about +z from a profile running bottom pole to top
// pole. Interior profile points become rings of kSegments vertices.
MeshPart lathe(std::string name, Rgb color, const std::vector<ProfilePoint>& profile) {
  MeshPart part;
  part.name = std::move(name);
  part.color = color;
  const int rings = static_cast<int>(profile.size()) - 2;
  part.vertices.emplace_back(0.0, 0.0, profile.front().z);
  for (int k = 1; k <= rings; ++k) {
    for (int s = 0; s < kSegments; ++s) {
      const double angle = 2.0 * kPi * s / kSegments;
      part.vertices.emplace_back(profile[k].radius * std::cos(angle),
                                 profile[k].radius * std::sin(angle), profile[k].z);
    }
  }
  part.vertices.emplace_back(0.0, 0.0, profile.back().z);

  const int bottom = 0;
  const int top = static_cast<int>(part.vertices.size()) - 1;
  const auto ring_vertex = [](int ring, int s) { return 1 + ring * kSegments + s % kSegments; };
  for (int s = 0; s < kSegments; ++s) {
    part.faces.push_back({bottom, ring_vertex(0, s + 1), ring_vertex(0, s)});
  }
  for (int k = 0; k + 1 < rings; ++k) {
    for (int s = 0; s < kSegments; ++s) {
      const int a = ring_vertex(k, s);
      const int b = ring_vertex(k, s + 1);
      const int c = ring_vertex(k + 1, s + 1);
      const int d = ring_vertex(k + 1, s);
      part.faces.push_back({a, b, c});
      part.faces.push_back({a, c, d});
    }
  }
  for (int s = 0; s < kSegments; ++s) {
    part.faces.push_back({top, ring_vertex(rings - 1, s), ring_vertex(rings - 1, s + 1)});
  }
  return part;
}

// Capsule along +z occupying z in [0, length].
MeshPart capsule(std::string name, Rgb color, double length, double radius) {
  std::vector<ProfilePoint> profile;
  for (int k = 0; k <= kHemisphereRings; ++k) {
    const double polar = 0.5 * kPi * k / kHemisphereRings;
    profile.push_back({radius * std::sin(polar), radius - radius * std::cos(polar)});
  }
  for (int k = kHemisphereRings; k >= 0; --k) {
    const double polar = 0.5 * kPi * k / kHemisphereRings;
    profile.push_back({radius * std::sin(polar), length - radius + radius * std::cos(polar)});
  }
  profile.front().radius = 0.0;
  profile.back().radius = 0.0;
  return lathe(std::move(name), color, profile);
}

MeshPart sphere(std::string name, Rgb color, const Vec3& center, double radius) {
  std::vector<ProfilePoint> profile;
  for (int k = 0; k <= 2 * kHemisphereRings; ++k) {
    const double polar = kPi * k / (2 * kHemisphereRings);
    profile.push_back({radius * std::sin(polar), -radius * std::cos(polar)});
  }
  profile.front().radius = 0.0;
  profile.back().radius = 0.0;
  MeshPart part = lathe(std::move(name), color, profile);
  for (auto& v : part.vertices) v += center;
  return part;
}

MeshPart box(std::string name, Rgb color, const Vec3& lo, const Vec3& hi) {
  MeshPart part;
  part.name = std::move(name);
  part.color = color;
  for (int k = 0; k < 8; ++k) {
    part.vertices.emplace_back((k & 1) ? hi.x() : lo.x(), (k & 2) ? hi.y() : lo.y(),
                               (k & 4) ? hi.z() : lo.z());
  }
  part.faces = {{0, 2, 3}, {0, 3, 1},   // -z
                {4, 5, 7}, {4, 7, 6},   // +z
                {0, 1, 5}, {0, 5, 4},   // -y
                {2, 6, 7}, {2, 7, 3},   // +y
                {0, 4, 6}, {0, 6, 2},   // -x
                {1, 3, 7}, {1, 7, 5}};  // +x
  return part;
}

Rgb rotate_hue(Rgb color, double degrees) {
  const double r = color.r / 255.0;
  const double g = color.g / 255.0;
  const double b = color.b / 255.0;
  const double mx = std::max({r, g, b});
  const double mn = std::min({r, g, b});
  const double chroma = mx - mn;
  double hue = 0.0;
  if (chroma > 0.0) {
    if (mx == r) {
      hue = 60.0 * std::fmod((g - b) / chroma, 6.0);
    } else if (mx == g) {
      hue = 60.0 * ((b - r) / chroma + 2.0);
    } else {
      hue = 60.0 * ((r - g) / chroma + 4.0);
    }
  }
  hue = wrap_degrees(hue + degrees);
  const double x = chroma * (1.0 - std::fabs(std::fmod(hue / 60.0, 2.0) - 1.0));
  double rr = 0.0, gg = 0.0, bb = 0.0;
  switch (static_cast<int>(hue / 60.0)) {
    case 0: rr = chroma; gg = x; break;
    case 1: rr = x; gg = chroma; break;
    case 2: gg = chroma; bb = x; break;
    case 3: gg = x; bb = chroma; break;
    case 4: rr = x; bb = chroma; break;
    default: rr = chroma; bb = x; break;
  }
  const auto to8 = [mn](double c) {
    return static_cast<std::uint8_t>(std::clamp(std::lround((c + mn) * 255.0), 0L, 255L));
  };
  return {to8(rr), to8(gg), to8(bb)};
}

void transform(MeshPart& part, const Mat3& rotation, const Vec3& translation) {
  for (auto& v : part.vertices) v = rotation * v + translation;
}

}  // namespace

double variant_scale(int variant) {
  static constexpr std::array<double, 8> kOffsets{0.0, -1.0, 1.0, -0.5, 0.5, -0.75, 0.75, -0.25};
  if (variant < 0 || variant >= 8) throw ConfigError("variant", "must lie in [0, 8)");
  return 1.0 + 0.1 * kOffsets[static_cast<std::size_t>(variant)];
}

Rgb variant_body_color(int variant) {
  if (variant < 0 || variant >= 8) throw ConfigError("variant", "must lie in [0, 8)");
  return rotate_hue(kBodyBase, 45.0 * variant);
}

TargetInstance build_target(Pose pose, int variant, bool chest_marker) {
  const double scale = variant_scale(variant);
  const Rgb body = variant_body_color(variant);

  TargetInstance target;
  target.variant = variant;
  target.pose = pose;
  target.chest_marker = chest_marker;

  switch (pose) {
    case Pose::Standing:
      target.mesh.push_back(capsule("body", body, 1.80, 0.25));
      target.mesh.push_back(sphere("head", kSkin, {0.0, 0.0, 1.65}, 0.12));
      if (chest_marker)
        target.mesh.push_back(box("chest", kChestMarker, {0.10, -0.18, 1.05}, {0.33, 0.18, 1.45}));
      break;
    case Pose::Squatting:
      target.mesh.push_back(capsule("body", body, 1.00, 0.30));
      target.mesh.push_back(sphere("head", kSkin, {0.0, 0.0, 0.85}, 0.12));
      if (chest_marker)
        target.mesh.push_back(box("chest", kChestMarker, {0.12, -0.20, 0.45}, {0.38, 0.20, 0.75}));
      break;
    case Pose::Prone: {
      // Lying along +x with the head forward: (x, y, z) -> (z - 1.0, y, 0.25 - x).
      MeshPart body_part = capsule("body", body, 1.80, 0.25);
      Mat3 lay;
      lay << 0, 0, 1, 0, 1, 0, -1, 0, 0;
      transform(body_part, lay, {-1.0, 0.0, 0.25});
      target.mesh.push_back(std::move(body_part));
      target.mesh.push_back(sphere("head", kSkin, {0.80, 0.0, 0.25}, 0.12));
      if (chest_marker)
        target.mesh.push_back(box("chest", kChestMarker, {0.05, -0.22, 0.03}, {0.45, 0.22, 0.47}));
      break;
    }
    default:
      throw ConfigError("pose", "unknown pose");
  }

  for (auto& part : target.mesh) {
    for (auto& v : part.vertices) v *= scale;
  }
  return target;
}

namespace {
Mat3 yaw_rotation(double yaw_deg) {
  return Eigen::AngleAxisd(deg2rad(yaw_deg), Vec3::UnitZ()).toRotationMatrix();
}
}  // namespace

Mesh TargetInstance::world_mesh() const {
  Mesh out = mesh;
  const Mat3 rotation = yaw_rotation(yaw_deg);
  for (auto& part : out) transform(part, rotation, position);
  return out;
}

Aabb TargetInstance::world_bounds() const { return bounds(world_mesh()); }

int SceneSpec::next_object_id() const {
  int next = 1;
  for (const auto& t : targets) next = std::max(next, t.object_id + 1);
  return next;
}

SceneSpec SceneSpec::with_sun(const IlluminationCondition& condition) const {
  SceneSpec copy = *this;
  copy.sun = condition;
  return copy;
}

SceneSpec place_target(SceneSpec scene, TargetInstance target, const Eigen::Vector2d& position_xy,
                       double yaw_deg) {
  if (!scene.terrain) throw GeometryError("place_target: scene has no terrain");
  const double flat = scene.terrain->params().flat_radius_m;
  if (!(position_xy.norm() <= flat))
    throw GeometryError("place_target: position lies outside the flat disc");
  if (!std::isfinite(yaw_deg)) throw GeometryError("place_target: yaw must be finite");
  const double ground = scene.terrain->elevation_at(position_xy.x(), position_xy.y());
  const double local_min_z = bounds(target.mesh).min.z();
  target.position = Vec3(position_xy.x(), position_xy.y(), ground - local_min_z);
  target.yaw_deg = yaw_deg;
  target.object_id = scene.next_object_id();
  if (target.object_id > 65535) throw GeometryError("place_target: object id space exhausted");
  scene.targets.push_back(std::move(target));
  return scene;
}

double look_at_height(const TargetInstance& target) { return target.world_bounds().center().z(); }

nlohmann::json to_json(const SceneSpec& scene) {
  nlohmann::json doc;
  if (scene.terrain) {
    const auto& p = scene.terrain->params();
    doc["terrain"] = {{"seed", p.seed},
                      {"extent_m", p.extent_m},
                      {"cell_m", p.cell_m},
                      {"flat_radius_m", p.flat_radius_m},
                      {"max_amplitude_m", p.max_amplitude_m}};
  }
  doc["sun"] = {{"name", std::string(to_string(scene.sun.name))},
                {"sun_elevation_deg", scene.sun.sun_elevation_deg},
                {"sun_azimuth_deg", scene.sun.sun_azimuth_deg},
                {"ambient_fraction", scene.sun.ambient_fraction}};
  auto targets = nlohmann::json::array();
  for (const auto& t : scene.targets) {
    targets.push_back({{"object_id", t.object_id},
                       {"label", t.label},
                       {"category", t.category},
                       {"variant", t.variant},
                       {"pose", std::string(to_string(t.pose))},
                       {"chest_marker", t.chest_marker},
                       {"position", {t.position.x(), t.position.y(), t.position.z()}},
                       {"yaw_deg", t.yaw_deg}});
  }
  doc["targets"] = std::move(targets);
  return doc;
}

}  // namespace orbitbench::scene
