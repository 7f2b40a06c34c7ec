// Procedural scene construction: value-noise terrain with a flat central
// disc, primitive-composite human targets, and the sun table.
#pragma once

#include "orbitbench/core.hpp"
#include "orbitbench/geometry.hpp"

#include <nlohmann/json_fwd.hpp>

#include <array>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace orbitbench::scene {

enum class Pose { Standing, Squatting, Prone };

std::string_view to_string(Pose pose);
Pose pose_from_string(std::string_view name);

struct Aabb {
  Vec3 min = Vec3::Constant(std::numeric_limits<double>::infinity());
  Vec3 max = Vec3::Constant(-std::numeric_limits<double>::infinity());

  void extend(const Vec3& p) {
    min = min.cwiseMin(p);
    max = max.cwiseMax(p);
  }
  Vec3 extents() const { return max - min; }
  Vec3 center() const { return 0.5 * (min + max); }
};

// Closed triangle mesh of one primitive; faces wind counterclockwise when
// seen from outside.
struct MeshPart {
  std::string name;
  Rgb color;
  std::vector<Vec3> vertices;
  std::vector<std::array<int, 3>> faces;
};

using Mesh = std::vector<MeshPart>;

Aabb bounds(const Mesh& mesh);

struct TargetInstance {
  int object_id = 0;
  std::string label = "person";
  std::string category = "human";
  int variant = 0;
  Pose pose = Pose::Standing;
  bool chest_marker = true;
  Vec3 position = Vec3::Zero();
  double yaw_deg = 0.0;
  Mesh mesh;  // local frame, min z = 0

  // Mesh rotated by yaw about local z and translated to position.
  Mesh world_mesh() const;
  Aabb world_bounds() const;
};

struct IlluminationCondition {
  SunCondition name = SunCondition::Noon;
  double sun_elevation_deg = 60.0;
  double sun_azimuth_deg = 180.0;
  double ambient_fraction = 0.4;

  void validate() const;
};

// Default table; early morning and late afternoon carry the lowest sun.
IlluminationCondition default_illumination(SunCondition name);

// Unit vector pointing from the sun toward the scene.
Vec3 sun_direction(const IlluminationCondition& condition);

struct TerrainParams {
  std::uint64_t seed = 1;
  double extent_m = 400.0;
  double cell_m = 4.0;
  double flat_radius_m = 60.0;
  double max_amplitude_m = 8.0;
};

class Terrain {
 public:
  static constexpr Rgb kSand{194, 170, 120};

  explicit Terrain(const TerrainParams& params);

  const TerrainParams& params() const { return params_; }
  int vertices_per_side() const { return n_; }
  // World coordinate of grid vertex 0 along x and y; the grid is centered.
  double origin() const { return origin_; }

  // Grid vertex elevation, i and j along x and y.
  double vertex_elevation(int i, int j) const { return heights_[index(i, j)]; }
  Vec3 vertex_position(int i, int j) const;
  // Bilinear interpolation of the grid; exactly 0 inside the flat disc.
  double elevation_at(double x, double y) const;
  Rgb color_at(double x, double y) const;

  const std::vector<double>& heights() const { return heights_; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(j) * static_cast<std::size_t>(n_) +
           static_cast<std::size_t>(i);
  }

  TerrainParams params_;
  int n_ = 0;
  double origin_ = 0.0;
  std::vector<double> heights_;
};

// Throws ConfigError on non-positive dimensions.
std::shared_ptr<const Terrain> build_terrain(std::uint64_t seed, double extent_m, double cell_m);
std::shared_ptr<const Terrain> build_terrain(const TerrainParams& params);

// Uniform size factor for a variant; variant 0 keeps the base dimensions.
double variant_scale(int variant);
Rgb variant_body_color(int variant);

// Local-frame target mesh. Target faces +x at yaw 0. Throws ConfigError for
// a variant outside [0, 8).
TargetInstance build_target(Pose pose, int variant, bool chest_marker = true);

struct SceneSpec {
  std::shared_ptr<const Terrain> terrain;
  std::vector<TargetInstance> targets;
  IlluminationCondition sun;

  int next_object_id() const;
  SceneSpec with_sun(const IlluminationCondition& condition) const;
};

// Places target on the terrain at position_xy rotated by yaw_deg and assigns
// the next free object id. Throws GeometryError outside the flat disc.
SceneSpec place_target(SceneSpec scene, TargetInstance target, const Eigen::Vector2d& position_xy,
                       double yaw_deg);

// Look-at height for a placed target: the z center of its world bounding box.
double look_at_height(const TargetInstance& target);

nlohmann::json to_json(const SceneSpec& scene);

}  // namespace orbitbench::scene
