// Camera orbit mathematics and sweep enumeration.
//
// World frame: right-handed, z-up, orbit center at the origin, ground at
// z = 0. Azimuth is measured counterclockwise from +x. Camera frame: the
// camera looks along its -z axis, +y is image up, +x is image right.
#pragma once

#include "orbitbench/core.hpp"

#include <string>
#include <string_view>
#include <vector>

namespace orbitbench {

enum class SunCondition { EarlyMorning, Noon, MidAfternoon, LateAfternoon };

std::string_view to_string(SunCondition sun);
// Throws ConfigError when the name is not one of the four conditions.
SunCondition sun_condition_from_string(std::string_view name);

namespace geometry {

struct CameraPose {
  Vec3 position = Vec3::Zero();
  // Columns are the camera x, y, z axes expressed in world coordinates.
  Mat3 rotation = Mat3::Identity();

  Vec3 optical_axis() const { return -rotation.col(2); }
  Vec3 right() const { return rotation.col(0); }
  Vec3 up() const { return rotation.col(1); }
};

struct PitchDistance {
  double pitch_deg = 0.0;
  double distance_m = 0.0;
};

struct FrameSpec {
  std::string frame_id;
  double altitude_m = 0.0;
  double radius_m = 0.0;
  double azimuth_deg = 0.0;
  SunCondition sun = SunCondition::Noon;
  int sun_index = 0;
  double look_at_height_m = 0.0;
  double pitch_deg = 0.0;
  double distance_m = 0.0;
  CameraPose camera;
};

struct SweepConfig {
  std::vector<double> altitudes_m;
  std::vector<double> radii_m;
  double azimuth_start_deg = 0.0;
  double azimuth_end_deg = 358.0;
  double azimuth_step_deg = 2.0;
  std::vector<SunCondition> sun_conditions;
  double look_at_height_m = 0.0;

  // Throws ConfigError naming the first offending field.
  void validate() const;
  // Azimuth samples start, start + step, ... up to end inclusive.
  std::vector<double> azimuths() const;
  std::size_t frame_count() const;
};

// Rotation whose -z column points from eye to target and whose +x column is
// horizontal. Throws GeometryError when eye and target coincide or the view
// direction is parallel to up_hint.
Mat3 look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint = Vec3::UnitZ());

// Camera on the circle of the given radius at the given altitude above
// center, looking at center + (0, 0, look_at_height_m).
CameraPose orbit_pose(const Vec3& center, double radius_m, double altitude_m,
                      double azimuth_deg, double look_at_height_m);

PitchDistance pitch_and_distance(double radius_m, double altitude_m,
                                 double look_at_height_m);

// "<trial>/<sun-index>/h<h>_r<r>_a<azimuth>" with zero-padded fields.
std::string make_frame_id(std::string_view trial, int sun_index, double altitude_m,
                          double radius_m, double azimuth_deg);

// Cartesian product with sun outermost, then altitude, radius, azimuth.
std::vector<FrameSpec> enumerate_sweep(const SweepConfig& config,
                                       std::string_view trial = "trial");

}  // namespace geometry
}  // namespace orbitbench
