#include "orbitbench/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <set>

namespace orbitbench {

double wrap_degrees(double deg) {
  double wrapped = std::fmod(deg, 360.0);
  if (wrapped < 0.0) wrapped += 360.0;
  if (wrapped >= 360.0) wrapped -= 360.0;
  return wrapped;
}

namespace {
constexpr std::array<std::pair<SunCondition, std::string_view>, 4> kSunNames{{
    {SunCondition::EarlyMorning, "EarlyMorning"},
    {SunCondition::Noon, "Noon"},
    {SunCondition::MidAfternoon, "MidAfternoon"},
    {SunCondition::LateAfternoon, "LateAfternoon"},
}};
}  // namespace

std::string_view to_string(SunCondition sun) {
  for (const auto& [value, name] : kSunNames) {
    if (value == sun) return name;
  }
  return "Unknown";
}

SunCondition sun_condition_from_string(std::string_view name) {
  for (const auto& [value, n] : kSunNames) {
    if (n == name) return value;
  }
  throw ConfigError("sun", "unknown sun condition '" + std::string(name) + "'");
}

namespace geometry {

void SweepConfig::validate() const {
  if (altitudes_m.empty()) throw ConfigError("altitudes_m", "must be non-empty");
  if (radii_m.empty()) throw ConfigError("radii_m", "must be non-empty");
  if (sun_conditions.empty()) throw ConfigError("sun_conditions", "must be non-empty");
  for (double h : altitudes_m) {
    if (!std::isfinite(h) || h < 0.0) throw ConfigError("altitudes_m", "values must be >= 0");
  }
  for (double r : radii_m) {
    if (!std::isfinite(r) || r <= 0.0) throw ConfigError("radii_m", "values must be > 0");
  }
  if (std::set<double>(altitudes_m.begin(), altitudes_m.end()).size() != altitudes_m.size())
    throw ConfigError("altitudes_m", "values must be unique");
  if (std::set<double>(radii_m.begin(), radii_m.end()).size() != radii_m.size())
    throw ConfigError("radii_m", "values must be unique");
  if (std::set<SunCondition>(sun_conditions.begin(), sun_conditions.end()).size() !=
      sun_conditions.size())
    throw ConfigError("sun_conditions", "values must be unique");
  if (!(azimuth_step_deg > 0.0)) throw ConfigError("azimuth_step_deg", "must be > 0");
  if (!(azimuth_start_deg >= 0.0 && azimuth_start_deg < 360.0))
    throw ConfigError("azimuth_start_deg", "must lie in [0, 360)");
  if (!(azimuth_end_deg >= azimuth_start_deg && azimuth_end_deg < 360.0))
    throw ConfigError("azimuth_end_deg", "must lie in [azimuth_start_deg, 360)");
  if (!std::isfinite(look_at_height_m)) throw ConfigError("look_at_height_m", "must be finite");
}

std::vector<double> SweepConfig::azimuths() const {
  const auto steps = static_cast<std::size_t>(
      std::floor((azimuth_end_deg - azimuth_start_deg) / azimuth_step_deg + 1e-9));
  std::vector<double> out;
  out.reserve(steps + 1);
  for (std::size_t k = 0; k <= steps; ++k) {
    out.push_back(azimuth_start_deg + static_cast<double>(k) * azimuth_step_deg);
  }
  return out;
}

std::size_t SweepConfig::frame_count() const {
  return altitudes_m.size() * radii_m.size() * azimuths().size() * sun_conditions.size();
}

Mat3 look_at(const Vec3& eye, const Vec3& target, const Vec3& up_hint) {
  const Vec3 view = target - eye;
  const double length = view.norm();
  if (!(length > 1e-9)) throw GeometryError("look_at: eye and target coincide");
  if (!(up_hint.norm() > 1e-9)) throw GeometryError("look_at: zero up hint");
  const Vec3 forward = view / length;
  const Vec3 side = forward.cross(up_hint.normalized());
  if (side.norm() < 1e-9)
    throw GeometryError("look_at: view direction is parallel to the up hint");
  const Vec3 x_axis = side.normalized();
  const Vec3 z_axis = -forward;
  const Vec3 y_axis = z_axis.cross(x_axis);
  Mat3 rotation;
  rotation.col(0) = x_axis;
  rotation.col(1) = y_axis;
  rotation.col(2) = z_axis;
  return rotation;
}

CameraPose orbit_pose(const Vec3& center, double radius_m, double altitude_m,
                      double azimuth_deg, double look_at_height_m) {
  if (!(radius_m > 0.0)) throw GeometryError("orbit_pose: radius must be > 0");
  const double phi = deg2rad(azimuth_deg);
  CameraPose pose;
  pose.position = center + Vec3(radius_m * std::cos(phi), radius_m * std::sin(phi), altitude_m);
  pose.rotation = look_at(pose.position, center + Vec3(0.0, 0.0, look_at_height_m));
  return pose;
}

PitchDistance pitch_and_distance(double radius_m, double altitude_m, double look_at_height_m) {
  if (!(radius_m > 0.0)) throw GeometryError("pitch_and_distance: radius must be > 0");
  const double rise = altitude_m - look_at_height_m;
  return {rad2deg(std::atan2(rise, radius_m)), std::hypot(radius_m, rise)};
}

std::string make_frame_id(std::string_view trial, int sun_index, double altitude_m,
                          double radius_m, double azimuth_deg) {
  char buf[96];
  std::snprintf(buf, sizeof(buf), "/%d/h%06.2f_r%06.2f_a%06.2f", sun_index, altitude_m,
                radius_m, azimuth_deg);
  return std::string(trial) + buf;
}

std::vector<FrameSpec> enumerate_sweep(const SweepConfig& config, std::string_view trial) {
  config.validate();
  if (trial.empty() || trial.find_first_of("/\\ ") != std::string_view::npos)
    throw ConfigError("trial", "must be a non-empty name without slashes or spaces");

  const std::vector<double> azimuths = config.azimuths();
  // Distinct values must stay distinct after frame-id formatting.
  const auto check_formatted = [](const std::vector<double>& values, const char* field) {
    std::set<std::string> seen;
    for (double v : values) {
      char buf[32];
      std::snprintf(buf, sizeof(buf), "%06.2f", v);
      if (!seen.insert(buf).second)
        throw ConfigError(field, std::string("values collide in frame ids at ") + buf);
    }
  };
  check_formatted(config.altitudes_m, "altitudes_m");
  check_formatted(config.radii_m, "radii_m");
  check_formatted(azimuths, "azimuth_step_deg");
  // Poses and id suffixes do not depend on the sun, so build them once.
  std::vector<FrameSpec> block;
  std::vector<std::string> suffixes;
  block.reserve(config.altitudes_m.size() * config.radii_m.size() * azimuths.size());
  suffixes.reserve(block.capacity());
  for (double h : config.altitudes_m) {
    for (double r : config.radii_m) {
      const PitchDistance pd = pitch_and_distance(r, h, config.look_at_height_m);
      for (double phi : azimuths) {
        FrameSpec f;
        f.altitude_m = h;
        f.radius_m = r;
        f.azimuth_deg = phi;
        f.look_at_height_m = config.look_at_height_m;
        f.pitch_deg = pd.pitch_deg;
        f.distance_m = pd.distance_m;
        f.camera = orbit_pose(Vec3::Zero(), r, h, phi, config.look_at_height_m);
        block.push_back(std::move(f));
        char buf[64];
        std::snprintf(buf, sizeof(buf), "/h%06.2f_r%06.2f_a%06.2f", h, r, phi);
        suffixes.emplace_back(buf);
      }
    }
  }

  std::vector<FrameSpec> frames;
  frames.reserve(config.frame_count());
  for (std::size_t s = 0; s < config.sun_conditions.size(); ++s) {
    const std::string prefix = std::string(trial) + "/" + std::to_string(s);
    for (std::size_t k = 0; k < block.size(); ++k) {
      FrameSpec f = block[k];
      f.sun_index = static_cast<int>(s);
      f.sun = config.sun_conditions[s];
      f.frame_id.reserve(prefix.size() + suffixes[k].size());
      f.frame_id.append(prefix).append(suffixes[k]);
      frames.push_back(std::move(f));
    }
  }

  return frames;
}

}  // namespace geometry
}  // namespace orbitbench
