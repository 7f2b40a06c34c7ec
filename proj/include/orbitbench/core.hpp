// Shared vocabulary types and the error hierarchy used across orbitbench.
#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace orbitbench {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;

struct Rgb {
  std::uint8_t r = 0;
  std::uint8_t g = 0;
  std::uint8_t b = 0;

  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Base class for every error raised by the library. The CLI maps the
// subclasses onto process exit codes.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration; the message names the offending field.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& what)
      : Error(field + ": " + what), field_(std::move(field)) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

class GeometryError : public Error {
 public:
  using Error::Error;
};

// Input file is not valid JSON.
class ParseError : public Error {
 public:
  using Error::Error;
};

// Input file is JSON but violates the expected schema.
class SchemaError : public Error {
 public:
  using Error::Error;
};

// Records reference frame ids that are not part of the annotated universe.
class UnknownFrameError : public Error {
 public:
  UnknownFrameError(std::vector<std::string> frame_ids, const std::string& what)
      : Error(what), frame_ids_(std::move(frame_ids)) {}
  const std::vector<std::string>& frame_ids() const { return frame_ids_; }

 private:
  std::vector<std::string> frame_ids_;
};

class IoError : public Error {
 public:
  using Error::Error;
};

constexpr double kPi = 3.14159265358979323846;

inline double deg2rad(double deg) { return deg * kPi / 180.0; }
inline double rad2deg(double rad) { return rad * 180.0 / kPi; }

// Wraps an angle in degrees into [0, 360).
double wrap_degrees(double deg);

}  // namespace orbitbench
