// Ground-truth extraction from object-id buffers and the per-trial
// annotation JSON document.
#pragma once

#include "orbitbench/core.hpp"
#include "orbitbench/geometry.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace orbitbench::annotate {

// Pixel coordinates: origin top-left, x right, y down. The center uses
// pixel-index midpoints, so a box covering columns 50..149 has center_x 99.5
// and width 100.
struct CenterBox {
  double center_x = 0.0;
  double center_y = 0.0;
  double width = 0.0;
  double height = 0.0;

  friend bool operator==(const CenterBox&, const CenterBox&) = default;
};

struct ObjectLabel {
  std::string label;
  std::string category;
};

using LabelMap = std::map<std::uint32_t, ObjectLabel>;

struct ObjectBox {
  std::uint32_t object_id = 0;
  CenterBox bbox;
  std::int64_t pixel_count = 0;
  bool touches_border = false;
};

// One box per object id present in the buffer, ordered by id. Throws
// SchemaError naming the id when a non-zero id has no label.
std::vector<ObjectBox> extract_boxes(std::span<const std::uint32_t> ids, int width, int height,
                                     const LabelMap& labels);

// Orientation of the target relative to the camera in [0, 360); 0 is a view
// of the target's front face.
double orientation_relative(double target_yaw_deg, double camera_azimuth_deg);

struct AnnotationRecord {
  std::string frame_id;
  std::uint32_t object_id = 0;
  std::string object_label;
  std::string label_category;
  CenterBox bbox;
  double camera_altitude_m = 0.0;
  double orientation_deg = 0.0;
  double distance_m = 0.0;
  double pitch_deg = 0.0;
  std::int64_t pixel_count = 0;
  SunCondition sun = SunCondition::Noon;
  double radius_m = 0.0;
  double azimuth_deg = 0.0;
  double look_at_height_m = 0.0;
  bool touches_border = false;

  friend bool operator==(const AnnotationRecord&, const AnnotationRecord&) = default;
};

// Sweep frame in which no target is visible; keeps the frame in the
// evaluation universe.
struct EmptyFrame {
  std::string frame_id;
  double camera_altitude_m = 0.0;
  double radius_m = 0.0;
  double azimuth_deg = 0.0;
  SunCondition sun = SunCondition::Noon;
  double distance_m = 0.0;
  double pitch_deg = 0.0;
  double look_at_height_m = 0.0;

  friend bool operator==(const EmptyFrame&, const EmptyFrame&) = default;
};

struct TrialAnnotations {
  std::string trial;
  std::vector<AnnotationRecord> frames;
  std::vector<EmptyFrame> empty_frames;

  friend bool operator==(const TrialAnnotations&, const TrialAnnotations&) = default;
};

// Rounds to the six decimal digits kept in the JSON document.
double quantize6(double value);

struct TargetPlacement {
  std::uint32_t object_id = 0;
  double yaw_deg = 0.0;
};

// Builds records for one rendered frame with every float field quantized.
std::vector<AnnotationRecord> make_records(const geometry::FrameSpec& frame,
                                           const std::vector<ObjectBox>& boxes,
                                           const LabelMap& labels,
                                           const std::vector<TargetPlacement>& placements);

EmptyFrame make_empty_frame(const geometry::FrameSpec& frame);

// Serialized document; records and empty frames sorted by frame id, then
// object id.
std::string to_json_string(TrialAnnotations trial);
TrialAnnotations from_json_string(const std::string& text);

void write_trial_json(const TrialAnnotations& trial, const std::filesystem::path& path);
TrialAnnotations read_trial_json(const std::filesystem::path& path);

}  // namespace orbitbench::annotate
