#include "orbitbench/annotate.hpp"

#include "json_util.hpp"
#include "orbitbench/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>
#include <tuple>

namespace orbitbench::annotate {

namespace {

struct Extent {
  int min_x = std::numeric_limits<int>::max();
  int min_y = std::numeric_limits<int>::max();
  int max_x = -1;
  int max_y = -1;
  std::int64_t count = 0;
};

}  // namespace

std::vector<ObjectBox> extract_boxes(std::span<const std::uint32_t> ids, int width, int height,
                                     const LabelMap& labels) {
  if (width < 1 || height < 1 ||
      ids.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height))
    throw SchemaError("extract_boxes: id buffer does not match the image dimensions");

  std::map<std::uint32_t, Extent> extents;
  for (int y = 0; y < height; ++y) {
    const std::size_t row = static_cast<std::size_t>(y) * static_cast<std::size_t>(width);
    for (int x = 0; x < width; ++x) {
      const std::uint32_t id = ids[row + static_cast<std::size_t>(x)];
      if (id == 0) continue;
      Extent& e = extents[id];
      e.min_x = std::min(e.min_x, x);
      e.max_x = std::max(e.max_x, x);
      e.min_y = std::min(e.min_y, y);
      e.max_y = std::max(e.max_y, y);
      ++e.count;
    }
  }

  std::vector<ObjectBox> boxes;
  boxes.reserve(extents.size());
  for (const auto& [id, e] : extents) {
    if (!labels.contains(id))
      throw SchemaError("extract_boxes: object id " + std::to_string(id) + " has no label");
    ObjectBox box;
    box.object_id = id;
    box.bbox.center_x = 0.5 * (e.min_x + e.max_x);
    box.bbox.center_y = 0.5 * (e.min_y + e.max_y);
    box.bbox.width = e.max_x - e.min_x + 1;
    box.bbox.height = e.max_y - e.min_y + 1;
    box.pixel_count = e.count;
    box.touches_border =
        e.min_x == 0 || e.min_y == 0 || e.max_x == width - 1 || e.max_y == height - 1;
    boxes.push_back(box);
  }
  return boxes;
}

double orientation_relative(double target_yaw_deg, double camera_azimuth_deg) {
  return wrap_degrees(camera_azimuth_deg - target_yaw_deg);
}

double quantize6(double value) {
  const double q = std::round(value * 1e6) / 1e6;
  return q == 0.0 ? 0.0 : q;  // no negative zero in the document
}

std::vector<AnnotationRecord> make_records(const geometry::FrameSpec& frame,
                                           const std::vector<ObjectBox>& boxes,
                                           const LabelMap& labels,
                                           const std::vector<TargetPlacement>& placements) {
  std::vector<AnnotationRecord> records;
  records.reserve(boxes.size());
  for (const auto& box : boxes) {
    const auto label = labels.find(box.object_id);
    if (label == labels.end())
      throw SchemaError("make_records: object id " + std::to_string(box.object_id) +
                        " has no label");
    const auto placement =
        std::find_if(placements.begin(), placements.end(),
                     [&](const TargetPlacement& p) { return p.object_id == box.object_id; });
    const double yaw = placement == placements.end() ? 0.0 : placement->yaw_deg;

    AnnotationRecord r;
    r.frame_id = frame.frame_id;
    r.object_id = box.object_id;
    r.object_label = label->second.label;
    r.label_category = label->second.category;
    r.bbox = box.bbox;
    r.camera_altitude_m = quantize6(frame.altitude_m);
    r.orientation_deg = quantize6(orientation_relative(yaw, frame.azimuth_deg));
    if (r.orientation_deg >= 360.0) r.orientation_deg = 0.0;
    r.distance_m = quantize6(frame.distance_m);
    r.pitch_deg = quantize6(frame.pitch_deg);
    r.pixel_count = box.pixel_count;
    r.sun = frame.sun;
    r.radius_m = quantize6(frame.radius_m);
    r.azimuth_deg = quantize6(frame.azimuth_deg);
    r.look_at_height_m = quantize6(frame.look_at_height_m);
    r.touches_border = box.touches_border;
    records.push_back(std::move(r));
  }
  return records;
}

EmptyFrame make_empty_frame(const geometry::FrameSpec& frame) {
  EmptyFrame e;
  e.frame_id = frame.frame_id;
  e.camera_altitude_m = quantize6(frame.altitude_m);
  e.radius_m = quantize6(frame.radius_m);
  e.azimuth_deg = quantize6(frame.azimuth_deg);
  e.sun = frame.sun;
  e.distance_m = quantize6(frame.distance_m);
  e.pitch_deg = quantize6(frame.pitch_deg);
  e.look_at_height_m = quantize6(frame.look_at_height_m);
  return e;
}

// ---------------------------------------------------------------------------
// JSON document

namespace {

using detail::json;

json record_to_json(const AnnotationRecord& r) {
  return json{{"frame_id", r.frame_id},
              {"object_id", r.object_id},
              {"object_label", r.object_label},
              {"label_category", r.label_category},
              {"bbox",
               {{"center_x", quantize6(r.bbox.center_x)},
                {"center_y", quantize6(r.bbox.center_y)},
                {"width", quantize6(r.bbox.width)},
                {"height", quantize6(r.bbox.height)}}},
              {"camera_altitude_m", quantize6(r.camera_altitude_m)},
              {"orientation_deg", quantize6(r.orientation_deg)},
              {"distance_m", quantize6(r.distance_m)},
              {"pitch_deg", quantize6(r.pitch_deg)},
              {"pixel_count", r.pixel_count},
              {"sun", std::string(to_string(r.sun))},
              {"radius_m", quantize6(r.radius_m)},
              {"azimuth_deg", quantize6(r.azimuth_deg)},
              {"look_at_height_m", quantize6(r.look_at_height_m)},
              {"touches_border", r.touches_border}};
}

json empty_to_json(const EmptyFrame& e) {
  return json{{"frame_id", e.frame_id},
              {"camera_altitude_m", quantize6(e.camera_altitude_m)},
              {"radius_m", quantize6(e.radius_m)},
              {"azimuth_deg", quantize6(e.azimuth_deg)},
              {"sun", std::string(to_string(e.sun))},
              {"distance_m", quantize6(e.distance_m)},
              {"pitch_deg", quantize6(e.pitch_deg)},
              {"look_at_height_m", quantize6(e.look_at_height_m)}};
}

SunCondition parse_sun(const json& value, const std::string& ctx) {
  const std::string name = detail::string(value, ctx);
  try {
    return sun_condition_from_string(name);
  } catch (const ConfigError&) {
    throw SchemaError(ctx + ": unknown sun condition '" + name + "'");
  }
}

AnnotationRecord record_from_json(const json& j, const std::string& ctx) {
  using namespace detail;
  reject_unknown(j,
                 {"frame_id", "object_id", "object_label", "label_category", "bbox",
                  "camera_altitude_m", "orientation_deg", "distance_m", "pitch_deg", "pixel_count",
                  "sun", "radius_m", "azimuth_deg", "look_at_height_m", "touches_border"},
                 ctx);
  AnnotationRecord r;
  r.frame_id = string(require(j, "frame_id", ctx), ctx + ".frame_id");
  if (r.frame_id.empty()) fail(ctx + ".frame_id", "must be non-empty");
  const std::int64_t id = integer(require(j, "object_id", ctx), ctx + ".object_id");
  if (id < 1 || id > 0xFFFF) fail(ctx + ".object_id", "must lie in [1, 65535]");
  r.object_id = static_cast<std::uint32_t>(id);
  r.object_label = string(require(j, "object_label", ctx), ctx + ".object_label");
  r.label_category = string(require(j, "label_category", ctx), ctx + ".label_category");
  const json& bbox = require(j, "bbox", ctx);
  const std::string bctx = ctx + ".bbox";
  reject_unknown(bbox, {"center_x", "center_y", "width", "height"}, bctx);
  r.bbox.center_x = number(require(bbox, "center_x", bctx), bctx + ".center_x");
  r.bbox.center_y = number(require(bbox, "center_y", bctx), bctx + ".center_y");
  r.bbox.width = number(require(bbox, "width", bctx), bctx + ".width");
  r.bbox.height = number(require(bbox, "height", bctx), bctx + ".height");
  if (!(r.bbox.width >= 1.0 && r.bbox.height >= 1.0)) fail(bctx, "width and height must be >= 1");
  r.camera_altitude_m = number(require(j, "camera_altitude_m", ctx), ctx + ".camera_altitude_m");
  r.orientation_deg = number(require(j, "orientation_deg", ctx), ctx + ".orientation_deg");
  if (!(r.orientation_deg >= 0.0 && r.orientation_deg < 360.0))
    fail(ctx + ".orientation_deg", "must lie in [0, 360)");
  r.distance_m = number(require(j, "distance_m", ctx), ctx + ".distance_m");
  r.pitch_deg = number(require(j, "pitch_deg", ctx), ctx + ".pitch_deg");
  r.pixel_count = integer(require(j, "pixel_count", ctx), ctx + ".pixel_count");
  if (r.pixel_count < 1) fail(ctx + ".pixel_count", "must be >= 1");
  if (static_cast<double>(r.pixel_count) > r.bbox.width * r.bbox.height)
    fail(ctx + ".pixel_count", "exceeds the bbox area");
  r.sun = parse_sun(require(j, "sun", ctx), ctx + ".sun");
  r.radius_m = number(require(j, "radius_m", ctx), ctx + ".radius_m");
  if (!(r.radius_m > 0.0)) fail(ctx + ".radius_m", "must be > 0");
  r.azimuth_deg = number(require(j, "azimuth_deg", ctx), ctx + ".azimuth_deg");
  if (!(r.azimuth_deg >= 0.0 && r.azimuth_deg < 360.0))
    fail(ctx + ".azimuth_deg", "must lie in [0, 360)");
  r.look_at_height_m = number(require(j, "look_at_height_m", ctx), ctx + ".look_at_height_m");
  r.touches_border = boolean(require(j, "touches_border", ctx), ctx + ".touches_border");
  return r;
}

EmptyFrame empty_from_json(const json& j, const std::string& ctx) {
  using namespace detail;
  reject_unknown(j,
                 {"frame_id", "camera_altitude_m", "radius_m", "azimuth_deg", "sun", "distance_m",
                  "pitch_deg", "look_at_height_m"},
                 ctx);
  EmptyFrame e;
  e.frame_id = string(require(j, "frame_id", ctx), ctx + ".frame_id");
  e.camera_altitude_m = number(require(j, "camera_altitude_m", ctx), ctx + ".camera_altitude_m");
  e.radius_m = number(require(j, "radius_m", ctx), ctx + ".radius_m");
  if (!(e.radius_m > 0.0)) fail(ctx + ".radius_m", "must be > 0");
  e.azimuth_deg = number(require(j, "azimuth_deg", ctx), ctx + ".azimuth_deg");
  if (!(e.azimuth_deg >= 0.0 && e.azimuth_deg < 360.0))
    fail(ctx + ".azimuth_deg", "must lie in [0, 360)");
  e.sun = parse_sun(require(j, "sun", ctx), ctx + ".sun");
  e.distance_m = number(require(j, "distance_m", ctx), ctx + ".distance_m");
  e.pitch_deg = number(require(j, "pitch_deg", ctx), ctx + ".pitch_deg");
  e.look_at_height_m = number(require(j, "look_at_height_m", ctx), ctx + ".look_at_height_m");
  return e;
}

}  // namespace

std::string to_json_string(TrialAnnotations trial) {
  std::sort(trial.frames.begin(), trial.frames.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame_id, a.object_id) < std::tie(b.frame_id, b.object_id);
  });
  std::sort(trial.empty_frames.begin(), trial.empty_frames.end(),
            [](const auto& a, const auto& b) { return a.frame_id < b.frame_id; });
  json doc;
  doc["trial"] = trial.trial;
  doc["frames"] = json::array();
  for (const auto& r : trial.frames) doc["frames"].push_back(record_to_json(r));
  doc["empty_frames"] = json::array();
  for (const auto& e : trial.empty_frames) doc["empty_frames"].push_back(empty_to_json(e));
  return doc.dump(1) + "\n";
}

TrialAnnotations from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("annotations: ") + e.what());
  }
  using namespace detail;
  const std::string ctx = "annotations";
  reject_unknown(doc, {"trial", "frames", "empty_frames"}, ctx);
  TrialAnnotations trial;
  trial.trial = string(require(doc, "trial", ctx), ctx + ".trial");
  const json& frames = require(doc, "frames", ctx);
  if (!frames.is_array()) fail(ctx + ".frames", "expected an array");
  trial.frames.reserve(frames.size());
  for (std::size_t i = 0; i < frames.size(); ++i) {
    trial.frames.push_back(record_from_json(frames[i], ctx + ".frames[" + std::to_string(i) + "]"));
  }
  if (doc.contains("empty_frames")) {
    const json& empties = doc["empty_frames"];
    if (!empties.is_array()) fail(ctx + ".empty_frames", "expected an array");
    for (std::size_t i = 0; i < empties.size(); ++i) {
      trial.empty_frames.push_back(
          empty_from_json(empties[i], ctx + ".empty_frames[" + std::to_string(i) + "]"));
    }
  }
  std::set<std::pair<std::string, std::uint32_t>> seen;
  std::set<std::string> annotated;
  for (std::size_t i = 0; i < trial.frames.size(); ++i) {
    const auto& r = trial.frames[i];
    if (!seen.emplace(r.frame_id, r.object_id).second)
      fail(ctx + ".frames[" + std::to_string(i) + "]",
           "duplicate record for object " + std::to_string(r.object_id) + " in " + r.frame_id);
    annotated.insert(r.frame_id);
  }
  std::set<std::string> empty_ids;
  for (std::size_t i = 0; i < trial.empty_frames.size(); ++i) {
    const auto& id = trial.empty_frames[i].frame_id;
    if (annotated.count(id) != 0 || !empty_ids.insert(id).second)
      fail(ctx + ".empty_frames[" + std::to_string(i) + "]", "frame " + id + " listed twice");
  }
  return trial;
}

void write_trial_json(const TrialAnnotations& trial, const std::filesystem::path& path) {
  io::write_file_atomic(path, to_json_string(trial));
}

TrialAnnotations read_trial_json(const std::filesystem::path& path) {
  return from_json_string(io::read_file(path));
}

}  // namespace orbitbench::annotate
