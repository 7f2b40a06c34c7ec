// Run configuration and trial generation: scene assembly, parallel frame
// rendering, per-frame file output and annotation aggregation.
#pragma once

#include "orbitbench/annotate.hpp"
#include "orbitbench/eval.hpp"
#include "orbitbench/geometry.hpp"
#include "orbitbench/raster.hpp"
#include "orbitbench/scene.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace orbitbench::pipeline {

struct ExtraTarget {
  scene::Pose pose = scene::Pose::Standing;
  int variant = 0;
  double x_m = 0.0;
  double y_m = 0.0;
  double yaw_deg = 0.0;
  bool chest_marker = true;
};

struct SceneConfig {
  std::uint64_t seed = 1;
  scene::Pose pose = scene::Pose::Standing;
  int variant = 0;
  double yaw_deg = 0.0;
  bool chest_marker = true;
  double terrain_extent_m = 400.0;
  double terrain_cell_m = 4.0;
  std::vector<ExtraTarget> extra_targets;
  // Overrides of the default sun table, keyed by condition.
  std::map<SunCondition, scene::IlluminationCondition> sun_table;

  scene::IlluminationCondition illumination(SunCondition name) const;
};

struct RunConfig {
  std::string trial = "trial";
  geometry::SweepConfig sweep;
  // When unset, the look-at height is taken from the primary target.
  std::optional<double> look_at_height_m;
  SceneConfig scene;
  raster::CameraIntrinsics intrinsics;
  std::filesystem::path output_dir = "out";
  bool write_depth = false;
  eval::EvalSettings eval;
  int workers = 0;  // 0 = one per hardware thread

  // Throws ConfigError with the dotted path of the offending field.
  void validate() const;
};

// Unknown keys are rejected. Throws ParseError for malformed JSON and
// ConfigError for schema or range violations.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);

// Defaults for every field with sun_conditions set to all four conditions.
RunConfig default_run_config();

// Scene with the primary target at the origin and the extra targets after
// it. The sun field holds the first configured condition.
scene::SceneSpec build_scene(const RunConfig& config);

// Everything needed to render any frame of a trial; immutable once built and
// shared by all workers.
struct TrialContext {
  std::string trial;
  scene::SceneSpec scene;
  std::map<SunCondition, raster::PreparedScene> prepared;
  annotate::LabelMap labels;
  std::vector<annotate::TargetPlacement> placements;
  std::vector<geometry::FrameSpec> frames;
  raster::CameraIntrinsics intrinsics;
};

TrialContext make_trial_context(const RunConfig& config);

struct FrameResult {
  raster::FrameBuffers buffers;
  std::vector<annotate::ObjectBox> boxes;
  std::vector<annotate::AnnotationRecord> records;
  std::optional<annotate::EmptyFrame> empty;
};

FrameResult render_frame(const TrialContext& context, std::size_t frame_index);

// Number of workers to use: the explicit value when given, else the
// ORBITBENCH_WORKERS environment value, else the config value; 0 resolves to
// the hardware thread count. Throws ConfigError for negative or malformed
// values.
int resolve_workers(std::optional<int> flag, const char* env_value, int config_value);

using ProgressFn = std::function<void(std::size_t done, std::size_t total)>;

struct GenerateOutput {
  annotate::TrialAnnotations annotations;
  std::filesystem::path trial_dir;
  std::size_t frame_count = 0;
};

// Renders every frame with up to `workers` threads. With an output
// directory, frame files go to <out>/<frame_id>.png, <out>/<frame_id>_id.png
// and optionally <out>/<frame_id>_depth.f32, and the trial documents to
// <out>/<trial>/annotations.json and <out>/<trial>/scene.json.
GenerateOutput generate(const RunConfig& config, const std::optional<std::filesystem::path>& out_dir,
                        int workers, const ProgressFn& progress = {});

// Provenance document stored next to the annotations.
std::string scene_json_string(const RunConfig& config, const scene::SceneSpec& scene);

// Eval settings block of a config document alone, for `evaluate --config`.
eval::EvalSettings eval_settings_from_config(const RunConfig& config);

}  // namespace orbitbench::pipeline
