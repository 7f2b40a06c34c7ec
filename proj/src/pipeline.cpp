#include "orbitbench/pipeline.hpp"

#include "json_util.hpp"
#include "orbitbench/image_io.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <exception>
#include <mutex>
#include <thread>
#include <tuple>

namespace orbitbench::pipeline {

namespace {

using detail::json;

template <typename F>
auto prefixed(const std::string& prefix, F&& fn) -> decltype(fn()) {
  try {
    return fn();
  } catch (const ConfigError& e) {
    const std::string what = e.what();
    const std::string message =
        what.size() > e.field().size() + 2 ? what.substr(e.field().size() + 2) : what;
    throw ConfigError(prefix + "." + e.field(), message);
  }
}

double cfg_number(const json& v, const std::string& ctx) { return detail::number<ConfigError>(v, ctx); }

int cfg_int(const json& v, const std::string& ctx) {
  const auto i = detail::integer<ConfigError>(v, ctx);
  if (i < std::numeric_limits<int>::min() || i > std::numeric_limits<int>::max())
    throw ConfigError(ctx, "out of range");
  return static_cast<int>(i);
}

std::vector<double> cfg_numbers(const json& v, const std::string& ctx) {
  if (!v.is_array()) throw ConfigError(ctx, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(cfg_number(v[i], ctx + "[" + std::to_string(i) + "]"));
  }
  return out;
}

scene::Pose cfg_pose(const json& v, const std::string& ctx) {
  const auto name = detail::string<ConfigError>(v, ctx);
  try {
    return scene::pose_from_string(name);
  } catch (const Error&) {
    throw ConfigError(ctx, "unknown pose '" + name + "'");
  }
}

SunCondition cfg_sun(const json& v, const std::string& ctx) {
  const auto name = detail::string<ConfigError>(v, ctx);
  try {
    return sun_condition_from_string(name);
  } catch (const Error&) {
    throw ConfigError(ctx, "unknown sun condition '" + name + "'");
  }
}

void parse_sweep(const json& j, RunConfig& config) {
  const std::string ctx = "sweep";
  detail::reject_unknown<ConfigError>(
      j,
      {"altitudes_m", "radii_m", "azimuth_start_deg", "azimuth_end_deg", "azimuth_step_deg",
       "sun_conditions", "look_at_height_m"},
      ctx);
  auto& s = config.sweep;
  s.altitudes_m = cfg_numbers(detail::require<ConfigError>(j, "altitudes_m", ctx), ctx + ".altitudes_m");
  s.radii_m = cfg_numbers(detail::require<ConfigError>(j, "radii_m", ctx), ctx + ".radii_m");
  if (j.contains("azimuth_start_deg"))
    s.azimuth_start_deg = cfg_number(j["azimuth_start_deg"], ctx + ".azimuth_start_deg");
  if (j.contains("azimuth_end_deg"))
    s.azimuth_end_deg = cfg_number(j["azimuth_end_deg"], ctx + ".azimuth_end_deg");
  if (j.contains("azimuth_step_deg"))
    s.azimuth_step_deg = cfg_number(j["azimuth_step_deg"], ctx + ".azimuth_step_deg");
  if (j.contains("sun_conditions")) {
    const auto& list = j["sun_conditions"];
    if (!list.is_array()) throw ConfigError(ctx + ".sun_conditions", "expected an array of names");
    s.sun_conditions.clear();
    for (std::size_t i = 0; i < list.size(); ++i) {
      s.sun_conditions.push_back(cfg_sun(list[i], ctx + ".sun_conditions[" + std::to_string(i) + "]"));
    }
  }
  if (j.contains("look_at_height_m"))
    config.look_at_height_m = cfg_number(j["look_at_height_m"], ctx + ".look_at_height_m");
}

void parse_scene(const json& j, SceneConfig& sc) {
  const std::string ctx = "scene";
  detail::reject_unknown<ConfigError>(j,
                                      {"seed", "pose", "variant", "yaw_deg", "chest_marker",
                                       "terrain_extent_m", "terrain_cell_m", "extra_targets",
                                       "sun_table"},
                                      ctx);
  if (j.contains("seed")) {
    const auto& v = j["seed"];
    if (!v.is_number_integer() || (v.is_number_integer() && !v.is_number_unsigned() && v.get<std::int64_t>() < 0))
      throw ConfigError(ctx + ".seed", "expected a non-negative integer");
    sc.seed = v.get<std::uint64_t>();
  }
  if (j.contains("pose")) sc.pose = cfg_pose(j["pose"], ctx + ".pose");
  if (j.contains("variant")) sc.variant = cfg_int(j["variant"], ctx + ".variant");
  if (j.contains("yaw_deg")) sc.yaw_deg = cfg_number(j["yaw_deg"], ctx + ".yaw_deg");
  if (j.contains("chest_marker"))
    sc.chest_marker = detail::boolean<ConfigError>(j["chest_marker"], ctx + ".chest_marker");
  if (j.contains("terrain_extent_m"))
    sc.terrain_extent_m = cfg_number(j["terrain_extent_m"], ctx + ".terrain_extent_m");
  if (j.contains("terrain_cell_m"))
    sc.terrain_cell_m = cfg_number(j["terrain_cell_m"], ctx + ".terrain_cell_m");
  if (j.contains("extra_targets")) {
    const auto& list = j["extra_targets"];
    if (!list.is_array()) throw ConfigError(ctx + ".extra_targets", "expected an array");
    for (std::size_t i = 0; i < list.size(); ++i) {
      const std::string tctx = ctx + ".extra_targets[" + std::to_string(i) + "]";
      const auto& t = list[i];
      detail::reject_unknown<ConfigError>(t, {"pose", "variant", "x_m", "y_m", "yaw_deg", "chest_marker"},
                                          tctx);
      ExtraTarget e;
      if (t.contains("pose")) e.pose = cfg_pose(t["pose"], tctx + ".pose");
      if (t.contains("variant")) e.variant = cfg_int(t["variant"], tctx + ".variant");
      e.x_m = cfg_number(detail::require<ConfigError>(t, "x_m", tctx), tctx + ".x_m");
      e.y_m = cfg_number(detail::require<ConfigError>(t, "y_m", tctx), tctx + ".y_m");
      if (t.contains("yaw_deg")) e.yaw_deg = cfg_number(t["yaw_deg"], tctx + ".yaw_deg");
      if (t.contains("chest_marker"))
        e.chest_marker = detail::boolean<ConfigError>(t["chest_marker"], tctx + ".chest_marker");
      sc.extra_targets.push_back(e);
    }
  }
  if (j.contains("sun_table")) {
    const auto& table = j["sun_table"];
    if (!table.is_object()) throw ConfigError(ctx + ".sun_table", "expected an object");
    for (const auto& [name, entry] : table.items()) {
      const std::string ectx = ctx + ".sun_table." + name;
      const SunCondition cond = cfg_sun(json(name), ectx);
      detail::reject_unknown<ConfigError>(entry, {"sun_elevation_deg", "sun_azimuth_deg", "ambient_fraction"},
                                          ectx);
      auto ill = scene::default_illumination(cond);
      if (entry.contains("sun_elevation_deg"))
        ill.sun_elevation_deg = cfg_number(entry["sun_elevation_deg"], ectx + ".sun_elevation_deg");
      if (entry.contains("sun_azimuth_deg"))
        ill.sun_azimuth_deg = cfg_number(entry["sun_azimuth_deg"], ectx + ".sun_azimuth_deg");
      if (entry.contains("ambient_fraction"))
        ill.ambient_fraction = cfg_number(entry["ambient_fraction"], ectx + ".ambient_fraction");
      sc.sun_table[cond] = ill;
    }
  }
}

void parse_intrinsics(const json& j, raster::CameraIntrinsics& intr) {
  const std::string ctx = "intrinsics";
  detail::reject_unknown<ConfigError>(j, {"width_px", "height_px", "vertical_fov_deg", "near_m", "far_m"},
                                      ctx);
  if (j.contains("width_px")) intr.width_px = cfg_int(j["width_px"], ctx + ".width_px");
  if (j.contains("height_px")) intr.height_px = cfg_int(j["height_px"], ctx + ".height_px");
  if (j.contains("vertical_fov_deg"))
    intr.vertical_fov_deg = cfg_number(j["vertical_fov_deg"], ctx + ".vertical_fov_deg");
  if (j.contains("near_m")) intr.near_m = cfg_number(j["near_m"], ctx + ".near_m");
  if (j.contains("far_m")) intr.far_m = cfg_number(j["far_m"], ctx + ".far_m");
}

void parse_eval(const json& j, eval::EvalSettings& settings) {
  const std::string ctx = "eval";
  detail::reject_unknown<ConfigError>(j,
                                      {"iou_threshold", "tau", "altitude_split_m", "radius_split_m",
                                       "bin_width_deg", "ap_mode", "histogram_mode"},
                                      ctx);
  if (j.contains("iou_threshold"))
    settings.iou_threshold = cfg_number(j["iou_threshold"], ctx + ".iou_threshold");
  if (j.contains("tau")) settings.tau = cfg_number(j["tau"], ctx + ".tau");
  const bool has_alt = j.contains("altitude_split_m");
  const bool has_rad = j.contains("radius_split_m");
  if (has_alt != has_rad)
    throw ConfigError(ctx + (has_alt ? ".radius_split_m" : ".altitude_split_m"),
                      "altitude_split_m and radius_split_m must be given together");
  if (has_alt) {
    settings.splits = eval::RegionSplits{cfg_number(j["altitude_split_m"], ctx + ".altitude_split_m"),
                                         cfg_number(j["radius_split_m"], ctx + ".radius_split_m")};
  }
  if (j.contains("bin_width_deg"))
    settings.bin_width_deg = cfg_number(j["bin_width_deg"], ctx + ".bin_width_deg");
  if (j.contains("ap_mode")) {
    settings.ap_mode = prefixed(ctx, [&] {
      return eval::ap_mode_from_string(detail::string<ConfigError>(j["ap_mode"], "ap_mode"));
    });
  }
  if (j.contains("histogram_mode")) {
    settings.histogram_mode = prefixed(ctx, [&] {
      return eval::histogram_mode_from_string(
          detail::string<ConfigError>(j["histogram_mode"], "histogram_mode"));
    });
  }
}

bool valid_trial_name(const std::string& name) {
  if (name.empty() || name == "." || name == "..") return false;
  return std::all_of(name.begin(), name.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.';
  });
}

json number_array(const std::vector<double>& values) {
  auto arr = json::array();
  for (double v : values) arr.push_back(v);
  return arr;
}

}  // namespace

scene::IlluminationCondition SceneConfig::illumination(SunCondition name) const {
  const auto it = sun_table.find(name);
  return it != sun_table.end() ? it->second : scene::default_illumination(name);
}

void RunConfig::validate() const {
  if (!valid_trial_name(trial))
    throw ConfigError("trial", "must be non-empty and use only letters, digits, '_', '-' and '.'");
  prefixed("sweep", [&] { sweep.validate(); });
  if (look_at_height_m && !std::isfinite(*look_at_height_m))
    throw ConfigError("sweep.look_at_height_m", "must be finite");
  if (scene.variant < 0 || scene.variant >= 8) throw ConfigError("scene.variant", "must lie in [0, 8)");
  if (!std::isfinite(scene.yaw_deg)) throw ConfigError("scene.yaw_deg", "must be finite");
  if (!(scene.terrain_extent_m > 0.0)) throw ConfigError("scene.terrain_extent_m", "must be > 0");
  if (!(scene.terrain_cell_m > 0.0)) throw ConfigError("scene.terrain_cell_m", "must be > 0");
  if (scene.terrain_extent_m / scene.terrain_cell_m > 8192.0)
    throw ConfigError("scene.terrain_cell_m", "terrain grid would exceed 8192 cells per side");
  for (std::size_t i = 0; i < scene.extra_targets.size(); ++i) {
    const auto& t = scene.extra_targets[i];
    if (t.variant < 0 || t.variant >= 8)
      throw ConfigError("scene.extra_targets[" + std::to_string(i) + "].variant", "must lie in [0, 8)");
  }
  for (const auto& [name, ill] : scene.sun_table) {
    prefixed("scene.sun_table." + std::string(to_string(name)), [&] { ill.validate(); });
  }
  prefixed("intrinsics", [&] { intrinsics.validate(); });
  if (output_dir.empty()) throw ConfigError("output_dir", "must be non-empty");
  prefixed("eval", [&] { eval.validate(); });
  if (workers < 0) throw ConfigError("parallelism.workers", "must be >= 0");
}

RunConfig default_run_config() {
  RunConfig config;
  config.sweep.sun_conditions = {SunCondition::EarlyMorning, SunCondition::Noon,
                                 SunCondition::MidAfternoon, SunCondition::LateAfternoon};
  return config;
}

RunConfig parse_run_config(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("config: malformed JSON: ") + e.what());
  }
  if (!doc.is_object()) throw ConfigError("config", "expected a JSON object");
  detail::reject_unknown<ConfigError>(doc,
                                      {"trial", "sweep", "scene", "intrinsics", "output_dir",
                                       "write_depth", "eval", "parallelism"},
                                      "config");
  RunConfig config = default_run_config();
  if (doc.contains("trial")) config.trial = detail::string<ConfigError>(doc["trial"], "trial");
  parse_sweep(detail::require<ConfigError>(doc, "sweep", "config"), config);
  if (doc.contains("scene")) parse_scene(doc["scene"], config.scene);
  if (doc.contains("intrinsics")) parse_intrinsics(doc["intrinsics"], config.intrinsics);
  if (doc.contains("output_dir"))
    config.output_dir = detail::string<ConfigError>(doc["output_dir"], "output_dir");
  if (doc.contains("write_depth"))
    config.write_depth = detail::boolean<ConfigError>(doc["write_depth"], "write_depth");
  if (doc.contains("eval")) parse_eval(doc["eval"], config.eval);
  if (doc.contains("parallelism")) {
    const auto& p = doc["parallelism"];
    detail::reject_unknown<ConfigError>(p, {"workers"}, "parallelism");
    if (p.contains("workers")) config.workers = cfg_int(p["workers"], "parallelism.workers");
  }
  config.validate();
  return config;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  return parse_run_config(io::read_file(path));
}

scene::SceneSpec build_scene(const RunConfig& config) {
  const auto& sc = config.scene;
  scene::SceneSpec spec;
  spec.terrain = prefixed("scene", [&] {
    return scene::build_terrain(sc.seed, sc.terrain_extent_m, sc.terrain_cell_m);
  });
  spec.sun = sc.illumination(config.sweep.sun_conditions.empty() ? SunCondition::Noon
                                                                 : config.sweep.sun_conditions.front());
  auto primary = prefixed("scene", [&] { return scene::build_target(sc.pose, sc.variant, sc.chest_marker); });
  spec = scene::place_target(std::move(spec), std::move(primary), Eigen::Vector2d::Zero(),
                             wrap_degrees(sc.yaw_deg));
  for (std::size_t i = 0; i < sc.extra_targets.size(); ++i) {
    const auto& e = sc.extra_targets[i];
    const std::string ctx = "scene.extra_targets[" + std::to_string(i) + "]";
    auto t = prefixed(ctx, [&] { return scene::build_target(e.pose, e.variant, e.chest_marker); });
    try {
      spec = scene::place_target(std::move(spec), std::move(t), Eigen::Vector2d(e.x_m, e.y_m),
                                 wrap_degrees(e.yaw_deg));
    } catch (const GeometryError& err) {
      throw ConfigError(ctx, err.what());
    }
  }
  return spec;
}

TrialContext make_trial_context(const RunConfig& config) {
  config.validate();
  TrialContext ctx;
  ctx.trial = config.trial;
  ctx.scene = build_scene(config);
  ctx.intrinsics = config.intrinsics;
  for (SunCondition sun : config.sweep.sun_conditions) {
    ctx.prepared.emplace(sun, raster::prepare(ctx.scene.with_sun(config.scene.illumination(sun))));
  }
  for (const auto& t : ctx.scene.targets) {
    const auto id = static_cast<std::uint32_t>(t.object_id);
    ctx.labels[id] = {t.label, t.category};
    ctx.placements.push_back({id, t.yaw_deg});
  }
  geometry::SweepConfig sweep = config.sweep;
  sweep.look_at_height_m = config.look_at_height_m.value_or(scene::look_at_height(ctx.scene.targets.front()));
  ctx.frames = prefixed("sweep", [&] { return geometry::enumerate_sweep(sweep, config.trial); });
  return ctx;
}

FrameResult render_frame(const TrialContext& context, std::size_t frame_index) {
  const auto& frame = context.frames.at(frame_index);
  FrameResult out;
  out.buffers = raster::render(context.prepared.at(frame.sun), frame.camera, context.intrinsics);
  out.boxes = annotate::extract_boxes(out.buffers.id, out.buffers.width, out.buffers.height, context.labels);
  out.records = annotate::make_records(frame, out.boxes, context.labels, context.placements);
  if (out.records.empty()) out.empty = annotate::make_empty_frame(frame);
  return out;
}

int resolve_workers(std::optional<int> flag, const char* env_value, int config_value) {
  int workers = config_value;
  if (flag) {
    if (*flag < 0) throw ConfigError("--workers", "must be >= 0");
    workers = *flag;
  } else if (env_value != nullptr && *env_value != '\0') {
    const std::string_view text(env_value);
    int parsed = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), parsed);
    if (ec != std::errc() || end != text.data() + text.size() || parsed < 0)
      throw ConfigError("ORBITBENCH_WORKERS", "expected a non-negative integer, got '" + std::string(text) + "'");
    workers = parsed;
  }
  if (workers < 0) throw ConfigError("parallelism.workers", "must be >= 0");
  if (workers == 0) workers = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  return workers;
}

std::string scene_json_string(const RunConfig& config, const scene::SceneSpec& scene) {
  json doc;
  doc["trial"] = config.trial;
  auto scene_doc = scene::to_json(scene);
  scene_doc.erase("sun");
  doc["scene"] = std::move(scene_doc);
  auto suns = json::array();
  for (SunCondition s : config.sweep.sun_conditions) {
    const auto ill = config.scene.illumination(s);
    suns.push_back({{"name", std::string(to_string(s))},
                    {"sun_elevation_deg", ill.sun_elevation_deg},
                    {"sun_azimuth_deg", ill.sun_azimuth_deg},
                    {"ambient_fraction", ill.ambient_fraction}});
  }
  doc["sun_table"] = std::move(suns);
  const auto& sw = config.sweep;
  doc["sweep"] = {{"altitudes_m", number_array(sw.altitudes_m)},
                  {"radii_m", number_array(sw.radii_m)},
                  {"azimuth_start_deg", sw.azimuth_start_deg},
                  {"azimuth_end_deg", sw.azimuth_end_deg},
                  {"azimuth_step_deg", sw.azimuth_step_deg},
                  {"look_at_height_m",
                   config.look_at_height_m.value_or(scene::look_at_height(scene.targets.front()))},
                  {"frame_count", sw.frame_count()}};
  const auto& in = config.intrinsics;
  doc["intrinsics"] = {{"width_px", in.width_px},
                       {"height_px", in.height_px},
                       {"vertical_fov_deg", in.vertical_fov_deg},
                       {"near_m", in.near_m},
                       {"far_m", in.far_m}};
  return doc.dump(1) + "\n";
}

eval::EvalSettings eval_settings_from_config(const RunConfig& config) { return config.eval; }

GenerateOutput generate(const RunConfig& config, const std::optional<std::filesystem::path>& out_dir,
                        int workers, const ProgressFn& progress) {
  const TrialContext context = make_trial_context(config);
  const std::size_t n = context.frames.size();

  std::vector<std::vector<annotate::AnnotationRecord>> records(n);
  std::vector<std::optional<annotate::EmptyFrame>> empties(n);

  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::size_t done = 0;
  std::mutex mutex;
  std::exception_ptr error;

  const auto work = [&] {
    while (!failed.load()) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) break;
      try {
        FrameResult result = render_frame(context, i);
        if (out_dir) {
          const auto base = *out_dir / context.frames[i].frame_id;
          const auto& b = result.buffers;
          io::write_rgb_png(base.string() + ".png", b.width, b.height, b.rgb);
          io::write_id_png(base.string() + "_id.png", b.width, b.height, b.id);
          if (config.write_depth) io::write_depth_f32(base.string() + "_depth.f32", b.depth);
        }
        records[i] = std::move(result.records);
        empties[i] = std::move(result.empty);
        std::lock_guard lock(mutex);
        ++done;
        if (progress) progress(done, n);
      } catch (...) {
        std::lock_guard lock(mutex);
        if (!error) error = std::current_exception();
        failed.store(true);
      }
    }
  };

  const int pool = std::max(1, std::min(workers, static_cast<int>(std::min<std::size_t>(n, 1024))));
  if (pool == 1) {
    work();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(pool));
    for (int t = 0; t < pool; ++t) threads.emplace_back(work);
    for (auto& t : threads) t.join();
  }
  if (error) std::rethrow_exception(error);

  GenerateOutput out;
  out.frame_count = n;
  out.annotations.trial = config.trial;
  for (std::size_t i = 0; i < n; ++i) {
    for (auto& r : records[i]) out.annotations.frames.push_back(std::move(r));
    if (empties[i]) out.annotations.empty_frames.push_back(std::move(*empties[i]));
  }
  std::sort(out.annotations.frames.begin(), out.annotations.frames.end(), [](const auto& a, const auto& b) {
    return std::tie(a.frame_id, a.object_id) < std::tie(b.frame_id, b.object_id);
  });
  std::sort(out.annotations.empty_frames.begin(), out.annotations.empty_frames.end(),
            [](const auto& a, const auto& b) { return a.frame_id < b.frame_id; });
  if (out_dir) {
    out.trial_dir = *out_dir / config.trial;
    annotate::write_trial_json(out.annotations, out.trial_dir / "annotations.json");
    io::write_file_atomic(out.trial_dir / "scene.json", scene_json_string(config, context.scene));
  }
  return out;
}

}  // namespace orbitbench::pipeline
