#include "orbitbench/eval.hpp"

#include "json_util.hpp"
#include "orbitbench/image_io.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <tuple>
#include <unordered_map>

namespace orbitbench::eval {

using detail::json;

PixelBox to_pixel_box(const annotate::CenterBox& box) {
  return {box.center_x - 0.5 * (box.width - 1.0), box.center_y - 0.5 * (box.height - 1.0),
          box.width, box.height};
}

double iou(const PixelBox& a, const PixelBox& b) {
  if (!(a.width > 0.0 && a.height > 0.0 && b.width > 0.0 && b.height > 0.0))
    throw SchemaError("iou: boxes must have positive extents");
  const double ix = std::min(a.x_min + a.width, b.x_min + b.width) - std::max(a.x_min, b.x_min);
  const double iy = std::min(a.y_min + a.height, b.y_min + b.height) - std::max(a.y_min, b.y_min);
  if (ix <= 0.0 || iy <= 0.0) return 0.0;
  const double inter = ix * iy;
  const double uni = a.width * a.height + b.width * b.height - inter;
  return inter / uni;
}

MatchResult match_predictions(std::span<const PredictionRecord> predictions,
                              std::span<const GroundTruth> ground_truths,
                              const std::set<std::string>& frame_universe, double iou_threshold) {
  std::vector<std::string> unknown;
  for (const auto& p : predictions) {
    if (!frame_universe.contains(p.frame_id)) unknown.push_back(p.frame_id);
  }
  if (!unknown.empty()) {
    std::sort(unknown.begin(), unknown.end());
    unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
    std::string msg = "predictions reference unknown frame ids:";
    for (std::size_t i = 0; i < unknown.size() && i < 20; ++i) msg += " " + unknown[i];
    if (unknown.size() > 20) msg += " ... (" + std::to_string(unknown.size()) + " total)";
    throw UnknownFrameError(std::move(unknown), msg);
  }

  std::unordered_map<std::string_view, std::vector<std::size_t>> by_frame;
  for (std::size_t g = 0; g < ground_truths.size(); ++g) {
    by_frame[ground_truths[g].frame_id].push_back(g);
  }

  MatchResult result;
  result.order.resize(predictions.size());
  std::iota(result.order.begin(), result.order.end(), std::size_t{0});
  std::stable_sort(result.order.begin(), result.order.end(), [&](std::size_t a, std::size_t b) {
    return predictions[a].score > predictions[b].score;
  });
  result.true_positive.assign(predictions.size(), false);
  result.matched_gt.assign(predictions.size(), -1);
  result.gt_matched.assign(ground_truths.size(), false);

  for (std::size_t p : result.order) {
    const auto& pred = predictions[p];
    const auto it = by_frame.find(pred.frame_id);
    if (it == by_frame.end()) continue;
    double best = -1.0;
    std::ptrdiff_t best_gt = -1;
    for (std::size_t g : it->second) {
      if (result.gt_matched[g] || ground_truths[g].label != pred.label) continue;
      const double overlap = iou(pred.bbox, ground_truths[g].bbox);
      if (overlap > best) {
        best = overlap;
        best_gt = static_cast<std::ptrdiff_t>(g);
      }
    }
    if (best_gt >= 0 && best >= iou_threshold) {
      result.true_positive[p] = true;
      result.matched_gt[p] = best_gt;
      result.gt_matched[static_cast<std::size_t>(best_gt)] = true;
    }
  }
  return result;
}

std::string_view to_string(ApMode mode) {
  return mode == ApMode::AllPoint ? "all_point" : "eleven_point";
}

ApMode ap_mode_from_string(std::string_view name) {
  if (name == "all_point") return ApMode::AllPoint;
  if (name == "eleven_point") return ApMode::ElevenPoint;
  throw ConfigError("ap_mode", "expected all_point or eleven_point");
}

std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt,
                                        ApMode mode) {
  if (n_gt == 0) return std::nullopt;
  std::vector<double> precision;
  std::vector<double> recall;
  precision.reserve(flags.size());
  recall.reserve(flags.size());
  std::size_t tp = 0;
  for (std::size_t k = 0; k < flags.size(); ++k) {
    if (flags[k]) ++tp;
    precision.push_back(static_cast<double>(tp) / static_cast<double>(k + 1));
    recall.push_back(static_cast<double>(tp) / static_cast<double>(n_gt));
  }
  if (tp > n_gt) throw Error("average_precision: more true positives than ground truths");

  if (mode == ApMode::ElevenPoint) {
    double sum = 0.0;
    for (int t = 0; t <= 10; ++t) {
      const double level = t / 10.0;
      double best = 0.0;
      for (std::size_t k = 0; k < recall.size(); ++k) {
        if (recall[k] >= level - 1e-12) best = std::max(best, precision[k]);
      }
      sum += best;
    }
    return sum / 11.0;
  }

  // Monotone envelope with sentinels, then area over recall steps.
  std::vector<double> mrec{0.0};
  std::vector<double> mpre{0.0};
  mrec.insert(mrec.end(), recall.begin(), recall.end());
  mpre.insert(mpre.end(), precision.begin(), precision.end());
  mrec.push_back(1.0);
  mpre.push_back(0.0);
  for (std::size_t i = mpre.size() - 1; i > 0; --i) mpre[i - 1] = std::max(mpre[i - 1], mpre[i]);
  double ap = 0.0;
  for (std::size_t i = 1; i < mrec.size(); ++i) {
    if (mrec[i] != mrec[i - 1]) ap += (mrec[i] - mrec[i - 1]) * mpre[i];
  }
  return ap;
}

// ---------------------------------------------------------------------------

std::set<std::string> frame_universe(const annotate::TrialAnnotations& annotations) {
  std::set<std::string> ids;
  for (const auto& r : annotations.frames) ids.insert(r.frame_id);
  for (const auto& e : annotations.empty_frames) ids.insert(e.frame_id);
  return ids;
}

MatchedSet match_trial(const annotate::TrialAnnotations& annotations,
                       std::vector<PredictionRecord> predictions, double iou_threshold) {
  MatchedSet out;
  for (const auto& r : annotations.frames) {
    out.frames.emplace(r.frame_id, FrameMeta{r.camera_altitude_m, r.radius_m, r.azimuth_deg, r.sun});
    out.ground_truths.push_back({r.frame_id, r.object_label, to_pixel_box(r.bbox)});
    out.gt_frame.push_back(r.frame_id);
  }
  for (const auto& e : annotations.empty_frames) {
    out.frames.emplace(e.frame_id, FrameMeta{e.camera_altitude_m, e.radius_m, e.azimuth_deg, e.sun});
  }
  out.predictions = std::move(predictions);
  std::set<std::string> universe;
  for (const auto& [id, _] : out.frames) universe.insert(id);
  out.match = match_predictions(out.predictions, out.ground_truths, universe, iou_threshold);
  return out;
}

std::optional<double> mean_defined(const std::vector<std::optional<double>>& cells) {
  double sum = 0.0;
  std::size_t n = 0;
  for (const auto& c : cells) {
    if (c) {
      sum += *c;
      ++n;
    }
  }
  if (n == 0) return std::nullopt;
  return sum / static_cast<double>(n);
}

APGrid bin_by_height_radius(const MatchedSet& matched, std::optional<SunCondition> sun_filter,
                            ApMode mode) {
  const auto passes = [&](const FrameMeta& m) { return !sun_filter || m.sun == *sun_filter; };

  APGrid grid;
  grid.sun = sun_filter;
  std::set<double> altitudes;
  std::set<double> radii;
  for (const auto& [id, meta] : matched.frames) {
    if (!passes(meta)) continue;
    altitudes.insert(meta.altitude_m);
    radii.insert(meta.radius_m);
  }
  grid.altitudes.assign(altitudes.begin(), altitudes.end());
  grid.radii.assign(radii.begin(), radii.end());
  const std::size_t n_cells = grid.altitudes.size() * grid.radii.size();

  const auto cell_of = [&](const FrameMeta& m) {
    const auto hi = std::lower_bound(grid.altitudes.begin(), grid.altitudes.end(), m.altitude_m);
    const auto ri = std::lower_bound(grid.radii.begin(), grid.radii.end(), m.radius_m);
    return static_cast<std::size_t>(hi - grid.altitudes.begin()) * grid.radii.size() +
           static_cast<std::size_t>(ri - grid.radii.begin());
  };

  std::vector<std::size_t> n_gt(n_cells, 0);
  for (const auto& frame : matched.gt_frame) {
    const FrameMeta& m = matched.frames.at(frame);
    if (passes(m)) ++n_gt[cell_of(m)];
  }
  std::vector<std::vector<bool>> flags(n_cells);
  for (std::size_t p : matched.match.order) {
    const FrameMeta& m = matched.frames.at(matched.predictions[p].frame_id);
    if (passes(m)) flags[cell_of(m)].push_back(matched.match.true_positive[p]);
  }

  grid.cells.resize(n_cells);
  for (std::size_t c = 0; c < n_cells; ++c) {
    grid.cells[c] = average_precision(flags[c], n_gt[c], mode);
  }
  grid.map_value = mean_defined(grid.cells);
  return grid;
}

std::string_view to_string(Region region) {
  switch (region) {
    case Region::LargeTarget:
      return "LargeTarget";
    case Region::NadirView:
      return "NadirView";
    case Region::SmallTarget:
      return "SmallTarget";
    case Region::EyeLevelView:
      return "EyeLevelView";
  }
  return "Unknown";
}

Region classify_region(double altitude_m, double radius_m, const RegionSplits& splits) {
  const bool high = altitude_m >= splits.altitude_split_m;
  const bool wide = radius_m >= splits.radius_split_m;
  if (!high && !wide) return Region::LargeTarget;
  if (high && !wide) return Region::NadirView;
  if (high && wide) return Region::SmallTarget;
  return Region::EyeLevelView;
}

RegionSplits default_splits(const std::vector<double>& altitudes, const std::vector<double>& radii) {
  RegionSplits s;
  if (!altitudes.empty()) {
    const auto [lo, hi] = std::minmax_element(altitudes.begin(), altitudes.end());
    s.altitude_split_m = 0.5 * (*lo + *hi);
  }
  if (!radii.empty()) {
    const auto [lo, hi] = std::minmax_element(radii.begin(), radii.end());
    s.radius_split_m = 0.5 * (*lo + *hi);
  }
  return s;
}

std::string_view to_string(ViewScope scope) {
  switch (scope) {
    case ViewScope::All:
      return "all";
    case ViewScope::Nadir:
      return "nadir";
    case ViewScope::OutsideNadir:
      return "outside_nadir";
  }
  return "unknown";
}

std::string_view to_string(HistogramMode mode) {
  return mode == HistogramMode::TruePositives ? "true_positives" : "raw_detections";
}

HistogramMode histogram_mode_from_string(std::string_view name) {
  if (name == "true_positives") return HistogramMode::TruePositives;
  if (name == "raw_detections") return HistogramMode::RawDetections;
  throw ConfigError("histogram_mode", "expected true_positives or raw_detections");
}

std::int64_t AngularHistogram::total() const {
  return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
}

namespace {

std::size_t bin_count(double bin_width_deg) {
  if (!(bin_width_deg > 0.0) || !std::isfinite(bin_width_deg))
    throw ConfigError("bin_width_deg", "must be > 0");
  const double bins = 360.0 / bin_width_deg;
  const double rounded = std::round(bins);
  if (std::fabs(bins - rounded) > 1e-9 || rounded < 1.0)
    throw ConfigError("bin_width_deg", "must divide 360");
  return static_cast<std::size_t>(rounded);
}

}  // namespace

AngularHistogram angular_histogram(const MatchedSet& matched, double bin_width_deg,
                                   const HistogramFilter& filter) {
  AngularHistogram hist;
  hist.bin_width_deg = bin_width_deg;
  const std::size_t bins = bin_count(bin_width_deg);
  hist.counts.assign(bins, 0);

  for (std::size_t p = 0; p < matched.predictions.size(); ++p) {
    if (filter.mode == HistogramMode::TruePositives && !matched.match.true_positive[p]) continue;
    const FrameMeta& m = matched.frames.at(matched.predictions[p].frame_id);
    if (filter.sun && m.sun != *filter.sun) continue;
    if (filter.cell && (m.altitude_m != filter.cell->first || m.radius_m != filter.cell->second))
      continue;
    if (filter.scope != ViewScope::All) {
      const bool nadir =
          classify_region(m.altitude_m, m.radius_m, filter.splits) == Region::NadirView;
      if ((filter.scope == ViewScope::Nadir) != nadir) continue;
    }
    auto bin = static_cast<std::size_t>(std::floor(wrap_degrees(m.azimuth_deg) / bin_width_deg));
    bin = std::min(bin, bins - 1);
    ++hist.counts[bin];
  }
  return hist;
}

BoundaryMap boundary_map(const APGrid& grid, double tau) {
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau", "must lie in (0, 1)");
  if (!mean_defined(grid.cells)) throw Error("boundary_map: grid has no defined cells");

  BoundaryMap out;
  out.tau = tau;
  const std::size_t rows = grid.altitudes.size();
  const std::size_t cols = grid.radii.size();
  const auto below = [&](std::ptrdiff_t i, std::ptrdiff_t j) {
    if (i < 0 || j < 0 || i >= static_cast<std::ptrdiff_t>(rows) ||
        j >= static_cast<std::ptrdiff_t>(cols))
      return false;
    const auto& c = grid.at(static_cast<std::size_t>(i), static_cast<std::size_t>(j));
    return c.has_value() && *c < tau;
  };
  for (std::size_t i = 0; i < rows; ++i) {
    EnvelopeRow row{grid.altitudes[i], std::nullopt};
    for (std::size_t j = 0; j < cols; ++j) {
      const auto& c = grid.at(i, j);
      if (!c || *c < tau) continue;
      if (!row.min_radius_m) row.min_radius_m = grid.radii[j];
      const auto si = static_cast<std::ptrdiff_t>(i);
      const auto sj = static_cast<std::ptrdiff_t>(j);
      if (below(si - 1, sj) || below(si + 1, sj) || below(si, sj - 1) || below(si, sj + 1))
        out.cells.emplace_back(grid.altitudes[i], grid.radii[j]);
    }
    out.envelope.push_back(row);
  }
  return out;
}

std::vector<PredictionRecord> oracle_detect(const annotate::TrialAnnotations& annotations,
                                            std::int64_t min_pixels) {
  if (min_pixels < 1) throw ConfigError("min_pixels", "must be >= 1");
  std::vector<PredictionRecord> out;
  for (const auto& r : annotations.frames) {
    if (r.pixel_count < min_pixels) continue;
    const double score = std::min(
        1.0, static_cast<double>(r.pixel_count) / (4.0 * static_cast<double>(min_pixels)));
    out.push_back({r.frame_id, to_pixel_box(r.bbox), score, r.object_label});
  }
  std::stable_sort(out.begin(), out.end(),
                   [](const auto& a, const auto& b) { return a.frame_id < b.frame_id; });
  return out;
}

// ---------------------------------------------------------------------------
// Prediction files

std::string predictions_to_json_string(const std::vector<PredictionRecord>& predictions) {
  json doc;
  doc["predictions"] = json::array();
  for (const auto& p : predictions) {
    doc["predictions"].push_back(
        {{"frame_id", p.frame_id},
         {"bbox", {p.bbox.x_min, p.bbox.y_min, p.bbox.width, p.bbox.height}},
         {"score", p.score},
         {"label", p.label}});
  }
  return doc.dump(1) + "\n";
}

void write_predictions(const std::vector<PredictionRecord>& predictions,
                       const std::filesystem::path& path) {
  io::write_file_atomic(path, predictions_to_json_string(predictions));
}

std::vector<PredictionRecord> parse_predictions(const std::string& text,
                                                const std::set<std::string>* universe) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    const std::size_t upto = std::min<std::size_t>(e.byte, text.size());
    const auto line = 1 + std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(upto), '\n');
    throw ParseError("predictions: malformed JSON near line " + std::to_string(line) + ": " +
                     e.what());
  }
  using namespace detail;
  const std::string ctx = "predictions";
  reject_unknown(doc, {"predictions"}, ctx);
  const json& list = require(doc, "predictions", ctx);
  if (!list.is_array()) fail(ctx + ".predictions", "expected an array");

  std::vector<PredictionRecord> out;
  out.reserve(list.size());
  for (std::size_t i = 0; i < list.size(); ++i) {
    const std::string rctx = "predictions[" + std::to_string(i) + "]";
    const json& j = list[i];
    reject_unknown(j, {"frame_id", "bbox", "score", "label"}, rctx);
    PredictionRecord p;
    p.frame_id = string(require(j, "frame_id", rctx), rctx + ".frame_id");
    if (p.frame_id.empty()) fail(rctx + ".frame_id", "must be non-empty");
    const json& bbox = require(j, "bbox", rctx);
    if (!bbox.is_array() || bbox.size() != 4) fail(rctx + ".bbox", "expected [x_min, y_min, w, h]");
    p.bbox.x_min = number(bbox[0], rctx + ".bbox[0]");
    p.bbox.y_min = number(bbox[1], rctx + ".bbox[1]");
    p.bbox.width = number(bbox[2], rctx + ".bbox[2]");
    p.bbox.height = number(bbox[3], rctx + ".bbox[3]");
    if (!(p.bbox.width > 0.0 && p.bbox.height > 0.0))
      fail(rctx + ".bbox", "width and height must be > 0");
    p.score = number(require(j, "score", rctx), rctx + ".score");
    if (!(p.score >= 0.0 && p.score <= 1.0)) fail(rctx + ".score", "must lie in [0, 1]");
    p.label = string(require(j, "label", rctx), rctx + ".label");
    out.push_back(std::move(p));
  }

  if (universe) {
    std::vector<std::string> unknown;
    for (const auto& p : out) {
      if (!universe->contains(p.frame_id)) unknown.push_back(p.frame_id);
    }
    if (!unknown.empty()) {
      std::sort(unknown.begin(), unknown.end());
      unknown.erase(std::unique(unknown.begin(), unknown.end()), unknown.end());
      std::string msg = "predictions reference unknown frame ids:";
      for (std::size_t i = 0; i < unknown.size() && i < 20; ++i) msg += " " + unknown[i];
      throw UnknownFrameError(std::move(unknown), msg);
    }
  }
  return out;
}

std::vector<PredictionRecord> ingest_predictions(const std::filesystem::path& path,
                                                 const std::set<std::string>* universe) {
  return parse_predictions(io::read_file(path), universe);
}

// ---------------------------------------------------------------------------
// Whole-trial evaluation

void EvalSettings::validate() const {
  if (!(iou_threshold > 0.0 && iou_threshold <= 1.0))
    throw ConfigError("iou_threshold", "must lie in (0, 1]");
  if (!(tau > 0.0 && tau < 1.0)) throw ConfigError("tau", "must lie in (0, 1)");
  bin_count(bin_width_deg);
  if (splits && (!std::isfinite(splits->altitude_split_m) || !std::isfinite(splits->radius_split_m)))
    throw ConfigError("region_splits", "must be finite");
}

EvaluationResults evaluate(const annotate::TrialAnnotations& annotations,
                           std::vector<PredictionRecord> predictions, const EvalSettings& settings) {
  settings.validate();
  const MatchedSet matched = match_trial(annotations, std::move(predictions), settings.iou_threshold);

  EvaluationResults results;
  results.settings = settings;

  std::set<SunCondition> suns;
  for (const auto& [id, meta] : matched.frames) suns.insert(meta.sun);
  std::vector<std::optional<SunCondition>> scopes{std::nullopt};
  for (SunCondition s : suns) scopes.emplace_back(s);

  for (const auto& sun : scopes) {
    GridResult g;
    g.grid = bin_by_height_radius(matched, sun, settings.ap_mode);
    if (g.grid.map_value) g.boundary = boundary_map(g.grid, settings.tau);
    results.grids.push_back(std::move(g));
  }
  const APGrid& pooled = results.grids.front().grid;
  results.splits = settings.splits.value_or(default_splits(pooled.altitudes, pooled.radii));

  for (double h : pooled.altitudes) {
    for (double r : pooled.radii) {
      results.regions.push_back({h, r, classify_region(h, r, results.splits)});
    }
  }

  for (const auto& sun : scopes) {
    for (ViewScope scope : {ViewScope::All, ViewScope::Nadir, ViewScope::OutsideNadir}) {
      HistogramFilter filter;
      filter.sun = sun;
      filter.scope = scope;
      filter.splits = results.splits;
      filter.mode = settings.histogram_mode;
      results.histograms.push_back(
          {sun, scope, std::nullopt, angular_histogram(matched, settings.bin_width_deg, filter)});
    }
  }
  for (double h : pooled.altitudes) {
    for (double r : pooled.radii) {
      HistogramFilter filter;
      filter.cell = std::make_pair(h, r);
      filter.splits = results.splits;
      filter.mode = settings.histogram_mode;
      results.histograms.push_back({std::nullopt, ViewScope::All, filter.cell,
                                    angular_histogram(matched, settings.bin_width_deg, filter)});
    }
  }

  results.ground_truths = static_cast<std::int64_t>(matched.ground_truths.size());
  for (bool tp : matched.match.true_positive) {
    if (tp) {
      ++results.true_positives;
    } else {
      ++results.false_positives;
    }
  }
  return results;
}

namespace {

std::string sun_label(const std::optional<SunCondition>& sun) {
  return sun ? std::string(to_string(*sun)) : std::string("all");
}

json optional_number(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

json to_json(const EvaluationResults& results) {
  json doc;
  doc["settings"] = {{"iou_threshold", results.settings.iou_threshold},
                     {"tau", results.settings.tau},
                     {"bin_width_deg", results.settings.bin_width_deg},
                     {"ap_mode", std::string(to_string(results.settings.ap_mode))},
                     {"histogram_mode", std::string(to_string(results.settings.histogram_mode))},
                     {"altitude_split_m", results.splits.altitude_split_m},
                     {"radius_split_m", results.splits.radius_split_m}};

  json grids = json::array();
  json map_by_sun = json::object();
  for (const auto& g : results.grids) {
    json ap = json::array();
    for (std::size_t i = 0; i < g.grid.altitudes.size(); ++i) {
      json row = json::array();
      for (std::size_t j = 0; j < g.grid.radii.size(); ++j) row.push_back(optional_number(g.grid.at(i, j)));
      ap.push_back(std::move(row));
    }
    json boundary = nullptr;
    if (g.boundary) {
      json cells = json::array();
      for (const auto& [h, r] : g.boundary->cells) cells.push_back({h, r});
      json envelope = json::array();
      for (const auto& row : g.boundary->envelope) {
        envelope.push_back({{"altitude_m", row.altitude_m},
                            {"min_radius_m", optional_number(row.min_radius_m)}});
      }
      boundary = {{"tau", g.boundary->tau}, {"cells", cells}, {"envelope", envelope}};
    }
    grids.push_back({{"sun", sun_label(g.grid.sun)},
                     {"altitudes_m", g.grid.altitudes},
                     {"radii_m", g.grid.radii},
                     {"ap", std::move(ap)},
                     {"map", optional_number(g.grid.map_value)},
                     {"boundary", std::move(boundary)}});
    map_by_sun[sun_label(g.grid.sun)] = optional_number(g.grid.map_value);
  }
  doc["grids"] = std::move(grids);

  json regions = json::array();
  for (const auto& r : results.regions) {
    regions.push_back({{"altitude_m", r.altitude_m},
                       {"radius_m", r.radius_m},
                       {"region", std::string(to_string(r.region))}});
  }
  doc["regions"] = std::move(regions);

  json histograms = json::array();
  for (const auto& h : results.histograms) {
    json cell = nullptr;
    if (h.cell) cell = {h.cell->first, h.cell->second};
    histograms.push_back({{"sun", sun_label(h.sun)},
                          {"scope", std::string(to_string(h.scope))},
                          {"cell", std::move(cell)},
                          {"bin_width_deg", h.histogram.bin_width_deg},
                          {"counts", h.histogram.counts}});
  }
  doc["histograms"] = std::move(histograms);

  doc["summary"] = {{"ground_truths", results.ground_truths},
                    {"true_positives", results.true_positives},
                    {"false_positives", results.false_positives},
                    {"map_by_sun", std::move(map_by_sun)}};
  return doc;
}

std::string results_to_json_string(const EvaluationResults& results) {
  return to_json(results).dump(1) + "\n";
}

namespace {

std::optional<SunCondition> parse_sun_scope(const json& v, const std::string& ctx) {
  const std::string name = detail::string(v, ctx);
  if (name == "all") return std::nullopt;
  try {
    return sun_condition_from_string(name);
  } catch (const ConfigError&) {
    throw SchemaError(ctx + ": unknown sun condition '" + name + "'");
  }
}

std::optional<double> parse_optional_number(const json& v, const std::string& ctx) {
  if (v.is_null()) return std::nullopt;
  return detail::number(v, ctx);
}

std::vector<double> parse_number_array(const json& v, const std::string& ctx) {
  if (!v.is_array()) detail::fail(ctx, "expected an array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(detail::number(v[i], ctx + "[" + std::to_string(i) + "]"));
  return out;
}

ViewScope parse_scope(const std::string& name, const std::string& ctx) {
  for (ViewScope s : {ViewScope::All, ViewScope::Nadir, ViewScope::OutsideNadir}) {
    if (to_string(s) == name) return s;
  }
  throw SchemaError(ctx + ": unknown scope '" + name + "'");
}

Region parse_region(const std::string& name, const std::string& ctx) {
  for (Region r : {Region::LargeTarget, Region::NadirView, Region::SmallTarget, Region::EyeLevelView}) {
    if (to_string(r) == name) return r;
  }
  throw SchemaError(ctx + ": unknown region '" + name + "'");
}

}  // namespace

EvaluationResults results_from_json_string(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("results: ") + e.what());
  }
  using namespace detail;
  const std::string ctx = "results";
  reject_unknown(doc, {"settings", "grids", "regions", "histograms", "summary"}, ctx);

  EvaluationResults out;
  {
    const json& s = require(doc, "settings", ctx);
    const std::string sctx = ctx + ".settings";
    reject_unknown(s, {"iou_threshold", "tau", "bin_width_deg", "ap_mode", "histogram_mode",
                       "altitude_split_m", "radius_split_m"},
                   sctx);
    out.settings.iou_threshold = number(require(s, "iou_threshold", sctx), sctx + ".iou_threshold");
    out.settings.tau = number(require(s, "tau", sctx), sctx + ".tau");
    out.settings.bin_width_deg = number(require(s, "bin_width_deg", sctx), sctx + ".bin_width_deg");
    try {
      out.settings.ap_mode = ap_mode_from_string(string(require(s, "ap_mode", sctx), sctx + ".ap_mode"));
      out.settings.histogram_mode = histogram_mode_from_string(
          string(require(s, "histogram_mode", sctx), sctx + ".histogram_mode"));
    } catch (const ConfigError& e) {
      throw SchemaError(sctx + ": " + e.what());
    }
    out.splits.altitude_split_m = number(require(s, "altitude_split_m", sctx), sctx + ".altitude_split_m");
    out.splits.radius_split_m = number(require(s, "radius_split_m", sctx), sctx + ".radius_split_m");
    out.settings.splits = out.splits;
  }

  const json& grids = require(doc, "grids", ctx);
  if (!grids.is_array() || grids.empty()) fail(ctx + ".grids", "expected a non-empty array");
  for (std::size_t gi = 0; gi < grids.size(); ++gi) {
    const std::string gctx = ctx + ".grids[" + std::to_string(gi) + "]";
    const json& g = grids[gi];
    reject_unknown(g, {"sun", "altitudes_m", "radii_m", "ap", "map", "boundary"}, gctx);
    GridResult gr;
    gr.grid.sun = parse_sun_scope(require(g, "sun", gctx), gctx + ".sun");
    gr.grid.altitudes = parse_number_array(require(g, "altitudes_m", gctx), gctx + ".altitudes_m");
    gr.grid.radii = parse_number_array(require(g, "radii_m", gctx), gctx + ".radii_m");
    const json& ap = require(g, "ap", gctx);
    if (!ap.is_array() || ap.size() != gr.grid.altitudes.size())
      fail(gctx + ".ap", "row count does not match altitudes_m");
    for (std::size_t i = 0; i < ap.size(); ++i) {
      if (!ap[i].is_array() || ap[i].size() != gr.grid.radii.size())
        fail(gctx + ".ap[" + std::to_string(i) + "]", "column count does not match radii_m");
      for (std::size_t j = 0; j < ap[i].size(); ++j) {
        const auto cell = parse_optional_number(
            ap[i][j], gctx + ".ap[" + std::to_string(i) + "][" + std::to_string(j) + "]");
        if (cell && !(*cell >= 0.0 && *cell <= 1.0)) fail(gctx + ".ap", "values must lie in [0, 1]");
        gr.grid.cells.push_back(cell);
      }
    }
    gr.grid.map_value = parse_optional_number(require(g, "map", gctx), gctx + ".map");
    const json& b = require(g, "boundary", gctx);
    if (!b.is_null()) {
      const std::string bctx = gctx + ".boundary";
      reject_unknown(b, {"tau", "cells", "envelope"}, bctx);
      BoundaryMap bm;
      bm.tau = number(require(b, "tau", bctx), bctx + ".tau");
      const json& cells = require(b, "cells", bctx);
      if (!cells.is_array()) fail(bctx + ".cells", "expected an array");
      for (const auto& c : cells) {
        const auto pair = parse_number_array(c, bctx + ".cells");
        if (pair.size() != 2) fail(bctx + ".cells", "expected [altitude, radius]");
        bm.cells.emplace_back(pair[0], pair[1]);
      }
      const json& env = require(b, "envelope", bctx);
      if (!env.is_array()) fail(bctx + ".envelope", "expected an array");
      for (const auto& row : env) {
        reject_unknown(row, {"altitude_m", "min_radius_m"}, bctx + ".envelope");
        bm.envelope.push_back(
            {number(require(row, "altitude_m", bctx), bctx + ".envelope.altitude_m"),
             parse_optional_number(require(row, "min_radius_m", bctx), bctx + ".envelope.min_radius_m")});
      }
      gr.boundary = std::move(bm);
    }
    out.grids.push_back(std::move(gr));
  }

  const json& regions = require(doc, "regions", ctx);
  if (!regions.is_array()) fail(ctx + ".regions", "expected an array");
  for (const auto& r : regions) {
    const std::string rctx = ctx + ".regions";
    reject_unknown(r, {"altitude_m", "radius_m", "region"}, rctx);
    out.regions.push_back({number(require(r, "altitude_m", rctx), rctx + ".altitude_m"),
                           number(require(r, "radius_m", rctx), rctx + ".radius_m"),
                           parse_region(string(require(r, "region", rctx), rctx + ".region"), rctx)});
  }

  const json& hists = require(doc, "histograms", ctx);
  if (!hists.is_array()) fail(ctx + ".histograms", "expected an array");
  for (std::size_t hi = 0; hi < hists.size(); ++hi) {
    const std::string hctx = ctx + ".histograms[" + std::to_string(hi) + "]";
    const json& h = hists[hi];
    reject_unknown(h, {"sun", "scope", "cell", "bin_width_deg", "counts"}, hctx);
    HistogramResult hr;
    hr.sun = parse_sun_scope(require(h, "sun", hctx), hctx + ".sun");
    hr.scope = parse_scope(string(require(h, "scope", hctx), hctx + ".scope"), hctx);
    const json& cell = require(h, "cell", hctx);
    if (!cell.is_null()) {
      const auto pair = parse_number_array(cell, hctx + ".cell");
      if (pair.size() != 2) fail(hctx + ".cell", "expected [altitude, radius]");
      hr.cell = std::make_pair(pair[0], pair[1]);
    }
    hr.histogram.bin_width_deg = number(require(h, "bin_width_deg", hctx), hctx + ".bin_width_deg");
    const json& counts = require(h, "counts", hctx);
    if (!counts.is_array()) fail(hctx + ".counts", "expected an array");
    for (const auto& c : counts) {
      const std::int64_t v = integer(c, hctx + ".counts");
      if (v < 0) fail(hctx + ".counts", "must be >= 0");
      hr.histogram.counts.push_back(v);
    }
    try {
      if (bin_count(hr.histogram.bin_width_deg) != hr.histogram.counts.size())
        fail(hctx + ".counts", "length does not match bin_width_deg");
    } catch (const ConfigError& e) {
      throw SchemaError(hctx + ": " + e.what());
    }
    out.histograms.push_back(std::move(hr));
  }

  const json& summary = require(doc, "summary", ctx);
  const std::string sctx = ctx + ".summary";
  reject_unknown(summary, {"ground_truths", "true_positives", "false_positives", "map_by_sun"}, sctx);
  out.ground_truths = integer(require(summary, "ground_truths", sctx), sctx + ".ground_truths");
  out.true_positives = integer(require(summary, "true_positives", sctx), sctx + ".true_positives");
  out.false_positives = integer(require(summary, "false_positives", sctx), sctx + ".false_positives");
  require(summary, "map_by_sun", sctx);
  return out;
}

}  // namespace orbitbench::eval
