// Detector evaluation: IoU matching, average precision, AP surfaces over
// (altitude, radius), angular histograms, view-region classification and
// degradation boundaries.
#pragma once

#include "orbitbench/annotate.hpp"
#include "orbitbench/core.hpp"

#include <nlohmann/json_fwd.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace orbitbench::eval {

// Corner-form box in pixel units: covers [x_min, x_min + width) x
// [y_min, y_min + height).
struct PixelBox {
  double x_min = 0.0;
  double y_min = 0.0;
  double width = 0.0;
  double height = 0.0;

  friend bool operator==(const PixelBox&, const PixelBox&) = default;
};

// Ground-truth box covering whole pixels: the leftmost column index is
// center_x - (width - 1) / 2.
PixelBox to_pixel_box(const annotate::CenterBox& box);

struct PredictionRecord {
  std::string frame_id;
  PixelBox bbox;
  double score = 0.0;
  std::string label;

  friend bool operator==(const PredictionRecord&, const PredictionRecord&) = default;
};

struct GroundTruth {
  std::string frame_id;
  std::string label;
  PixelBox bbox;
};

// Throws SchemaError for non-positive extents.
double iou(const PixelBox& a, const PixelBox& b);

struct MatchResult {
  std::vector<std::size_t> order;      // prediction indices, descending score
  std::vector<bool> true_positive;     // per prediction, input order
  std::vector<std::ptrdiff_t> matched_gt;  // per prediction, -1 when unmatched
  std::vector<bool> gt_matched;        // per ground truth
};

// Greedy one-to-one matching in descending score order, ties broken by input
// order. Throws UnknownFrameError listing predictions whose frame is not in
// frame_universe.
MatchResult match_predictions(std::span<const PredictionRecord> predictions,
                              std::span<const GroundTruth> ground_truths,
                              const std::set<std::string>& frame_universe,
                              double iou_threshold = 0.5);

enum class ApMode { AllPoint, ElevenPoint };

std::string_view to_string(ApMode mode);
ApMode ap_mode_from_string(std::string_view name);

// TP/FP flags in descending-score order. nullopt when n_gt is zero.
std::optional<double> average_precision(const std::vector<bool>& flags_in_score_order,
                                        std::size_t n_gt, ApMode mode = ApMode::AllPoint);

struct FrameMeta {
  double altitude_m = 0.0;
  double radius_m = 0.0;
  double azimuth_deg = 0.0;
  SunCondition sun = SunCondition::Noon;
};

// Annotations and predictions matched once; every aggregate below is a view
// over this.
struct MatchedSet {
  std::map<std::string, FrameMeta> frames;
  std::vector<GroundTruth> ground_truths;
  std::vector<std::string> gt_frame;  // frame id per ground truth
  std::vector<PredictionRecord> predictions;
  MatchResult match;
};

MatchedSet match_trial(const annotate::TrialAnnotations& annotations,
                       std::vector<PredictionRecord> predictions, double iou_threshold = 0.5);

struct APGrid {
  std::optional<SunCondition> sun;  // nullopt pools all conditions
  std::vector<double> altitudes;    // sorted ascending
  std::vector<double> radii;        // sorted ascending
  std::vector<std::optional<double>> cells;  // row-major [altitude][radius]
  std::optional<double> map_value;

  const std::optional<double>& at(std::size_t altitude_index, std::size_t radius_index) const {
    return cells[altitude_index * radii.size() + radius_index];
  }
};

// Mean of the defined cells, nullopt when none are defined.
std::optional<double> mean_defined(const std::vector<std::optional<double>>& cells);

APGrid bin_by_height_radius(const MatchedSet& matched, std::optional<SunCondition> sun_filter,
                            ApMode mode = ApMode::AllPoint);

enum class Region { LargeTarget, NadirView, SmallTarget, EyeLevelView };

std::string_view to_string(Region region);

struct RegionSplits {
  double altitude_split_m = 27.5;
  double radius_split_m = 17.5;
};

Region classify_region(double altitude_m, double radius_m, const RegionSplits& splits);

// Midpoints of the altitude and radius ranges.
RegionSplits default_splits(const std::vector<double>& altitudes, const std::vector<double>& radii);

enum class ViewScope { All, Nadir, OutsideNadir };
enum class HistogramMode { TruePositives, RawDetections };

std::string_view to_string(ViewScope scope);
std::string_view to_string(HistogramMode mode);
HistogramMode histogram_mode_from_string(std::string_view name);

struct HistogramFilter {
  std::optional<SunCondition> sun;
  std::optional<std::pair<double, double>> cell;  // (altitude, radius)
  ViewScope scope = ViewScope::All;
  RegionSplits splits;
  HistogramMode mode = HistogramMode::TruePositives;
};

struct AngularHistogram {
  double bin_width_deg = 10.0;
  std::vector<std::int64_t> counts;

  std::int64_t total() const;
};

// Counts positive detections per camera azimuth bin. Throws ConfigError
// unless bin_width_deg divides 360.
AngularHistogram angular_histogram(const MatchedSet& matched, double bin_width_deg,
                                   const HistogramFilter& filter = {});

struct EnvelopeRow {
  double altitude_m = 0.0;
  std::optional<double> min_radius_m;  // smallest radius with AP >= tau
};

struct BoundaryMap {
  double tau = 0.5;
  std::vector<std::pair<double, double>> cells;  // (altitude, radius)
  std::vector<EnvelopeRow> envelope;
};

// Cells with AP >= tau that have a 4-neighbour below tau. Throws ConfigError
// for tau outside (0, 1) and Error when no cell is defined.
BoundaryMap boundary_map(const APGrid& grid, double tau);

// Synthetic detector: returns each ground-truth box whose pixel count
// reaches min_pixels, scored min(1, pixel_count / (4 * min_pixels)).
std::vector<PredictionRecord> oracle_detect(const annotate::TrialAnnotations& annotations,
                                            std::int64_t min_pixels);

// Prediction document: {"predictions": [{"frame_id", "bbox": [x_min, y_min,
// w, h], "score", "label"}, ...]}.
std::string predictions_to_json_string(const std::vector<PredictionRecord>& predictions);
void write_predictions(const std::vector<PredictionRecord>& predictions,
                       const std::filesystem::path& path);

// Throws ParseError (with line), SchemaError (with record index) or, when a
// universe is given, UnknownFrameError.
std::vector<PredictionRecord> parse_predictions(const std::string& text,
                                                const std::set<std::string>* frame_universe = nullptr);
std::vector<PredictionRecord> ingest_predictions(const std::filesystem::path& path,
                                                 const std::set<std::string>* frame_universe = nullptr);

std::set<std::string> frame_universe(const annotate::TrialAnnotations& annotations);

// ---------------------------------------------------------------------------
// Full evaluation of one trial, as written by the `evaluate` command.

struct EvalSettings {
  double iou_threshold = 0.5;
  double tau = 0.5;
  std::optional<RegionSplits> splits;  // defaults to range midpoints
  double bin_width_deg = 10.0;
  ApMode ap_mode = ApMode::AllPoint;
  HistogramMode histogram_mode = HistogramMode::TruePositives;

  void validate() const;
};

struct GridResult {
  APGrid grid;
  std::optional<BoundaryMap> boundary;
};

struct HistogramResult {
  std::optional<SunCondition> sun;
  ViewScope scope = ViewScope::All;
  std::optional<std::pair<double, double>> cell;
  AngularHistogram histogram;
};

struct RegionCell {
  double altitude_m = 0.0;
  double radius_m = 0.0;
  Region region = Region::LargeTarget;
};

struct EvaluationResults {
  EvalSettings settings;
  RegionSplits splits;
  std::vector<GridResult> grids;  // pooled first, then one per sun condition
  std::vector<RegionCell> regions;
  std::vector<HistogramResult> histograms;
  std::int64_t ground_truths = 0;
  std::int64_t true_positives = 0;
  std::int64_t false_positives = 0;
};

EvaluationResults evaluate(const annotate::TrialAnnotations& annotations,
                           std::vector<PredictionRecord> predictions, const EvalSettings& settings);

nlohmann::json to_json(const EvaluationResults& results);
std::string results_to_json_string(const EvaluationResults& results);
// Throws ParseError or SchemaError.
EvaluationResults results_from_json_string(const std::string& text);

}  // namespace orbitbench::eval
