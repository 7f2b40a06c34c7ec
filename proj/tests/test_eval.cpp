#include <doctest.h>

#include "oracles.hpp"
#include "orbitbench/annotate.hpp"
#include "orbitbench/eval.hpp"
#include "orbitbench/geometry.hpp"
#include "orbitbench/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>

using namespace orbitbench;
using namespace orbitbench::eval;

namespace {

annotate::AnnotationRecord record(double h, double r, double az, std::int64_t pixels = 400,
                                  SunCondition sun = SunCondition::Noon) {
  annotate::AnnotationRecord rec;
  rec.frame_id = geometry::make_frame_id("t", static_cast<int>(sun), h, r, az);
  rec.object_id = 1;
  rec.object_label = "person";
  rec.label_category = "human";
  rec.bbox = {255.5, 255.5, 20.0, 40.0};
  rec.camera_altitude_m = h;
  rec.radius_m = r;
  rec.azimuth_deg = az;
  rec.sun = sun;
  rec.pixel_count = pixels;
  return rec;
}

PredictionRecord pred(const std::string& frame, PixelBox box, double score,
                      const std::string& label = "person") {
  return {frame, box, score, label};
}

struct Instance {
  std::vector<PredictionRecord> preds;
  std::vector<GroundTruth> gts;
  std::set<std::string> universe;
};

Instance random_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> n_gt_d(0, 10);
  std::uniform_int_distribution<int> n_pred_d(0, 20);
  std::uniform_int_distribution<int> frame_d(0, 2);
  std::uniform_int_distribution<int> label_d(0, 1);
  std::uniform_real_distribution<double> pos(0.0, 40.0);
  std::uniform_real_distribution<double> size(4.0, 20.0);
  std::uniform_real_distribution<double> jitter(-4.0, 4.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  const std::string frames[] = {"f0", "f1", "f2"};
  const std::string labels[] = {"person", "car"};

  Instance inst;
  for (const auto& f : frames) inst.universe.insert(f);
  const int n_gt = n_gt_d(rng);
  for (int i = 0; i < n_gt; ++i) {
    inst.gts.push_back({frames[frame_d(rng)], labels[label_d(rng)], {pos(rng), pos(rng), size(rng), size(rng)}});
  }
  const int n_pred = n_pred_d(rng);
  for (int i = 0; i < n_pred; ++i) {
    PredictionRecord p;
    if (!inst.gts.empty() && unit(rng) < 0.7) {
      const auto& g = inst.gts[static_cast<std::size_t>(rng() % inst.gts.size())];
      p.frame_id = g.frame_id;
      p.label = unit(rng) < 0.9 ? g.label : labels[label_d(rng)];
      p.bbox = {g.bbox.x_min + jitter(rng), g.bbox.y_min + jitter(rng),
                std::max(1.0, g.bbox.width + jitter(rng)), std::max(1.0, g.bbox.height + jitter(rng))};
    } else {
      p.frame_id = frames[frame_d(rng)];
      p.label = labels[label_d(rng)];
      p.bbox = {pos(rng), pos(rng), size(rng), size(rng)};
    }
    // Coarse scores so ties occur.
    p.score = std::round(unit(rng) * 20.0) / 20.0;
    inst.preds.push_back(p);
  }
  return inst;
}

std::vector<oracle::Det> to_dets(const std::vector<PredictionRecord>& preds) {
  std::vector<oracle::Det> out;
  for (const auto& p : preds) {
    out.push_back({p.frame_id, p.label, {p.bbox.x_min, p.bbox.y_min, p.bbox.width, p.bbox.height}, p.score});
  }
  return out;
}

std::vector<oracle::Gt> to_gts(const std::vector<GroundTruth>& gts) {
  std::vector<oracle::Gt> out;
  for (const auto& g : gts) out.push_back({g.frame_id, g.label, {g.bbox.x_min, g.bbox.y_min, g.bbox.width, g.bbox.height}});
  return out;
}

std::vector<bool> flags_in_order(const MatchResult& m) {
  std::vector<bool> out;
  for (std::size_t i : m.order) out.push_back(m.true_positive[i]);
  return out;
}

// Oracle flags ordered by descending score, ties by input order.
std::vector<bool> oracle_flags_in_order(const std::vector<PredictionRecord>& preds, const std::vector<bool>& tp) {
  std::vector<std::size_t> order(preds.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return preds[a].score > preds[b].score; });
  std::vector<bool> out;
  for (std::size_t i : order) out.push_back(tp[i]);
  return out;
}

double ap_of(const Instance& inst, double thr = 0.5) {
  const auto m = match_predictions(inst.preds, inst.gts, inst.universe, thr);
  return average_precision(flags_in_order(m), inst.gts.size()).value_or(0.0);
}

APGrid grid_of(std::vector<double> altitudes, std::vector<double> radii, std::vector<std::optional<double>> cells) {
  APGrid g;
  g.altitudes = std::move(altitudes);
  g.radii = std::move(radii);
  g.cells = std::move(cells);
  g.map_value = mean_defined(g.cells);
  return g;
}

}  // namespace

TEST_SUITE("eval") {

TEST_CASE("iou examples") {
  const PixelBox a{0, 0, 2, 2};
  CHECK(iou(a, a) == doctest::Approx(1.0));
  CHECK(iou(a, {5, 5, 2, 2}) == 0.0);
  CHECK(iou(a, {2, 0, 2, 2}) == 0.0);
  CHECK(iou(a, {1, 1, 2, 2}) == doctest::Approx(1.0 / 7.0).epsilon(1e-12));
  CHECK(iou(a, {1, 1, 2, 2}) == doctest::Approx(0.142857).epsilon(1e-6));
  CHECK_THROWS_AS(iou(a, {0, 0, 0, 2}), SchemaError);
  CHECK_THROWS_AS(iou({0, 0, 2, -1}, a), SchemaError);
}

TEST_CASE("iou agrees with the area oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> pos(-10.0, 10.0);
  std::uniform_real_distribution<double> size(0.5, 12.0);
  for (int i = 0; i < 2000; ++i) {
    const PixelBox a{pos(rng), pos(rng), size(rng), size(rng)};
    const PixelBox b{pos(rng), pos(rng), size(rng), size(rng)};
    const double v = iou(a, b);
    CHECK(v == doctest::Approx(oracle::box_iou({a.x_min, a.y_min, a.width, a.height},
                                                {b.x_min, b.y_min, b.width, b.height}))
                   .epsilon(1e-12));
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
    CHECK(v == doctest::Approx(iou(b, a)).epsilon(1e-15));
  }
}

TEST_CASE("ground-truth boxes cover whole pixels") {
  const PixelBox b = to_pixel_box({99.5, 149.5, 100.0, 100.0});
  CHECK(b == PixelBox{50.0, 100.0, 100.0, 100.0});
  const PixelBox single = to_pixel_box({10.0, 20.0, 1.0, 1.0});
  CHECK(single == PixelBox{10.0, 20.0, 1.0, 1.0});
}

TEST_CASE("matching examples") {
  const std::set<std::string> universe{"f"};
  const std::vector<GroundTruth> gt{{"f", "person", {0, 0, 10, 10}}};

  SUBCASE("iou 0.6 is a true positive") {
    // 10x10 against 10x6 inside it: 60 / 100.
    const std::vector<PredictionRecord> p{pred("f", {0, 0, 10, 6}, 0.7)};
    CHECK(iou(p[0].bbox, gt[0].bbox) == doctest::Approx(0.6));
    const auto m = match_predictions(p, gt, universe);
    CHECK(m.true_positive == std::vector<bool>{true});
    CHECK(m.gt_matched == std::vector<bool>{true});
    CHECK(m.matched_gt == std::vector<std::ptrdiff_t>{0});
  }
  SUBCASE("two predictions on one ground truth") {
    const std::vector<PredictionRecord> p{pred("f", {0, 0, 10, 9}, 0.8), pred("f", {0, 0, 10, 10}, 0.9)};
    const auto m = match_predictions(p, gt, universe);
    CHECK(m.order == std::vector<std::size_t>{1, 0});
    CHECK(m.true_positive == std::vector<bool>{false, true});
    CHECK(m.matched_gt == std::vector<std::ptrdiff_t>{-1, 0});
  }
  SUBCASE("iou 0.49 is a false positive") {
    const std::vector<PredictionRecord> p{pred("f", {0, 0, 10, 4.9}, 0.7)};
    CHECK(iou(p[0].bbox, gt[0].bbox) == doctest::Approx(0.49));
    const auto m = match_predictions(p, gt, universe);
    CHECK(m.true_positive == std::vector<bool>{false});
    CHECK(m.gt_matched == std::vector<bool>{false});
  }
  SUBCASE("labels must agree") {
    const std::vector<PredictionRecord> p{pred("f", {0, 0, 10, 10}, 0.7, "car")};
    CHECK(match_predictions(p, gt, universe).true_positive == std::vector<bool>{false});
  }
  SUBCASE("frames must agree") {
    const std::vector<PredictionRecord> p{pred("g", {0, 0, 10, 10}, 0.7)};
    CHECK(match_predictions(p, gt, {"f", "g"}).true_positive == std::vector<bool>{false});
  }
  SUBCASE("equal scores keep input order") {
    const std::vector<PredictionRecord> p{pred("f", {0, 0, 10, 8}, 0.5), pred("f", {0, 0, 10, 10}, 0.5)};
    const auto m = match_predictions(p, gt, universe);
    CHECK(m.order == std::vector<std::size_t>{0, 1});
    CHECK(m.true_positive == std::vector<bool>{true, false});
  }
  SUBCASE("unknown frames are listed") {
    const std::vector<PredictionRecord> p{pred("zz", {0, 0, 1, 1}, 0.5), pred("aa", {0, 0, 1, 1}, 0.5),
                                          pred("zz", {0, 0, 1, 1}, 0.4)};
    try {
      match_predictions(p, gt, universe);
      FAIL("expected UnknownFrameError");
    } catch (const UnknownFrameError& e) {
      CHECK(e.frame_ids() == std::vector<std::string>{"aa", "zz"});
      CHECK(std::string(e.what()).find("zz") != std::string::npos);
    }
  }
}

TEST_CASE("matching agrees with the greedy oracle") {
  std::mt19937_64 rng(2024);
  int tps = 0;
  for (int i = 0; i < 1000; ++i) {
    const Instance inst = random_instance(rng);
    const auto m = match_predictions(inst.preds, inst.gts, inst.universe);
    const auto expect = oracle::greedy_match(to_dets(inst.preds), to_gts(inst.gts), 0.5);
    REQUIRE(m.true_positive == expect);
    std::size_t matched = 0;
    for (bool g : m.gt_matched) matched += g ? 1 : 0;
    CHECK(matched == static_cast<std::size_t>(std::count(expect.begin(), expect.end(), true)));
    tps += static_cast<int>(matched);
  }
  CHECK(tps > 1000);
}

TEST_CASE("average precision examples") {
  CHECK(average_precision({true}, 1).value() == 1.0);
  CHECK(average_precision({true}, 2).value() == 0.5);
  CHECK(average_precision({true, false, true}, 2).value() == doctest::Approx(0.5 + 0.5 * 2.0 / 3.0).epsilon(1e-15));
  CHECK(average_precision({true, false, true}, 2).value() == doctest::Approx(0.833333).epsilon(1e-6));
  CHECK_FALSE(average_precision({true, false}, 0).has_value());
  CHECK(average_precision({}, 3).value() == 0.0);
  CHECK(average_precision({false, false}, 3).value() == 0.0);
  CHECK(average_precision({true}, 1, ApMode::ElevenPoint).value() == doctest::Approx(1.0));
  // Recall 0.5 reached at precision 1: levels 0..0.5 give 1, the rest 0.
  CHECK(average_precision({true}, 2, ApMode::ElevenPoint).value() == doctest::Approx(6.0 / 11.0));
  CHECK(to_string(ApMode::ElevenPoint) == "eleven_point");
  CHECK(ap_mode_from_string("all_point") == ApMode::AllPoint);
  CHECK_THROWS_AS(ap_mode_from_string("voc"), ConfigError);
}

TEST_CASE("average precision agrees with the PR sweep oracle") {
  std::mt19937_64 rng(77);
  for (int i = 0; i < 1000; ++i) {
    const Instance inst = random_instance(rng);
    if (inst.gts.empty()) continue;
    const auto m = match_predictions(inst.preds, inst.gts, inst.universe);
    const auto flags = flags_in_order(m);
    const auto oracle_flags =
        oracle_flags_in_order(inst.preds, oracle::greedy_match(to_dets(inst.preds), to_gts(inst.gts), 0.5));
    REQUIRE(flags == oracle_flags);
    const double ap = average_precision(flags, inst.gts.size()).value();
    CHECK(std::abs(ap - oracle::brute_force_ap(oracle_flags, inst.gts.size())) <= 1e-9);
    const double ap11 = average_precision(flags, inst.gts.size(), ApMode::ElevenPoint).value();
    CHECK(std::abs(ap11 - oracle::brute_force_ap11(oracle_flags, inst.gts.size())) <= 1e-9);
    CHECK(ap >= 0.0);
    CHECK(ap <= 1.0);
  }
}

TEST_CASE("raising the score of a true positive never lowers AP") {
  std::mt19937_64 rng(5);
  int checked = 0;
  for (int i = 0; i < 1000; ++i) {
    Instance inst = random_instance(rng);
    if (inst.gts.empty()) continue;
    const auto m = match_predictions(inst.preds, inst.gts, inst.universe);
    std::vector<std::size_t> tps;
    for (std::size_t k = 0; k < inst.preds.size(); ++k) {
      if (m.true_positive[k]) tps.push_back(k);
    }
    if (tps.empty()) continue;
    const double before = average_precision(flags_in_order(m), inst.gts.size()).value();
    const std::size_t k = tps[rng() % tps.size()];
    Instance raised = inst;
    raised.preds[k].score = std::min(1.0, inst.preds[k].score + 0.05 * static_cast<double>(1 + rng() % 10));
    CHECK(ap_of(raised) >= before - 1e-12);
    ++checked;
  }
  CHECK(checked > 300);
}

TEST_CASE("shuffling distinct-score predictions changes nothing") {
  std::mt19937_64 rng(9);
  for (int i = 0; i < 500; ++i) {
    Instance inst = random_instance(rng);
    for (std::size_t k = 0; k < inst.preds.size(); ++k) {
      inst.preds[k].score = (static_cast<double>(k) + 0.5) / (static_cast<double>(inst.preds.size()) + 1.0);
    }
    std::vector<std::size_t> perm(inst.preds.size());
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    Instance shuffled = inst;
    for (std::size_t k = 0; k < perm.size(); ++k) shuffled.preds[k] = inst.preds[perm[k]];

    const auto a = match_predictions(inst.preds, inst.gts, inst.universe);
    const auto b = match_predictions(shuffled.preds, shuffled.gts, shuffled.universe);
    for (std::size_t k = 0; k < perm.size(); ++k) CHECK(b.true_positive[k] == a.true_positive[perm[k]]);
    CHECK(flags_in_order(a) == flags_in_order(b));
    if (!inst.gts.empty()) CHECK(ap_of(inst) == ap_of(shuffled));
  }
}

TEST_CASE("grid examples") {
  SUBCASE("single cell, perfect detector") {
    annotate::TrialAnnotations t{"t", {record(5, 5, 0)}, {}};
    const auto matched = match_trial(t, oracle_detect(t, 1));
    const APGrid g = bin_by_height_radius(matched, std::nullopt);
    REQUIRE(g.cells.size() == 1);
    CHECK(g.at(0, 0).value() == 1.0);
    CHECK(g.map_value.value() == 1.0);
  }
  SUBCASE("two cells at 1.0 and 0.0") {
    annotate::TrialAnnotations t{"t", {record(5, 5, 0, 500), record(5, 10, 0, 50)}, {}};
    const auto matched = match_trial(t, oracle_detect(t, 100));
    const APGrid g = bin_by_height_radius(matched, std::nullopt);
    CHECK(g.altitudes == std::vector<double>{5.0});
    CHECK(g.radii == std::vector<double>{5.0, 10.0});
    CHECK(g.at(0, 0).value() == 1.0);
    CHECK(g.at(0, 1).value() == 0.0);
    CHECK(g.map_value.value() == 0.5);
  }
  SUBCASE("cells without ground truth have no data") {
    annotate::TrialAnnotations t{"t", {record(5, 5, 0), record(10, 10, 0)}, {}};
    t.empty_frames.push_back(annotate::EmptyFrame{geometry::make_frame_id("t", 1, 10, 5, 0), 10, 5, 0,
                                                   SunCondition::Noon, 11.0, 60.0, 0.9});
    t.empty_frames.push_back(annotate::EmptyFrame{geometry::make_frame_id("t", 1, 5, 10, 0), 5, 10, 0,
                                                   SunCondition::Noon, 11.0, 30.0, 0.9});
    const auto matched = match_trial(t, oracle_detect(t, 1));
    const APGrid g = bin_by_height_radius(matched, std::nullopt);
    REQUIRE(g.cells.size() == 4);
    CHECK(g.at(0, 0).value() == 1.0);
    CHECK_FALSE(g.at(0, 1).has_value());
    CHECK_FALSE(g.at(1, 0).has_value());
    CHECK(g.at(1, 1).value() == 1.0);
    CHECK(g.map_value.value() == 1.0);
  }
  SUBCASE("sun filter") {
    annotate::TrialAnnotations t{"t",
                                 {record(5, 5, 0, 500, SunCondition::Noon),
                                  record(5, 5, 0, 50, SunCondition::LateAfternoon)},
                                 {}};
    const auto matched = match_trial(t, oracle_detect(t, 100));
    CHECK(bin_by_height_radius(matched, SunCondition::Noon).map_value.value() == 1.0);
    CHECK(bin_by_height_radius(matched, SunCondition::LateAfternoon).map_value.value() == 0.0);
    CHECK(bin_by_height_radius(matched, std::nullopt).map_value.value() == 0.5);
  }
  CHECK_FALSE(mean_defined({std::nullopt, std::nullopt}).has_value());
  CHECK(mean_defined({1.0, std::nullopt, 0.0, 0.5}).value() == 0.5);
}

TEST_CASE("oracle detector on a rendered 3x3 sweep partitions cells by pixel count") {
  pipeline::RunConfig config = pipeline::default_run_config();
  config.trial = "grid3";
  config.sweep.altitudes_m = {5, 25, 45};
  config.sweep.radii_m = {5, 15, 30};
  config.sweep.azimuth_start_deg = 0;
  config.sweep.azimuth_end_deg = 0;
  config.sweep.sun_conditions = {SunCondition::Noon};
  const auto out = pipeline::generate(config, std::nullopt, 1);
  REQUIRE(out.annotations.frames.size() == 9);

  std::vector<std::int64_t> counts;
  for (const auto& r : out.annotations.frames) counts.push_back(r.pixel_count);
  std::sort(counts.begin(), counts.end());
  const std::int64_t a_min = counts[counts.size() / 2];

  const auto matched = match_trial(out.annotations, oracle_detect(out.annotations, a_min));
  const APGrid g = bin_by_height_radius(matched, std::nullopt);
  int above = 0;
  for (const auto& r : out.annotations.frames) {
    const auto hi = static_cast<std::size_t>(
        std::find(g.altitudes.begin(), g.altitudes.end(), r.camera_altitude_m) - g.altitudes.begin());
    const auto ri = static_cast<std::size_t>(std::find(g.radii.begin(), g.radii.end(), r.radius_m) - g.radii.begin());
    const double expected = r.pixel_count >= a_min ? 1.0 : 0.0;
    CHECK(g.at(hi, ri).value() == expected);
    above += r.pixel_count >= a_min ? 1 : 0;
  }
  CHECK(above >= 1);
  CHECK(above < 9);
}

TEST_CASE("region classification") {
  const RegionSplits s{27.5, 17.5};
  CHECK(classify_region(50, 5, s) == Region::NadirView);
  CHECK(classify_region(5, 30, s) == Region::EyeLevelView);
  CHECK(classify_region(5, 5, s) == Region::LargeTarget);
  CHECK(classify_region(50, 30, s) == Region::SmallTarget);
  CHECK(classify_region(27.5, 17.5, s) == Region::SmallTarget);

  const std::vector<double> hs{5, 10, 15, 20, 25, 30, 35, 40, 45, 50};
  const std::vector<double> rs{5, 10, 15, 20, 25, 30};
  const RegionSplits d = default_splits(hs, rs);
  CHECK(d.altitude_split_m == 27.5);
  CHECK(d.radius_split_m == 17.5);

  std::map<Region, int> tally;
  for (double h : hs) {
    for (double r : rs) ++tally[classify_region(h, r, d)];
  }
  CHECK(tally.size() == 4);
  CHECK(tally[Region::LargeTarget] + tally[Region::NadirView] + tally[Region::SmallTarget] +
            tally[Region::EyeLevelView] ==
        60);
  CHECK(tally[Region::LargeTarget] == 15);
  CHECK(to_string(Region::EyeLevelView) == "EyeLevelView");
}

TEST_CASE("angular histograms") {
  annotate::TrialAnnotations t{"t", {}, {}};
  for (int k = 0; k < 180; ++k) t.frames.push_back(record(5, 5, 2.0 * k));

  SUBCASE("all true positives, 10 degree bins") {
    const auto matched = match_trial(t, oracle_detect(t, 1));
    const auto h = angular_histogram(matched, 10.0);
    REQUIRE(h.counts.size() == 36);
    for (auto c : h.counts) CHECK(c == 5);
    CHECK(h.total() == 180);
  }
  SUBCASE("zero true positives") {
    const auto matched = match_trial(t, {});
    const auto h = angular_histogram(matched, 10.0);
    REQUIRE(h.counts.size() == 36);
    CHECK(h.total() == 0);
  }
  SUBCASE("totals do not depend on bin width") {
    std::mt19937_64 rng(4);
    std::vector<PredictionRecord> preds = oracle_detect(t, 1);
    std::vector<PredictionRecord> kept;
    for (const auto& p : preds) {
      if (rng() % 3 != 0) kept.push_back(p);
    }
    const auto matched = match_trial(t, kept);
    for (double w : {1.0, 2.0, 5.0, 10.0, 30.0, 45.0, 90.0, 360.0}) {
      const auto h = angular_histogram(matched, w);
      CHECK(h.counts.size() == static_cast<std::size_t>(std::lround(360.0 / w)));
      CHECK(h.total() == static_cast<std::int64_t>(kept.size()));
    }
  }
  SUBCASE("raw mode counts false positives too") {
    auto preds = oracle_detect(t, 1);
    preds[0].bbox = {0, 0, 1, 1};
    const auto matched = match_trial(t, preds);
    HistogramFilter tp_only;
    HistogramFilter raw;
    raw.mode = HistogramMode::RawDetections;
    CHECK(angular_histogram(matched, 10.0, tp_only).total() == 179);
    CHECK(angular_histogram(matched, 10.0, raw).total() == 180);
  }
  SUBCASE("bin width must divide 360") {
    const auto matched = match_trial(t, {});
    CHECK_THROWS_AS(angular_histogram(matched, 7.0), ConfigError);
    CHECK_THROWS_AS(angular_histogram(matched, 0.0), ConfigError);
    CHECK_THROWS_AS(angular_histogram(matched, -10.0), ConfigError);
  }
}

TEST_CASE("histogram filters by cell and view scope") {
  annotate::TrialAnnotations t{"t", {}, {}};
  for (double h : {5.0, 50.0}) {
    for (double r : {5.0, 30.0}) {
      for (int k = 0; k < 36; ++k) t.frames.push_back(record(h, r, 10.0 * k));
    }
  }
  const auto matched = match_trial(t, oracle_detect(t, 1));
  HistogramFilter f;
  f.splits = {27.5, 17.5};
  CHECK(angular_histogram(matched, 10.0, f).total() == 144);
  f.scope = ViewScope::Nadir;
  CHECK(angular_histogram(matched, 10.0, f).total() == 36);
  f.scope = ViewScope::OutsideNadir;
  CHECK(angular_histogram(matched, 10.0, f).total() == 108);
  f.scope = ViewScope::All;
  f.cell = std::make_pair(5.0, 30.0);
  const auto cell = angular_histogram(matched, 10.0, f);
  CHECK(cell.total() == 36);
  for (auto c : cell.counts) CHECK(c == 1);
}

TEST_CASE("boundary examples") {
  SUBCASE("uniform grid") {
    const auto g = grid_of({5, 10, 15}, {5, 10}, std::vector<std::optional<double>>(6, 0.9));
    const BoundaryMap b = boundary_map(g, 0.5);
    CHECK(b.cells.empty());
    REQUIRE(b.envelope.size() == 3);
    for (const auto& row : b.envelope) CHECK(row.min_radius_m.value() == 5.0);
  }
  SUBCASE("two by two") {
    const auto g = grid_of({5, 10}, {5, 10}, {0.9, 0.8, 0.4, 0.2});
    const BoundaryMap b = boundary_map(g, 0.5);
    const std::vector<std::pair<double, double>> expect{{5, 5}, {5, 10}};
    CHECK(b.cells == expect);
    REQUIRE(b.envelope.size() == 2);
    CHECK(b.envelope[0].min_radius_m.value() == 5.0);
    CHECK_FALSE(b.envelope[1].min_radius_m.has_value());
  }
  SUBCASE("no data cells are not neighbours below tau") {
    const auto g = grid_of({5, 10}, {5, 10}, {0.9, std::nullopt, std::nullopt, 0.9});
    CHECK(boundary_map(g, 0.5).cells.empty());
  }
  SUBCASE("envelope skips sub-threshold cells") {
    const auto g = grid_of({5}, {5, 10, 15}, {0.1, 0.7, 0.2});
    const BoundaryMap b = boundary_map(g, 0.5);
    CHECK(b.envelope[0].min_radius_m.value() == 10.0);
    CHECK(b.cells == std::vector<std::pair<double, double>>{{5, 10}});
  }
  SUBCASE("errors") {
    const auto g = grid_of({5}, {5}, {0.9});
    CHECK_THROWS_AS(boundary_map(g, 0.0), ConfigError);
    CHECK_THROWS_AS(boundary_map(g, 1.0), ConfigError);
    CHECK_THROWS_AS(boundary_map(grid_of({5}, {5}, {std::nullopt}), 0.5), Error);
  }
}

TEST_CASE("boundary cells satisfy the definition on random grids") {
  std::mt19937_64 rng(31);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int i = 0; i < 200; ++i) {
    const std::size_t nh = 1 + rng() % 6;
    const std::size_t nr = 1 + rng() % 6;
    std::vector<double> hs(nh);
    std::vector<double> rs(nr);
    for (std::size_t k = 0; k < nh; ++k) hs[k] = 5.0 * static_cast<double>(k + 1);
    for (std::size_t k = 0; k < nr; ++k) rs[k] = 5.0 * static_cast<double>(k + 1);
    std::vector<std::optional<double>> cells(nh * nr);
    for (auto& c : cells) {
      if (unit(rng) > 0.1) c = unit(rng);
    }
    cells[0] = 0.5;
    const auto g = grid_of(hs, rs, cells);
    const BoundaryMap b = boundary_map(g, 0.5);
    std::set<std::pair<double, double>> got(b.cells.begin(), b.cells.end());
    for (std::size_t a = 0; a < nh; ++a) {
      for (std::size_t r = 0; r < nr; ++r) {
        const auto& v = g.at(a, r);
        bool low_neighbour = false;
        const int da[] = {-1, 1, 0, 0};
        const int dr[] = {0, 0, -1, 1};
        for (int k = 0; k < 4; ++k) {
          const long na = static_cast<long>(a) + da[k];
          const long nrr = static_cast<long>(r) + dr[k];
          if (na < 0 || nrr < 0 || na >= static_cast<long>(nh) || nrr >= static_cast<long>(nr)) continue;
          const auto& n = g.at(static_cast<std::size_t>(na), static_cast<std::size_t>(nrr));
          if (n && *n < 0.5) low_neighbour = true;
        }
        const bool expect = v && *v >= 0.5 && low_neighbour;
        CHECK(got.contains({hs[a], rs[r]}) == expect);
      }
      std::optional<double> first;
      for (std::size_t r = 0; r < nr && !first; ++r) {
        if (g.at(a, r) && *g.at(a, r) >= 0.5) first = rs[r];
      }
      CHECK(b.envelope[a].min_radius_m == first);
    }
  }
}

TEST_CASE("oracle detector examples") {
  annotate::TrialAnnotations big{"t", {record(5, 5, 0, 10000)}, {}};
  auto p = oracle_detect(big, 100);
  REQUIRE(p.size() == 1);
  CHECK(p[0].score == 1.0);
  CHECK(p[0].bbox == to_pixel_box(big.frames[0].bbox));
  CHECK(p[0].label == "person");

  annotate::TrialAnnotations small{"t", {record(5, 5, 0, 99)}, {}};
  CHECK(oracle_detect(small, 100).empty());
  annotate::TrialAnnotations edge{"t", {record(5, 5, 0, 100)}, {}};
  REQUIRE(oracle_detect(edge, 100).size() == 1);
  CHECK(oracle_detect(edge, 100)[0].score == 0.25);

  annotate::TrialAnnotations many{"t", {}, {}};
  for (int k = 0; k < 20; ++k) many.frames.push_back(record(5.0 * (1 + k % 4), 5, 10.0 * k, 1 + 37 * k));
  const auto all = oracle_detect(many, 1);
  CHECK(all.size() == many.frames.size());
  const auto matched = match_trial(many, all);
  CHECK(bin_by_height_radius(matched, std::nullopt).map_value.value() == 1.0);
  CHECK(oracle_detect(many, 1) == all);
}

TEST_CASE("prediction documents") {
  SUBCASE("empty list") {
    CHECK(parse_predictions("{\"predictions\": []}").empty());
  }
  SUBCASE("score out of range") {
    const std::string text =
        R"({"predictions": [{"frame_id": "f", "bbox": [0, 0, 1, 1], "score": 1.2, "label": "person"}]})";
    try {
      parse_predictions(text);
      FAIL("expected SchemaError");
    } catch (const SchemaError& e) {
      CHECK(std::string(e.what()).find("predictions[0].score") != std::string::npos);
    }
  }
  SUBCASE("schema violations") {
    CHECK_THROWS_AS(parse_predictions(R"({"predictions": [{"frame_id": "f", "bbox": [0, 0, 0, 1], "score": 0.5, "label": "p"}]})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_predictions(R"({"predictions": [{"frame_id": "f", "bbox": [0, 0, 1], "score": 0.5, "label": "p"}]})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_predictions(R"({"predictions": [{"frame_id": "f", "bbox": [0, 0, 1, 1], "label": "p"}]})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_predictions(R"({"predictions": [{"frame_id": "f", "bbox": [0, 0, 1, 1], "score": 0.5, "label": "p", "x": 1}]})"),
                    SchemaError);
    CHECK_THROWS_AS(parse_predictions(R"({"preds": []})"), SchemaError);
    CHECK_THROWS_AS(parse_predictions(R"({"predictions": {}})"), SchemaError);
  }
  SUBCASE("malformed json reports the line") {
    const std::string text = "{\n  \"predictions\": [\n    {\"frame_id\": }\n  ]\n}\n";
    try {
      parse_predictions(text);
      FAIL("expected ParseError");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 3") != std::string::npos);
    }
  }
  SUBCASE("unknown frames") {
    const std::set<std::string> universe{"a"};
    const std::string text =
        R"({"predictions": [{"frame_id": "b", "bbox": [0, 0, 1, 1], "score": 0.5, "label": "p"}]})";
    CHECK_THROWS_AS(parse_predictions(text, &universe), UnknownFrameError);
    CHECK_NOTHROW(parse_predictions(text));
  }
  SUBCASE("round trip of 1,000 records") {
    std::mt19937_64 rng(3);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<PredictionRecord> preds;
    for (int i = 0; i < 1000; ++i) {
      preds.push_back({"frame/" + std::to_string(i % 37), {unit(rng) * 500, unit(rng) * 500, 1 + unit(rng) * 50, 1 + unit(rng) * 50},
                       unit(rng), i % 5 == 0 ? "car" : "person"});
    }
    CHECK(parse_predictions(predictions_to_json_string(preds)) == preds);
    const auto path = std::filesystem::temp_directory_path() / "orbitbench_eval_roundtrip.json";
    write_predictions(preds, path);
    CHECK(ingest_predictions(path) == preds);
    std::filesystem::remove(path);
    CHECK_THROWS_AS(ingest_predictions(path), IoError);
  }
}

TEST_CASE("full evaluation") {
  annotate::TrialAnnotations t{"t", {}, {}};
  for (SunCondition sun : {SunCondition::Noon, SunCondition::LateAfternoon}) {
    for (double h : {5.0, 50.0}) {
      for (double r : {5.0, 30.0}) {
        for (int k = 0; k < 12; ++k) {
          const std::int64_t px = static_cast<std::int64_t>(4000 / (h + r)) + k;
          t.frames.push_back(record(h, r, 30.0 * k, px, sun));
        }
      }
    }
  }
  EvalSettings settings;
  settings.bin_width_deg = 30.0;
  const auto preds = oracle_detect(t, 100);
  const EvaluationResults res = evaluate(t, preds, settings);

  REQUIRE(res.grids.size() == 3);
  CHECK_FALSE(res.grids[0].grid.sun.has_value());
  CHECK(res.grids[1].grid.sun == SunCondition::Noon);
  CHECK(res.grids[2].grid.sun == SunCondition::LateAfternoon);
  CHECK(res.ground_truths == 96);
  CHECK(res.true_positives == static_cast<std::int64_t>(preds.size()));
  CHECK(res.false_positives == 0);
  CHECK(res.splits.altitude_split_m == 27.5);
  CHECK(res.splits.radius_split_m == 17.5);
  CHECK(res.regions.size() == 4);
  // 3 scopes for (pooled + 2 suns), plus one per cell.
  CHECK(res.histograms.size() == 9 + 4);
  const auto& g = res.grids[0].grid;
  CHECK(g.at(0, 0).value() == 1.0);
  CHECK(g.at(1, 1).value() == 0.0);
  REQUIRE(res.grids[0].boundary.has_value());

  const std::string text = results_to_json_string(res);
  const EvaluationResults back = results_from_json_string(text);
  CHECK(results_to_json_string(back) == text);
  CHECK(results_to_json_string(evaluate(t, preds, settings)) == text);

  const auto doc = nlohmann::json::parse(text);
  CHECK(doc["summary"]["map_by_sun"]["all"] == g.map_value.value());
  CHECK(doc["grids"][0]["sun"] == "all");

  CHECK_THROWS_AS(results_from_json_string("{"), ParseError);
  CHECK_THROWS_AS(results_from_json_string("{}"), SchemaError);

  EvalSettings bad;
  bad.tau = 1.0;
  CHECK_THROWS_AS(evaluate(t, preds, bad), ConfigError);
  bad = {};
  bad.iou_threshold = 0.0;
  CHECK_THROWS_AS(evaluate(t, preds, bad), ConfigError);

  const auto empty_res = evaluate(t, {}, settings);
  for (const auto& gr : empty_res.grids) {
    for (const auto& c : gr.grid.cells) CHECK(c.value() == 0.0);
  }
}

}  // TEST_SUITE
