#include <doctest.h>

#include "orbitbench/annotate.hpp"
#include "orbitbench/cli.hpp"
#include "orbitbench/eval.hpp"
#include "orbitbench/image_io.hpp"
#include "orbitbench/pipeline.hpp"

#include <nlohmann/json.hpp>

#include <cstdlib>
#include <filesystem>
#include <sstream>

using namespace orbitbench;
namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
  std::string err;
};

Run run(const std::vector<std::string>& args) {
  std::ostringstream out;
  std::ostringstream err;
  Run r;
  r.code = cli::run(args, out, err);
  r.out = out.str();
  r.err = err.str();
  return r;
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("orbitbench_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

const char* kConfig = R"({
  "trial": "clitrial",
  "sweep": {"altitudes_m": [5, 40], "radii_m": [5, 25], "azimuth_start_deg": 0,
            "azimuth_end_deg": 180, "azimuth_step_deg": 90, "sun_conditions": ["Noon"]},
  "eval": {"bin_width_deg": 90}
})";

// Generates the small trial once per test binary run.
const fs::path& trial_dir() {
  static const fs::path dir = [] {
    const fs::path d = scratch("trial");
    io::write_file_atomic(d / "config.json", kConfig);
    const auto r = run({"generate", "--config", (d / "config.json").string(), "--out", (d / "out").string(),
                        "--workers", "2"});
    REQUIRE(r.code == 0);
    return d;
  }();
  return dir;
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("usage errors exit 2") {
  CHECK(run({}).code == 2);
  CHECK(run({"frobnicate"}).code == 2);
  CHECK(run({"generate"}).code == 2);
  CHECK(run({"oracle", "--annotations", "x", "--min-pixels", "ten", "--out", "y"}).code == 2);
  const auto help = run({"--help"});
  CHECK(help.code == 0);
  CHECK(help.out.find("generate") != std::string::npos);
}

TEST_CASE("generate") {
  const fs::path& d = trial_dir();
  CHECK(fs::exists(d / "out" / "clitrial" / "annotations.json"));
  CHECK(fs::exists(d / "out" / "clitrial" / "scene.json"));
  const auto a = annotate::read_trial_json(d / "out" / "clitrial" / "annotations.json");
  CHECK(a.frames.size() + a.empty_frames.size() >= 12);

  SUBCASE("invalid config exits 2 with the field") {
    io::write_file_atomic(d / "bad.json", R"({"sweep": {"altitudes_m": [10], "radii_m": [10], "oops": 1}})");
    const auto r = run({"generate", "--config", (d / "bad.json").string(), "--out", (d / "bad").string()});
    CHECK(r.code == 2);
    CHECK(r.err.find("sweep.oops") != std::string::npos);
  }
  SUBCASE("malformed config exits 2") {
    io::write_file_atomic(d / "broken.json", "{");
    CHECK(run({"generate", "--config", (d / "broken.json").string()}).code == 2);
  }
  SUBCASE("missing config exits 2") {
    CHECK(run({"generate", "--config", (d / "nope.json").string()}).code == 2);
  }
  SUBCASE("negative workers exit 2") {
    CHECK(run({"generate", "--config", (d / "config.json").string(), "--out", (d / "neg").string(), "--workers",
               "-1"})
              .code == 2);
  }
  SUBCASE("unwritable output exits 3") {
    io::write_file_atomic(d / "blocker", "x");
    const auto r = run({"generate", "--config", (d / "config.json").string(), "--out", (d / "blocker" / "o").string(),
                        "--workers", "1"});
    CHECK(r.code == 3);
  }
}

TEST_CASE("environment worker count") {
  const fs::path d = scratch("env");
  io::write_file_atomic(d / "c.json", R"({"trial": "e", "sweep": {"altitudes_m": [10], "radii_m": [10],
    "azimuth_start_deg": 0, "azimuth_end_deg": 0, "sun_conditions": ["Noon"]}})");
  ::setenv("ORBITBENCH_WORKERS", "3", 1);
  auto r = run({"generate", "--config", (d / "c.json").string(), "--out", (d / "o").string()});
  CHECK(r.code == 0);
  CHECK(r.err.find("3 worker(s)") != std::string::npos);
  r = run({"generate", "--config", (d / "c.json").string(), "--out", (d / "o").string(), "--workers", "1"});
  CHECK(r.err.find("1 worker(s)") != std::string::npos);
  ::setenv("ORBITBENCH_WORKERS", "lots", 1);
  r = run({"generate", "--config", (d / "c.json").string(), "--out", (d / "o").string()});
  CHECK(r.code == 2);
  CHECK(r.err.find("ORBITBENCH_WORKERS") != std::string::npos);
  ::unsetenv("ORBITBENCH_WORKERS");
  fs::remove_all(d);
}

TEST_CASE("oracle") {
  const fs::path& d = trial_dir();
  const std::string ann = (d / "out" / "clitrial" / "annotations.json").string();
  const auto annotations = annotate::read_trial_json(ann);
  REQUIRE_FALSE(annotations.frames.empty());

  auto r = run({"oracle", "--annotations", ann, "--min-pixels", "1", "--out", (d / "p1.json").string()});
  REQUIRE(r.code == 0);
  const auto all = eval::ingest_predictions(d / "p1.json");
  CHECK(all.size() == annotations.frames.size());

  std::int64_t peak = 0;
  for (const auto& rec : annotations.frames) peak = std::max(peak, rec.pixel_count);
  r = run({"oracle", "--annotations", ann, "--min-pixels", std::to_string(peak + 1), "--out",
           (d / "none.json").string()});
  REQUIRE(r.code == 0);
  CHECK(eval::ingest_predictions(d / "none.json").empty());

  r = run({"oracle", "--annotations", ann, "--min-pixels", "1", "--out", (d / "p1_again.json").string()});
  CHECK(io::read_file(d / "p1.json") == io::read_file(d / "p1_again.json"));

  CHECK(run({"oracle", "--annotations", ann, "--min-pixels", "0", "--out", (d / "z.json").string()}).code == 2);
  CHECK(run({"oracle", "--annotations", (d / "missing.json").string(), "--min-pixels", "1", "--out",
             (d / "z.json").string()})
            .code == 2);
}

TEST_CASE("evaluate") {
  const fs::path& d = trial_dir();
  const std::string ann = (d / "out" / "clitrial" / "annotations.json").string();
  const std::string cfg = (d / "config.json").string();
  REQUIRE(run({"oracle", "--annotations", ann, "--min-pixels", "1", "--out", (d / "perfect.json").string()}).code == 0);

  SUBCASE("matches the library call byte for byte") {
    const auto r = run({"evaluate", "--annotations", ann, "--predictions", (d / "perfect.json").string(), "--config",
                        cfg, "--out", (d / "results.json").string()});
    REQUIRE(r.code == 0);
    const auto annotations = annotate::read_trial_json(ann);
    const auto settings = pipeline::eval_settings_from_config(pipeline::load_run_config(cfg));
    const auto lib = eval::evaluate(annotations, eval::ingest_predictions(d / "perfect.json"), settings);
    CHECK(io::read_file(d / "results.json") == eval::results_to_json_string(lib));

    const auto doc = nlohmann::json::parse(io::read_file(d / "results.json"));
    for (const auto& g : doc["grids"]) {
      for (const auto& row : g["ap"]) {
        for (const auto& c : row) {
          if (!c.is_null()) CHECK(c.get<double>() == 1.0);
        }
      }
    }
    CHECK(doc["settings"]["bin_width_deg"] == 90.0);
  }
  SUBCASE("empty predictions give zero AP") {
    io::write_file_atomic(d / "empty.json", R"({"predictions": []})");
    REQUIRE(run({"evaluate", "--annotations", ann, "--predictions", (d / "empty.json").string(), "--out",
                 (d / "zero.json").string()})
                .code == 0);
    const auto doc = nlohmann::json::parse(io::read_file(d / "zero.json"));
    for (const auto& g : doc["grids"]) {
      for (const auto& row : g["ap"]) {
        for (const auto& c : row) {
          if (!c.is_null()) CHECK(c.get<double>() == 0.0);
        }
      }
    }
  }
  SUBCASE("unknown frames exit 4") {
    io::write_file_atomic(d / "stray.json",
                          R"({"predictions": [{"frame_id": "clitrial/9/nowhere", "bbox": [0, 0, 5, 5], "score": 0.5, "label": "person"}]})");
    const auto r = run({"evaluate", "--annotations", ann, "--predictions", (d / "stray.json").string(), "--out",
                        (d / "stray_results.json").string()});
    CHECK(r.code == 4);
    CHECK(r.err.find("clitrial/9/nowhere") != std::string::npos);
    CHECK_FALSE(fs::exists(d / "stray_results.json"));
  }
  SUBCASE("schema violations exit 2") {
    io::write_file_atomic(d / "bad_score.json",
                          R"({"predictions": [{"frame_id": "x", "bbox": [0, 0, 5, 5], "score": 1.2, "label": "person"}]})");
    CHECK(run({"evaluate", "--annotations", ann, "--predictions", (d / "bad_score.json").string(), "--out",
               (d / "r.json").string()})
              .code == 2);
    io::write_file_atomic(d / "garbled.json", "{\"predictions\": [");
    CHECK(run({"evaluate", "--annotations", ann, "--predictions", (d / "garbled.json").string(), "--out",
               (d / "r.json").string()})
              .code == 2);
  }
  SUBCASE("unwritable results path exits 3") {
    io::write_file_atomic(d / "blocker2", "x");
    CHECK(run({"evaluate", "--annotations", ann, "--predictions", (d / "perfect.json").string(), "--out",
               (d / "blocker2" / "r.json").string()})
              .code == 3);
  }
}

TEST_CASE("report") {
  const fs::path& d = trial_dir();
  const std::string ann = (d / "out" / "clitrial" / "annotations.json").string();
  REQUIRE(run({"oracle", "--annotations", ann, "--min-pixels", "200", "--out", (d / "p200.json").string()}).code == 0);
  REQUIRE(run({"evaluate", "--annotations", ann, "--predictions", (d / "p200.json").string(), "--out",
               (d / "res200.json").string()})
              .code == 0);

  REQUIRE(run({"report", "--results", (d / "res200.json").string(), "--out", (d / "rep1").string()}).code == 0);
  REQUIRE(run({"report", "--results", (d / "res200.json").string(), "--out", (d / "rep2").string()}).code == 0);
  const auto manifest = nlohmann::json::parse(io::read_file(d / "rep1" / "manifest.json"));
  CHECK(manifest["files"].size() >= 3);
  for (const auto& f : manifest["files"]) {
    const std::string p = f["path"];
    CHECK(io::read_file(d / "rep1" / p) == io::read_file(d / "rep2" / p));
  }
  CHECK(io::read_file(d / "rep1" / "manifest.json") == io::read_file(d / "rep2" / "manifest.json"));

  CHECK(run({"report", "--results", (d / "absent.json").string(), "--out", (d / "rep3").string()}).code == 2);
  io::write_file_atomic(d / "blocker3", "x");
  CHECK(run({"report", "--results", (d / "res200.json").string(), "--out", (d / "blocker3" / "r").string()}).code ==
        3);
  io::write_file_atomic(d / "notresults.json", "{\"a\": 1}");
  CHECK(run({"report", "--results", (d / "notresults.json").string(), "--out", (d / "rep4").string()}).code == 2);
}

}  // TEST_SUITE
