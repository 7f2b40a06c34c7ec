#include "orbitbench/annotate.hpp"
#include "orbitbench/eval.hpp"
#include "orbitbench/geometry.hpp"
#include "orbitbench/image_io.hpp"
#include "orbitbench/pipeline.hpp"
#include "orbitbench/report.hpp"

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

namespace py = pybind11;
using namespace orbitbench;

namespace {

std::vector<std::string> frame_ids(const std::string& config_json) {
  const auto config = pipeline::parse_run_config(config_json);
  std::vector<std::string> out;
  for (const auto& f : geometry::enumerate_sweep(config.sweep, config.trial)) out.push_back(f.frame_id);
  return out;
}

std::string generate(const std::filesystem::path& config_path, const std::filesystem::path& out_dir, int workers) {
  const auto config = pipeline::load_run_config(config_path);
  std::string result;
  {
    py::gil_scoped_release release;
    const auto out = pipeline::generate(config, out_dir, pipeline::resolve_workers(workers, nullptr, config.workers));
    result = (out.trial_dir / "annotations.json").string();
  }
  return result;
}

std::size_t oracle(const std::filesystem::path& annotations, std::int64_t min_pixels,
                   const std::filesystem::path& out_path) {
  const auto predictions = eval::oracle_detect(annotate::read_trial_json(annotations), min_pixels);
  eval::write_predictions(predictions, out_path);
  return predictions.size();
}

std::string evaluate(const std::filesystem::path& annotations_path, const std::filesystem::path& predictions_path,
                     const std::optional<std::filesystem::path>& config_path,
                     const std::optional<std::filesystem::path>& out_path) {
  eval::EvalSettings settings;
  if (config_path) settings = pipeline::eval_settings_from_config(pipeline::load_run_config(*config_path));
  const auto annotations = annotate::read_trial_json(annotations_path);
  const auto universe = eval::frame_universe(annotations);
  auto predictions = eval::ingest_predictions(predictions_path, &universe);
  const std::string text = eval::results_to_json_string(eval::evaluate(annotations, std::move(predictions), settings));
  if (out_path) io::write_file_atomic(*out_path, text);
  return text;
}

std::vector<std::string> write_report(const std::filesystem::path& results_path, const std::filesystem::path& out_dir) {
  const auto bundle = report::build_report(eval::results_from_json_string(io::read_file(results_path)), out_dir);
  std::vector<std::string> files;
  for (const auto& f : bundle.files) files.push_back(f.path);
  files.emplace_back("manifest.json");
  return files;
}

double box_iou(const std::array<double, 4>& a, const std::array<double, 4>& b) {
  return eval::iou({a[0], a[1], a[2], a[3]}, {b[0], b[1], b[2], b[3]});
}

std::optional<double> average_precision(const std::vector<bool>& flags, std::size_t n_gt, const std::string& mode) {
  return eval::average_precision(flags, n_gt, eval::ap_mode_from_string(mode));
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "orbitbench core bindings";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base.ptr());
  py::register_exception<ParseError>(m, "ParseError", base.ptr());
  py::register_exception<SchemaError>(m, "SchemaError", base.ptr());
  py::register_exception<UnknownFrameError>(m, "UnknownFrameError", base.ptr());
  py::register_exception<IoError>(m, "IoError", base.ptr());
  py::register_exception<GeometryError>(m, "GeometryError", base.ptr());

  m.def("frame_ids", &frame_ids, py::arg("config_json"), "Frame ids of the sweep described by a run config.");
  m.def("generate", &generate, py::arg("config_path"), py::arg("out_dir"), py::arg("workers") = 1,
        "Render a trial; returns the annotations path.");
  m.def("oracle", &oracle, py::arg("annotations_path"), py::arg("min_pixels"), py::arg("out_path"),
        "Write pixel-area oracle predictions; returns their count.");
  m.def("evaluate", &evaluate, py::arg("annotations_path"), py::arg("predictions_path"),
        py::arg("config_path") = std::nullopt, py::arg("out_path") = std::nullopt,
        "Evaluate predictions; returns the results JSON text.");
  m.def("report", &write_report, py::arg("results_path"), py::arg("out_dir"),
        "Write the report bundle; returns the file names.");
  m.def("iou", &box_iou, py::arg("a"), py::arg("b"), "IoU of two [x_min, y_min, w, h] boxes.");
  m.def("average_precision", &average_precision, py::arg("flags"), py::arg("n_gt"), py::arg("mode") = "all_point",
        "AP from TP flags in descending score order; None when n_gt is 0.");
  m.attr("__version__") = "0.1.0";
}
