#include "orbitbench/cli.hpp"

#include "orbitbench/annotate.hpp"
#include "orbitbench/eval.hpp"
#include "orbitbench/image_io.hpp"
#include "orbitbench/pipeline.hpp"
#include "orbitbench/report.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>

namespace orbitbench::cli {

namespace {

namespace fs = std::filesystem;

void require_input(const fs::path& path, const std::string& flag) {
  std::error_code ec;
  if (!fs::is_regular_file(path, ec)) throw ConfigError(flag, "no such file: " + path.string());
}

struct Options {
  std::string config;
  std::string out;
  std::optional<int> workers;
  std::string annotations;
  std::string predictions;
  std::string results;
  std::int64_t min_pixels = 0;
};

int cmd_generate(const Options& opt, std::ostream& out, std::ostream& err) {
  require_input(opt.config, "--config");
  const auto config = pipeline::load_run_config(opt.config);
  const fs::path out_dir = opt.out.empty() ? config.output_dir : fs::path(opt.out);
  const int workers = pipeline::resolve_workers(opt.workers, std::getenv("ORBITBENCH_WORKERS"), config.workers);

  const std::size_t total = config.sweep.frame_count();
  const std::size_t stride = std::max<std::size_t>(1, total / 20);
  err << "generate: " << total << " frames, " << workers << " worker(s)\n";
  const auto progress = [&](std::size_t done, std::size_t n) {
    if (done % stride == 0 || done == n) err << "generate: " << done << "/" << n << " frames\n";
  };
  const auto result = pipeline::generate(config, out_dir, workers, progress);
  out << "wrote " << result.frame_count << " frames, " << result.annotations.frames.size()
      << " annotation records to " << result.trial_dir.string() << "\n";
  return kOk;
}

int cmd_evaluate(const Options& opt, std::ostream& out) {
  require_input(opt.annotations, "--annotations");
  require_input(opt.predictions, "--predictions");
  eval::EvalSettings settings;
  if (!opt.config.empty()) {
    require_input(opt.config, "--config");
    settings = pipeline::eval_settings_from_config(pipeline::load_run_config(opt.config));
  }
  const auto annotations = annotate::read_trial_json(opt.annotations);
  const auto universe = eval::frame_universe(annotations);
  auto predictions = eval::ingest_predictions(opt.predictions, &universe);
  const auto results = eval::evaluate(annotations, std::move(predictions), settings);
  io::write_file_atomic(opt.out, eval::results_to_json_string(results));
  out << "evaluated " << results.ground_truths << " ground truths: " << results.true_positives
      << " true positives, " << results.false_positives << " false positives\n";
  return kOk;
}

int cmd_report(const Options& opt, std::ostream& out) {
  require_input(opt.results, "--results");
  const auto results = eval::results_from_json_string(io::read_file(opt.results));
  const auto bundle = report::build_report(results, opt.out);
  out << "wrote " << bundle.files.size() + 1 << " files to " << bundle.directory.string() << "\n";
  return kOk;
}

int cmd_oracle(const Options& opt, std::ostream& out) {
  require_input(opt.annotations, "--annotations");
  const auto annotations = annotate::read_trial_json(opt.annotations);
  const auto predictions = eval::oracle_detect(annotations, opt.min_pixels);
  eval::write_predictions(predictions, opt.out);
  out << "wrote " << predictions.size() << " predictions to " << opt.out << "\n";
  return kOk;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Synthetic orbit-sweep benchmark for aerial person detection", "orbitbench"};
  app.require_subcommand(1, 1);
  Options opt;

  auto* generate = app.add_subcommand("generate", "Render a trial and write its annotations");
  generate->add_option("--config", opt.config, "Run configuration JSON")->required();
  generate->add_option("--out", opt.out, "Output directory (overrides output_dir)");
  generate->add_option("--workers", opt.workers, "Worker threads, 0 = auto (overrides ORBITBENCH_WORKERS)");

  auto* evaluate = app.add_subcommand("evaluate", "Score predictions against trial annotations");
  evaluate->add_option("--annotations", opt.annotations, "Trial annotations JSON")->required();
  evaluate->add_option("--predictions", opt.predictions, "Predictions JSON")->required();
  evaluate->add_option("--config", opt.config, "Run configuration JSON for eval settings");
  evaluate->add_option("--out", opt.out, "Results JSON path")->required();

  auto* rep = app.add_subcommand("report", "Write CSV and SVG artifacts for a results file");
  rep->add_option("--results", opt.results, "Results JSON")->required();
  rep->add_option("--out", opt.out, "Report directory")->required();

  auto* oracle = app.add_subcommand("oracle", "Write pixel-area oracle predictions");
  oracle->add_option("--annotations", opt.annotations, "Trial annotations JSON")->required();
  oracle->add_option("--min-pixels", opt.min_pixels, "Minimum visible pixel count")->required();
  oracle->add_option("--out", opt.out, "Predictions JSON path")->required();

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(std::move(reversed));
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  }

  try {
    if (generate->parsed()) return cmd_generate(opt, out, err);
    if (evaluate->parsed()) return cmd_evaluate(opt, out);
    if (rep->parsed()) return cmd_report(opt, out);
    if (oracle->parsed()) return cmd_oracle(opt, out);
  } catch (const UnknownFrameError& e) {
    err << "error: " << e.what() << "\n";
    const auto& ids = e.frame_ids();
    const std::size_t shown = std::min<std::size_t>(ids.size(), 20);
    for (std::size_t i = 0; i < shown; ++i) err << "  unknown frame_id: " << ids[i] << "\n";
    if (ids.size() > shown) err << "  ... and " << ids.size() - shown << " more\n";
    return kUnknownFrames;
  } catch (const ConfigError& e) {
    err << "error: invalid input: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const SchemaError& e) {
    err << "error: schema violation: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const ParseError& e) {
    err << "error: " << e.what() << "\n";
    return kInvalidInput;
  } catch (const IoError& e) {
    err << "error: i/o failure: " << e.what() << "\n";
    return kIoFailure;
  } catch (const fs::filesystem_error& e) {
    err << "error: i/o failure: " << e.what() << "\n";
    return kIoFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kFailure;
  }
  return kFailure;
}

int run(int argc, const char* const* argv) {
  std::vector<std::string> args;
  for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
  return run(args, std::cout, std::cerr);
}

}  // namespace orbitbench::cli
