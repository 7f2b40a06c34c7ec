// Human-readable outputs: AP grid CSV tables, SVG heatmaps and polar
// angular histograms, and a hashed manifest of everything written.
#pragma once

#include "orbitbench/eval.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace orbitbench::report {

// Header row carries the radii, first column the altitudes; cells hold AP to
// four decimals or nothing for "no data"; the last line is "mAP,<value>".
std::string ap_grid_csv(const eval::APGrid& grid);
void emit_ap_grid_csv(const eval::APGrid& grid, const std::filesystem::path& path);
// Inverse of ap_grid_csv up to the four-decimal quantization.
eval::APGrid parse_ap_grid_csv(const std::string& text);
eval::APGrid read_ap_grid_csv(const std::filesystem::path& path);

// Colour ramp used by the heatmap: AP 0 maps to kRampLow, AP 1 to kRampHigh,
// linearly per channel in between.
inline constexpr Rgb kRampLow{215, 48, 31};
inline constexpr Rgb kRampHigh{26, 152, 80};
inline constexpr Rgb kNoData{204, 204, 204};

Rgb ramp_color(double ap);

std::string heatmap_svg(const eval::APGrid& grid, const eval::RegionSplits& splits,
                        const std::string& title);
void emit_heatmap_svg(const eval::APGrid& grid, const eval::RegionSplits& splits,
                      const std::string& title, const std::filesystem::path& path);

std::string angular_svg(const eval::AngularHistogram& hist, const std::string& title);
void emit_angular_svg(const eval::AngularHistogram& hist, const std::string& title,
                      const std::filesystem::path& path);

struct ManifestEntry {
  std::string path;  // relative to the bundle directory
  std::string sha256;
  std::uintmax_t bytes = 0;
};

struct ReportBundle {
  std::filesystem::path directory;
  std::vector<ManifestEntry> files;
};

std::string sha256_hex(std::string_view bytes);

// Writes CSV and SVG files per illumination scope, summary.csv and
// manifest.json. The manifest lists every other file written.
ReportBundle build_report(const eval::EvaluationResults& results,
                          const std::filesystem::path& out_dir);

}  // namespace orbitbench::report
