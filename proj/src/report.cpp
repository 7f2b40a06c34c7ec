#include "orbitbench/report.hpp"

#include "orbitbench/image_io.hpp"

#include <nlohmann/json.hpp>
#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace orbitbench::report {

namespace {

// Shortest fixed-point rendering with at most six decimals.
std::string fmt_axis(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6f", v);
  std::string s = buf;
  while (!s.empty() && s.back() == '0') s.pop_back();
  if (!s.empty() && s.back() == '.') s.pop_back();
  if (s == "-0") s = "0";
  return s;
}

std::string fmt(double v, int decimals) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", decimals, v);
  return buf;
}

std::string hex_color(Rgb c) {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", c.r, c.g, c.b);
  return buf;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char ch : s) {
    switch (ch) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += ch;
    }
  }
  return out;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == sep) {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

double parse_double(const std::string& s, const std::string& ctx) {
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw SchemaError(ctx + ": trailing characters in '" + s + "'");
    return v;
  } catch (const std::logic_error&) {
    throw SchemaError(ctx + ": not a number: '" + s + "'");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// CSV

std::string ap_grid_csv(const eval::APGrid& grid) {
  std::ostringstream out;
  out << "altitude_m/radius_m";
  for (double r : grid.radii) out << ',' << fmt_axis(r);
  out << '\n';
  for (std::size_t i = 0; i < grid.altitudes.size(); ++i) {
    out << fmt_axis(grid.altitudes[i]);
    for (std::size_t j = 0; j < grid.radii.size(); ++j) {
      out << ',';
      if (const auto& c = grid.at(i, j)) out << fmt(*c, 4);
    }
    out << '\n';
  }
  out << "mAP,";
  if (grid.map_value) out << fmt(*grid.map_value, 4);
  out << '\n';
  return out.str();
}

void emit_ap_grid_csv(const eval::APGrid& grid, const std::filesystem::path& path) {
  io::write_file_atomic(path, ap_grid_csv(grid));
}

eval::APGrid parse_ap_grid_csv(const std::string& text) {
  std::vector<std::string> lines;
  {
    std::istringstream in(text);
    std::string line;
    while (std::getline(in, line)) lines.push_back(line);
  }
  if (lines.size() < 2) throw SchemaError("ap grid csv: expected header and mAP lines");
  eval::APGrid grid;
  const auto header = split(lines.front(), ',');
  for (std::size_t j = 1; j < header.size(); ++j) grid.radii.push_back(parse_double(header[j], "header"));
  for (std::size_t i = 1; i + 1 < lines.size(); ++i) {
    const auto cells = split(lines[i], ',');
    if (cells.size() != grid.radii.size() + 1)
      throw SchemaError("ap grid csv: row " + std::to_string(i) + " has the wrong column count");
    grid.altitudes.push_back(parse_double(cells[0], "row " + std::to_string(i)));
    for (std::size_t j = 1; j < cells.size(); ++j) {
      if (cells[j].empty()) {
        grid.cells.emplace_back(std::nullopt);
      } else {
        grid.cells.emplace_back(parse_double(cells[j], "row " + std::to_string(i)));
      }
    }
  }
  const auto last = split(lines.back(), ',');
  if (last.size() != 2 || last[0] != "mAP") throw SchemaError("ap grid csv: missing mAP line");
  if (!last[1].empty()) grid.map_value = parse_double(last[1], "mAP");
  return grid;
}

eval::APGrid read_ap_grid_csv(const std::filesystem::path& path) {
  return parse_ap_grid_csv(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Heatmap

Rgb ramp_color(double ap) {
  const double t = std::clamp(ap, 0.0, 1.0);
  const auto mix = [t](std::uint8_t lo, std::uint8_t hi) {
    return static_cast<std::uint8_t>(std::lround(lo + (hi - lo) * t));
  };
  return {mix(kRampLow.r, kRampHigh.r), mix(kRampLow.g, kRampHigh.g), mix(kRampLow.b, kRampHigh.b)};
}

namespace {

constexpr double kCell = 48.0;
constexpr double kLeft = 80.0;
constexpr double kTop = 50.0;

// Maps an axis value onto the pixel coordinate between cell centers,
// clamped to the outer cell edges.
double axis_position(const std::vector<double>& axis, double value, double first_center,
                     double step) {
  if (axis.empty()) return first_center;
  if (axis.size() == 1 || value <= axis.front()) {
    return value <= axis.front() ? first_center - 0.5 * std::copysign(kCell, step)
                                 : first_center + 0.5 * std::copysign(kCell, step);
  }
  if (value >= axis.back())
    return first_center + step * static_cast<double>(axis.size() - 1) + 0.5 * std::copysign(kCell, step);
  for (std::size_t k = 0; k + 1 < axis.size(); ++k) {
    if (value >= axis[k] && value <= axis[k + 1]) {
      const double t = (value - axis[k]) / (axis[k + 1] - axis[k]);
      return first_center + step * (static_cast<double>(k) + t);
    }
  }
  return first_center;
}

}  // namespace

std::string heatmap_svg(const eval::APGrid& grid, const eval::RegionSplits& splits,
                        const std::string& title) {
  const std::size_t rows = grid.altitudes.size();
  const std::size_t cols = grid.radii.size();
  const double width = kLeft + kCell * static_cast<double>(cols) + 30.0;
  const double height = kTop + kCell * static_cast<double>(rows) + 60.0;
  const double plot_bottom = kTop + kCell * static_cast<double>(rows);

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_axis(width) << "\" height=\""
      << fmt_axis(height) << "\" viewBox=\"0 0 " << fmt_axis(width) << ' ' << fmt_axis(height)
      << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<title>" << xml_escape(title) << "</title>\n";
  svg << "<text x=\"" << fmt_axis(kLeft) << "\" y=\"20\" font-size=\"14\">" << xml_escape(title);
  if (grid.map_value) svg << " (mAP " << fmt(*grid.map_value, 4) << ")";
  svg << "</text>\n";

  // Highest altitude at the top.
  for (std::size_t i = 0; i < rows; ++i) {
    const double y = plot_bottom - kCell * static_cast<double>(i + 1);
    for (std::size_t j = 0; j < cols; ++j) {
      const double x = kLeft + kCell * static_cast<double>(j);
      const auto& c = grid.at(i, j);
      if (c) {
        svg << "<rect class=\"cell\" x=\"" << fmt_axis(x) << "\" y=\"" << fmt_axis(y)
            << "\" width=\"" << fmt_axis(kCell) << "\" height=\"" << fmt_axis(kCell)
            << "\" fill=\"" << hex_color(ramp_color(*c)) << "\" data-altitude=\""
            << fmt_axis(grid.altitudes[i]) << "\" data-radius=\"" << fmt_axis(grid.radii[j])
            << "\" data-ap=\"" << fmt(*c, 4) << "\"/>\n";
        svg << "<text x=\"" << fmt_axis(x + 0.5 * kCell) << "\" y=\"" << fmt_axis(y + 0.5 * kCell + 4)
            << "\" text-anchor=\"middle\">" << fmt(*c, 2) << "</text>\n";
      } else {
        svg << "<rect class=\"nodata\" x=\"" << fmt_axis(x) << "\" y=\"" << fmt_axis(y)
            << "\" width=\"" << fmt_axis(kCell) << "\" height=\"" << fmt_axis(kCell)
            << "\" fill=\"" << hex_color(kNoData) << "\" data-altitude=\""
            << fmt_axis(grid.altitudes[i]) << "\" data-radius=\"" << fmt_axis(grid.radii[j])
            << "\"/>\n";
      }
    }
  }

  for (std::size_t j = 0; j < cols; ++j) {
    svg << "<text class=\"axis\" x=\"" << fmt_axis(kLeft + kCell * (static_cast<double>(j) + 0.5))
        << "\" y=\"" << fmt_axis(plot_bottom + 16) << "\" text-anchor=\"middle\">"
        << fmt_axis(grid.radii[j]) << "</text>\n";
  }
  for (std::size_t i = 0; i < rows; ++i) {
    svg << "<text class=\"axis\" x=\"" << fmt_axis(kLeft - 8) << "\" y=\""
        << fmt_axis(plot_bottom - kCell * (static_cast<double>(i) + 0.5) + 4)
        << "\" text-anchor=\"end\">" << fmt_axis(grid.altitudes[i]) << "</text>\n";
  }
  svg << "<text x=\"" << fmt_axis(kLeft + 0.5 * kCell * static_cast<double>(cols)) << "\" y=\""
      << fmt_axis(plot_bottom + 36) << "\" text-anchor=\"middle\">radius (m)</text>\n";
  svg << "<text x=\"16\" y=\"" << fmt_axis(kTop + 0.5 * kCell * static_cast<double>(rows))
      << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << fmt_axis(kTop + 0.5 * kCell * static_cast<double>(rows)) << ")\">altitude (m)</text>\n";

  if (rows > 0 && cols > 0) {
    const double split_x =
        axis_position(grid.radii, splits.radius_split_m, kLeft + 0.5 * kCell, kCell);
    const double split_y =
        axis_position(grid.altitudes, splits.altitude_split_m, plot_bottom - 0.5 * kCell, -kCell);
    svg << "<line class=\"split\" x1=\"" << fmt(split_x, 2) << "\" y1=\"" << fmt_axis(kTop)
        << "\" x2=\"" << fmt(split_x, 2) << "\" y2=\"" << fmt_axis(plot_bottom)
        << "\" stroke=\"#000000\" stroke-width=\"2\" stroke-dasharray=\"6 3\"/>\n";
    svg << "<line class=\"split\" x1=\"" << fmt_axis(kLeft) << "\" y1=\"" << fmt(split_y, 2)
        << "\" x2=\"" << fmt_axis(kLeft + kCell * static_cast<double>(cols)) << "\" y2=\""
        << fmt(split_y, 2) << "\" stroke=\"#000000\" stroke-width=\"2\" stroke-dasharray=\"6 3\"/>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_heatmap_svg(const eval::APGrid& grid, const eval::RegionSplits& splits,
                      const std::string& title, const std::filesystem::path& path) {
  io::write_file_atomic(path, heatmap_svg(grid, splits, title));
}

// ---------------------------------------------------------------------------
// Polar histogram

std::string angular_svg(const eval::AngularHistogram& hist, const std::string& title) {
  constexpr double kSize = 400.0;
  constexpr double kCenter = 210.0;
  constexpr double kMaxRadius = 160.0;
  const std::int64_t peak =
      hist.counts.empty() ? 0 : *std::max_element(hist.counts.begin(), hist.counts.end());

  std::ostringstream svg;
  svg << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  svg << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt_axis(kSize + 20)
      << "\" height=\"" << fmt_axis(kSize + 40) << "\" viewBox=\"0 0 " << fmt_axis(kSize + 20)
      << ' ' << fmt_axis(kSize + 40) << "\" font-family=\"sans-serif\" font-size=\"11\">\n";
  svg << "<title>" << xml_escape(title) << "</title>\n";
  svg << "<text x=\"10\" y=\"20\" font-size=\"14\">" << xml_escape(title) << " (total "
      << hist.total() << ")</text>\n";
  svg << "<circle cx=\"" << fmt_axis(kCenter) << "\" cy=\"" << fmt_axis(kCenter + 20) << "\" r=\""
      << fmt_axis(kMaxRadius) << "\" fill=\"none\" stroke=\"#999999\"/>\n";

  const double cy = kCenter + 20;
  for (std::size_t k = 0; k < hist.counts.size(); ++k) {
    const double length =
        peak > 0 ? kMaxRadius * static_cast<double>(hist.counts[k]) / static_cast<double>(peak) : 0.0;
    const double a0 = deg2rad(hist.bin_width_deg * static_cast<double>(k));
    const double a1 = deg2rad(hist.bin_width_deg * static_cast<double>(k + 1));
    // Azimuth runs counterclockwise from +x; SVG y grows downward.
    const double x0 = kCenter + length * std::cos(a0);
    const double y0 = cy - length * std::sin(a0);
    const double x1 = kCenter + length * std::cos(a1);
    const double y1 = cy - length * std::sin(a1);
    const int large_arc = hist.bin_width_deg > 180.0 ? 1 : 0;
    svg << "<path class=\"wedge\" data-bin=\"" << k << "\" data-count=\"" << hist.counts[k]
        << "\" data-length=\"" << fmt(length, 3) << "\" d=\"M " << fmt(kCenter, 3) << ' '
        << fmt(cy, 3) << " L " << fmt(x0, 3) << ' ' << fmt(y0, 3) << " A " << fmt(length, 3)
        << ' ' << fmt(length, 3) << " 0 " << large_arc << " 0 " << fmt(x1, 3) << ' '
        << fmt(y1, 3) << " Z\" fill=\"#4575b4\" stroke=\"#ffffff\" stroke-width=\"0.5\"/>\n";
  }
  for (int deg = 0; deg < 360; deg += 90) {
    const double a = deg2rad(deg);
    svg << "<text class=\"axis\" x=\"" << fmt(kCenter + (kMaxRadius + 14) * std::cos(a), 1)
        << "\" y=\"" << fmt(cy - (kMaxRadius + 14) * std::sin(a) + 4, 1)
        << "\" text-anchor=\"middle\">" << deg << "</text>\n";
  }
  svg << "</svg>\n";
  return svg.str();
}

void emit_angular_svg(const eval::AngularHistogram& hist, const std::string& title,
                      const std::filesystem::path& path) {
  io::write_file_atomic(path, angular_svg(hist, title));
}

// ---------------------------------------------------------------------------
// Bundle

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

namespace {

std::string sun_label(const std::optional<SunCondition>& sun) {
  return sun ? std::string(to_string(*sun)) : std::string("all");
}

}  // namespace

ReportBundle build_report(const eval::EvaluationResults& results,
                          const std::filesystem::path& out_dir) {
  ReportBundle bundle;
  bundle.directory = out_dir;
  const auto emit = [&](const std::string& name, const std::string& content) {
    io::write_file_atomic(out_dir / name, content);
    bundle.files.push_back({name, sha256_hex(content), content.size()});
  };

  std::ostringstream summary;
  summary << "sun,map\n";
  for (const auto& g : results.grids) {
    const std::string label = sun_label(g.grid.sun);
    emit("ap_grid_" + label + ".csv", ap_grid_csv(g.grid));
    emit("heatmap_" + label + ".svg", heatmap_svg(g.grid, results.splits, "AP by altitude and radius: " + label));
    summary << label << ',';
    if (g.grid.map_value) summary << fmt(*g.grid.map_value, 4);
    summary << '\n';
  }
  for (const auto& h : results.histograms) {
    if (h.cell) continue;
    const std::string label = sun_label(h.sun) + "_" + std::string(to_string(h.scope));
    emit("angular_" + label + ".svg",
         angular_svg(h.histogram, "Positive detections by view angle: " + label));
  }
  summary << "ground_truths," << results.ground_truths << '\n';
  summary << "true_positives," << results.true_positives << '\n';
  summary << "false_positives," << results.false_positives << '\n';
  emit("summary.csv", summary.str());

  std::sort(bundle.files.begin(), bundle.files.end(),
            [](const auto& a, const auto& b) { return a.path < b.path; });
  nlohmann::json manifest;
  manifest["files"] = nlohmann::json::array();
  for (const auto& f : bundle.files) {
    manifest["files"].push_back({{"path", f.path}, {"sha256", f.sha256}, {"bytes", f.bytes}});
  }
  io::write_file_atomic(out_dir / "manifest.json", manifest.dump(1) + "\n");
  return bundle;
}

}  // namespace orbitbench::report
