// PNG and raw-depth file output for frame buffers. All writers go through a
// temporary file and a rename so interrupted runs never leave partial files.
#pragma once

#include "orbitbench/raster.hpp"

#include <cstdint>
#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace orbitbench::io {

void write_rgb_png(const std::filesystem::path& path, int width, int height,
                   std::span<const std::uint8_t> rgb);

// 16-bit single-channel PNG; throws IoError if an id exceeds 65535.
void write_id_png(const std::filesystem::path& path, int width, int height,
                  std::span<const std::uint32_t> ids);

// Little-endian 32-bit floats, row-major, no header.
void write_depth_f32(const std::filesystem::path& path, std::span<const float> depth);

struct PngImage {
  int width = 0;
  int height = 0;
  int channels = 0;
  int bit_depth = 0;
  std::vector<std::uint16_t> samples;  // row-major, interleaved channels
};

PngImage read_png(const std::filesystem::path& path);

// Writes bytes to path atomically, creating parent directories.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

std::string read_file(const std::filesystem::path& path);

}  // namespace orbitbench::io
