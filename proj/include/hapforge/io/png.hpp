#pragma once

#include <cstdint>
#include <filesystem>

#include "hapforge/core/grid.hpp"
#include "hapforge/core/image.hpp"

namespace hapforge::io {

void write_png_gray8(const std::filesystem::path& path, const Grid<std::uint8_t>& pixels);
void write_png_gray16(const std::filesystem::path& path, const Grid<std::uint16_t>& pixels);
/// Values are clamped to [0,1] and rounded to the nearest 8-bit level.
void write_png_rgb8(const std::filesystem::path& path, const RgbImage& image);

/// Any 8-bit PNG; colour inputs are reduced with the luma weights.
Grid<std::uint8_t> read_png_gray8(const std::filesystem::path& path);
/// 16-bit grayscale PNG (8-bit files are widened by 257).
Grid<std::uint16_t> read_png_gray16(const std::filesystem::path& path);
/// Any 8-bit PNG, returned as RGB in [0,1].
RgbImage read_png_rgb8(const std::filesystem::path& path);

/// Unit-range grid -> 8-bit levels (round half up, clamped).
Grid<std::uint8_t> quantize8(const Grid<double>& unit);

}  // namespace hapforge::io
