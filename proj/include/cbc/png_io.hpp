#pragma once

#include <filesystem>

#include "cbc/imaging.hpp"

namespace cbc {

// 8-bit PNG, no ancillary chunks, fixed zlib settings: identical rasters give identical files.
void write_png(const RgbImage& image, const std::filesystem::path& path);
void write_png(const GrayImage& image, const std::filesystem::path& path);

/// Reads gray, gray+alpha, RGB or RGBA 8-bit PNGs as RGB (alpha dropped, gray replicated).
RgbImage read_png_rgb(const std::filesystem::path& path);
/// Reads an intensity image: channel 0 of the RGB expansion.
GrayImage read_png_gray(const std::filesystem::path& path);

}  // namespace cbc
