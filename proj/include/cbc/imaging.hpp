#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include "cbc/array.hpp"
#include "cbc/propagation.hpp"

namespace cbc {

/// Single-channel 8-bit raster, row-major.
struct GrayImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    GrayImage() = default;
    GrayImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(w * h) {}

    std::uint8_t& at(std::size_t row, std::size_t col) { return pixels[row * width + col]; }
    std::uint8_t at(std::size_t row, std::size_t col) const { return pixels[row * width + col]; }
    bool operator==(const GrayImage&) const = default;
};

/// Interleaved RGB 8-bit raster, row-major.
struct RgbImage {
    std::size_t width = 0;
    std::size_t height = 0;
    std::vector<std::uint8_t> pixels;

    RgbImage() = default;
    RgbImage(std::size_t w, std::size_t h) : width(w), height(h), pixels(3 * w * h) {}

    std::uint8_t& at(std::size_t row, std::size_t col, int channel) { return pixels[3 * (row * width + col) + channel]; }
    std::uint8_t at(std::size_t row, std::size_t col, int channel) const {
        return pixels[3 * (row * width + col) + channel];
    }
    bool operator==(const RgbImage&) const = default;
};

using IntensityImage = GrayImage;
using PhaseImage = RgbImage;

struct NoiseSpec {
    double units = 0.0;
    std::uint64_t seed = 0;
    // Per-pixel std = units^exponent * sqrt(p). 1 reads "u units" as u x sqrt(p);
    // 0.5 reads it as sqrt(u p).
    double exponent = 1.0;
};

struct RenderedIntensity {
    IntensityImage image;
    bool degenerate = false;  // all-zero input
};

/// Mapping between a square raster and the native grid. Raster pixel i has its
/// centre at native sample n/2 + (i - axis) * crop/size. Resized rasters put the
/// optical axis on the raster centre (axis = size/2 - 0.5); the native raster
/// keeps it on sample n/2.
struct RasterGeometry {
    std::size_t crop = 0;  // native samples spanned
    std::size_t size = 0;  // output pixels per side
    double axis = 0.0;     // raster coordinate of the optical axis

    static RasterGeometry centred(std::size_t crop, std::size_t size) {
        return {crop, size, 0.5 * static_cast<double>(size) - 0.5};
    }
    static RasterGeometry native(std::size_t n) { return {n, n, static_cast<double>(n / 2)}; }

    double scale() const { return static_cast<double>(crop) / static_cast<double>(size); }
    /// Raster pixel coordinate of a physical offset from the axis.
    double pixel_of(double offset, double pitch) const { return offset / (pitch * scale()) + axis; }
    /// Physical offset from the axis of a raster pixel coordinate.
    double offset_of(double pixel, double pitch) const { return (pixel - axis) * scale() * pitch; }
};

RasterGeometry intensity_raster(const FibreArrayConfig& config);
RasterGeometry phase_raster(const FibreArrayConfig& config);
RasterGeometry native_phase_raster(const FibreArrayConfig& config);

/// Bilinear sample of a row-major n x n grid at fractional (row, col); edges clamp.
double bilinear(const std::vector<double>& grid, std::size_t n, double row, double col);

/// Crop-and-resize in one bilinear resampling step (see RasterGeometry).
std::vector<double> resample_central(const std::vector<double>& grid, std::size_t n, const RasterGeometry& geometry);

/// Crop the focal map, resize, scale so the maximum reads 255, and round.
RenderedIntensity render_intensity_image(const IntensityMap& map, const ImagingGeometry& imaging = {});

/// Float-valued rendering before normalisation (the resampled crop).
std::vector<double> resample_intensity(const IntensityMap& map, const ImagingGeometry& imaging = {});

/// Native-resolution phase raster: R = round(255 (cos + 1)/2), B = round(255 (sin + 1)/2), G = 0 inside discs.
PhaseImage render_phase_raster_native(const FibreArrayConfig& config, const PhaseVector& phases);

/// Native raster cropped and resized to the configured image size.
PhaseImage render_phase_image(const FibreArrayConfig& config, const PhaseVector& phases);

/// Circular mean of each disc's decoded angle over pixels within 50% of the disc radius,
/// re-referenced so the central fibre reads zero. Throws GeometryError when a mask is empty.
PhaseVector decode_phase_image(const PhaseImage& image, const FibreArrayConfig& config, const RasterGeometry& geometry);
/// Decode a pipeline-sized image; native-sized images are also recognised.
PhaseVector decode_phase_image(const PhaseImage& image, const FibreArrayConfig& config);

std::uint8_t encode_unit(double x);
double decode_unit(std::uint8_t b);

IntensityImage add_noise(const IntensityImage& image, const NoiseSpec& spec);

RgbImage gray_to_rgb(const GrayImage& image);
/// Channel 0 of an RGB raster (intensity images are stored with equal channels).
GrayImage rgb_to_gray(const RgbImage& image);

}  // namespace cbc
