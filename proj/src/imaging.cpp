#include "cbc/imaging.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <string>

#include "cbc/errors.hpp"
#include "cbc/rng.hpp"

namespace cbc {

RasterGeometry intensity_raster(const FibreArrayConfig& config) {
    return RasterGeometry::centred(config.imaging.intensity_crop, config.imaging.image_size);
}

RasterGeometry phase_raster(const FibreArrayConfig& config) {
    return RasterGeometry::centred(config.imaging.phase_crop, config.imaging.image_size);
}

RasterGeometry native_phase_raster(const FibreArrayConfig& config) { return RasterGeometry::native(config.grid.n); }

double bilinear(const std::vector<double>& grid, std::size_t n, double row, double col) {
    const double max_index = static_cast<double>(n - 1);
    row = std::clamp(row, 0.0, max_index);
    col = std::clamp(col, 0.0, max_index);
    const auto r0 = static_cast<std::size_t>(std::floor(row));
    const auto c0 = static_cast<std::size_t>(std::floor(col));
    const std::size_t r1 = std::min(r0 + 1, n - 1);
    const std::size_t c1 = std::min(c0 + 1, n - 1);
    const double fr = row - static_cast<double>(r0);
    const double fc = col - static_cast<double>(c0);
    const double top = grid[r0 * n + c0] * (1.0 - fc) + grid[r0 * n + c1] * fc;
    const double bottom = grid[r1 * n + c0] * (1.0 - fc) + grid[r1 * n + c1] * fc;
    return top * (1.0 - fr) + bottom * fr;
}

std::vector<double> resample_central(const std::vector<double>& grid, std::size_t n, const RasterGeometry& g) {
    if (g.size == 0 || g.crop == 0) throw std::invalid_argument("resample: empty geometry");
    if (g.crop > n) throw std::invalid_argument("resample: crop larger than the source grid");
    std::vector<double> out(g.size * g.size);
    const double axis = static_cast<double>(n / 2);
    std::vector<double> src(g.size);
    for (std::size_t i = 0; i < g.size; ++i) {
        src[i] = axis + (static_cast<double>(i) - g.axis) * g.scale();
    }
    for (std::size_t r = 0; r < g.size; ++r) {
        for (std::size_t c = 0; c < g.size; ++c) out[r * g.size + c] = bilinear(grid, n, src[r], src[c]);
    }
    return out;
}

std::vector<double> resample_intensity(const IntensityMap& map, const ImagingGeometry& imaging) {
    return resample_central(map.values, map.n, RasterGeometry::centred(imaging.intensity_crop, imaging.image_size));
}

RenderedIntensity render_intensity_image(const IntensityMap& map, const ImagingGeometry& imaging) {
    const std::vector<double> values = resample_intensity(map, imaging);
    RenderedIntensity out;
    out.image = IntensityImage(imaging.image_size, imaging.image_size);
    const double peak = *std::max_element(values.begin(), values.end());
    if (!(peak > 0.0)) {
        out.degenerate = true;
        return out;
    }
    const double scale = 255.0 / peak;
    for (std::size_t i = 0; i < values.size(); ++i) {
        out.image.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::round(values[i] * scale), 0.0, 255.0));
    }
    return out;
}

std::uint8_t encode_unit(double x) {
    return static_cast<std::uint8_t>(std::clamp(std::round(255.0 * (x + 1.0) / 2.0), 0.0, 255.0));
}

double decode_unit(std::uint8_t b) { return (static_cast<double>(b) - 127.5) / 127.5; }

PhaseImage render_phase_raster_native(const FibreArrayConfig& config, const PhaseVector& phases) {
    config.validate();
    if (phases.size() != config.fibre_count()) {
        throw std::invalid_argument("render_phase_image: phase vector length does not match fibre count");
    }
    const std::size_t n = config.grid.n;
    const std::vector<int> owner = fibre_membership(config);
    PhaseImage out(n, n);
    for (std::size_t i = 0; i < owner.size(); ++i) {
        if (owner[i] < 0) continue;
        const double phi = phases[static_cast<std::size_t>(owner[i])];
        out.pixels[3 * i + 0] = encode_unit(std::cos(phi));
        out.pixels[3 * i + 2] = encode_unit(std::sin(phi));
    }
    return out;
}

PhaseImage render_phase_image(const FibreArrayConfig& config, const PhaseVector& phases) {
    const PhaseImage native = render_phase_raster_native(config, phases);
    const std::size_t n = native.width;
    const RasterGeometry g = phase_raster(config);
    PhaseImage out(g.size, g.size);
    std::vector<double> channel(n * n);
    for (int ch : {0, 2}) {
        for (std::size_t i = 0; i < n * n; ++i) channel[i] = native.pixels[3 * i + ch];
        const std::vector<double> resized = resample_central(channel, n, g);
        for (std::size_t i = 0; i < resized.size(); ++i) {
            out.pixels[3 * i + ch] = static_cast<std::uint8_t>(std::clamp(std::round(resized[i]), 0.0, 255.0));
        }
    }
    return out;
}

PhaseVector decode_phase_image(const PhaseImage& image, const FibreArrayConfig& config, const RasterGeometry& g) {
    if (image.width != g.size || image.height != g.size) {
        throw std::invalid_argument("decode_phase_image: image is " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + ", expected " + std::to_string(g.size));
    }
    const double pitch = config.grid.pitch;
    const double radius_px = 0.5 * config.fibre_radius / (pitch * g.scale());
    const auto centres = fibre_positions(config);
    PhaseVector out = PhaseVector::zeros(centres.size());
    for (std::size_t k = 0; k < centres.size(); ++k) {
        const double cc = g.pixel_of(centres[k].x, pitch);
        const double cr = g.pixel_of(centres[k].y, pitch);
        const long r_lo = std::max(0L, static_cast<long>(std::floor(cr - radius_px)));
        const long r_hi = std::min(static_cast<long>(g.size) - 1, static_cast<long>(std::ceil(cr + radius_px)));
        const long c_lo = std::max(0L, static_cast<long>(std::floor(cc - radius_px)));
        const long c_hi = std::min(static_cast<long>(g.size) - 1, static_cast<long>(std::ceil(cc + radius_px)));
        double sx = 0.0;
        double sy = 0.0;
        std::size_t used = 0;
        for (long r = r_lo; r <= r_hi; ++r) {
            for (long c = c_lo; c <= c_hi; ++c) {
                const double dr = static_cast<double>(r) - cr;
                const double dc = static_cast<double>(c) - cc;
                if (dr * dr + dc * dc > radius_px * radius_px) continue;
                const auto ur = static_cast<std::size_t>(r);
                const auto uc = static_cast<std::size_t>(c);
                const double angle = std::atan2(decode_unit(image.at(ur, uc, 2)), decode_unit(image.at(ur, uc, 0)));
                sx += std::cos(angle);
                sy += std::sin(angle);
                ++used;
            }
        }
        if (used == 0) throw GeometryError("decode_phase_image: empty mask for fibre " + std::to_string(k));
        out[k] = std::atan2(sy, sx);
    }
    return rereference(out);
}

PhaseVector decode_phase_image(const PhaseImage& image, const FibreArrayConfig& config) {
    if (image.width == config.grid.n && image.width != config.imaging.image_size) {
        return decode_phase_image(image, config, native_phase_raster(config));
    }
    return decode_phase_image(image, config, phase_raster(config));
}

IntensityImage add_noise(const IntensityImage& image, const NoiseSpec& spec) {
    if (!(spec.units >= 0.0)) throw std::invalid_argument("add_noise: units must be >= 0");
    if (spec.units == 0.0) return image;
    IntensityImage out = image;
    Rng rng(spec.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double amplitude = std::pow(spec.units, spec.exponent);
    for (auto& p : out.pixels) {
        // Draw for every pixel so the stream position does not depend on content.
        const double g = gauss(rng);
        const double v = static_cast<double>(p);
        p = static_cast<std::uint8_t>(std::clamp(std::round(v + amplitude * std::sqrt(v) * g), 0.0, 255.0));
    }
    return out;
}

RgbImage gray_to_rgb(const GrayImage& image) {
    RgbImage out(image.width, image.height);
    for (std::size_t i = 0; i < image.pixels.size(); ++i) {
        out.pixels[3 * i] = out.pixels[3 * i + 1] = out.pixels[3 * i + 2] = image.pixels[i];
    }
    return out;
}

GrayImage rgb_to_gray(const RgbImage& image) {
    GrayImage out(image.width, image.height);
    for (std::size_t i = 0; i < out.pixels.size(); ++i) out.pixels[i] = image.pixels[3 * i];
    return out;
}

}  // namespace cbc
