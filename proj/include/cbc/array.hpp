#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <span>
#include <vector>

namespace cbc {

inline constexpr double kPi = std::numbers::pi;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;
};

/// Square sampling grid. The optical axis sits on sample (n/2, n/2).
struct GridSpec {
    std::size_t n = 1000;
    double pitch = 10e-6;  // metres

    double extent() const { return static_cast<double>(n) * pitch; }
    void validate() const;
};

/// Geometry of the 8-bit image encodings, in native samples.
struct ImagingGeometry {
    std::size_t intensity_crop = 100;
    std::size_t phase_crop = 512;
    std::size_t image_size = 256;

    void validate() const;
};

struct FibreArrayConfig {
    int rings = 2;  // centre + 2 rings = 19 fibres
    double fibre_radius = 500e-6;
    double centre_pitch = 1e-3;
    double gaussian_radius = 400e-6;  // 1/e^2 intensity radius
    double wavelength = 1e-6;
    double focal_distance = 0.25;
    GridSpec grid;
    // Use only the first `active_fibres` lattice sites (0 = full rings).
    std::size_t active_fibres = 0;
    bool band_limit = true;
    bool spherical_lens = false;
    ImagingGeometry imaging;

    std::size_t fibre_count() const;
    void validate() const;
};

/// Piston phases in radians, index 0 = central fibre (always 0).
struct PhaseVector {
    std::vector<double> phases;

    PhaseVector() = default;
    explicit PhaseVector(std::vector<double> values) : phases(std::move(values)) {}

    static PhaseVector zeros(std::size_t count) { return PhaseVector(std::vector<double>(count, 0.0)); }

    std::size_t size() const { return phases.size(); }
    double& operator[](std::size_t i) { return phases[i]; }
    double operator[](std::size_t i) const { return phases[i]; }

    /// Throws std::invalid_argument unless every entry is in (-pi, pi] and entry 0 is zero.
    void validate() const;
    bool operator==(const PhaseVector&) const = default;
};

/// n x n complex samples, row-major (row = y, column = x).
struct ComplexField {
    std::size_t n = 0;
    double pitch = 0.0;
    std::vector<std::complex<double>> samples;

    ComplexField() = default;
    ComplexField(std::size_t side, double sample_pitch)
        : n(side), pitch(sample_pitch), samples(side * side) {}

    std::complex<double>& at(std::size_t row, std::size_t col) { return samples[row * n + col]; }
    const std::complex<double>& at(std::size_t row, std::size_t col) const { return samples[row * n + col]; }
};

/// Coordinate of sample index `i` relative to the axis sample n/2.
inline double sample_coordinate(std::size_t i, std::size_t n, double pitch) {
    return (static_cast<double>(i) - static_cast<double>(n / 2)) * pitch;
}

std::size_t hex_fibre_count(int rings);

/// Triangular-lattice sites ring by ring; each ring starts on +x and runs counter-clockwise.
std::vector<Vec2> hex_positions(int rings, double centre_pitch);

/// Positions of the fibres actually present in `config`.
std::vector<Vec2> fibre_positions(const FibreArrayConfig& config);

/// Index map for rotating the full lattice by `steps` x 60 degrees:
/// site i moves to site result[i].
std::vector<std::size_t> ring_rotation_permutation(int rings, int steps);

/// Index map for the point reflection through the origin.
std::vector<std::size_t> point_reflection_permutation(int rings);

/// Apply a site permutation: out[perm[i]] = in[i].
PhaseVector permute_phases(const PhaseVector& phases, std::span<const std::size_t> perm);

PhaseVector random_phase_vector(std::size_t fibre_count, std::uint64_t seed);

/// Wrap to (-pi, pi]. Throws std::invalid_argument on non-finite input.
double wrap_phase(double angle);

/// Subtract entry 0 from every entry and wrap, so the central fibre reads zero.
PhaseVector rereference(const PhaseVector& phases);

/// Field at the fibre exit plane: truncated Gaussian per disc carrying its piston phase.
ComplexField assemble_field(const FibreArrayConfig& config, const PhaseVector& phases);

/// Which fibre each sample belongs to (-1 outside every disc), row-major n x n.
std::vector<int> fibre_membership(const FibreArrayConfig& config);

/// Closed-form power of one truncated Gaussian fibre mode.
double truncated_gaussian_power(double gaussian_radius, double fibre_radius);

}  // namespace cbc
