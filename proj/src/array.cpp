#include "cbc/array.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "cbc/rng.hpp"

namespace cbc {

namespace {

// Samples lying on a disc boundary (where neighbouring discs touch) belong
// to no fibre; the slack absorbs rounding in the squared distance.
constexpr double kBoundarySlack = 1e-9;

bool inside_disc(double dx, double dy, double radius) {
    return dx * dx + dy * dy < radius * radius * (1.0 - kBoundarySlack);
}

}  // namespace

void GridSpec::validate() const {
    if (n < 2 || n % 2 != 0) {
        throw std::invalid_argument("grid: n must be even and >= 2, got " + std::to_string(n));
    }
    if (!(pitch > 0.0) || !std::isfinite(pitch)) {
        throw std::invalid_argument("grid: pitch must be positive");
    }
}

void ImagingGeometry::validate() const {
    if (intensity_crop < 2 || phase_crop < 2 || image_size < 2) {
        throw std::invalid_argument("imaging: crop and image sizes must be >= 2");
    }
}

std::size_t FibreArrayConfig::fibre_count() const {
    const std::size_t full = hex_fibre_count(rings);
    return active_fibres == 0 ? full : std::min(active_fibres, full);
}

void FibreArrayConfig::validate() const {
    grid.validate();
    imaging.validate();
    if (rings < 0) throw std::invalid_argument("config: rings must be >= 0");
    if (!(fibre_radius > 0.0)) throw std::invalid_argument("config: fibre_radius must be positive");
    if (!(centre_pitch > 0.0)) throw std::invalid_argument("config: centre_pitch must be positive");
    if (!(gaussian_radius > 0.0) || !(gaussian_radius < fibre_radius)) {
        throw std::invalid_argument("config: need 0 < gaussian_radius < fibre_radius");
    }
    if (!(wavelength > 0.0)) throw std::invalid_argument("config: wavelength must be positive");
    if (!(focal_distance > 0.0)) throw std::invalid_argument("config: focal_distance must be positive");
    if (active_fibres > hex_fibre_count(rings)) {
        throw std::invalid_argument("config: active_fibres exceeds the lattice size");
    }
    // Sample coordinates run from -n/2 to n/2-1 pitches.
    const double lo = -static_cast<double>(grid.n / 2) * grid.pitch;
    const double hi = static_cast<double>(grid.n / 2 - 1) * grid.pitch;
    for (const Vec2& p : fibre_positions(*this)) {
        if (p.x - fibre_radius < lo || p.x + fibre_radius > hi || p.y - fibre_radius < lo ||
            p.y + fibre_radius > hi) {
            throw std::invalid_argument("config: fibre array does not fit inside the grid");
        }
    }
}

void PhaseVector::validate() const {
    if (phases.empty()) throw std::invalid_argument("phase vector is empty");
    if (phases[0] != 0.0) throw std::invalid_argument("phase vector: central fibre phase must be 0");
    for (double p : phases) {
        if (!std::isfinite(p) || p <= -kPi || p > kPi) {
            throw std::invalid_argument("phase vector: entries must lie in (-pi, pi]");
        }
    }
}

std::size_t hex_fibre_count(int rings) {
    if (rings < 0) throw std::invalid_argument("hex lattice: rings must be >= 0");
    const auto r = static_cast<std::size_t>(rings);
    return 3 * r * (r + 1) + 1;
}

std::vector<Vec2> hex_positions(int rings, double centre_pitch) {
    if (rings < 0) throw std::invalid_argument("hex_positions: rings must be >= 0");
    if (!(centre_pitch > 0.0)) throw std::invalid_argument("hex_positions: centre_pitch must be positive");

    std::vector<Vec2> out;
    out.reserve(hex_fibre_count(rings));
    out.push_back({0.0, 0.0});
    for (int r = 1; r <= rings; ++r) {
        const double radius = r * centre_pitch;
        for (int side = 0; side < 6; ++side) {
            const double a0 = side * kPi / 3.0;
            const double a1 = (side + 1) * kPi / 3.0;
            const Vec2 c0{radius * std::cos(a0), radius * std::sin(a0)};
            const Vec2 c1{radius * std::cos(a1), radius * std::sin(a1)};
            for (int t = 0; t < r; ++t) {
                const double s = static_cast<double>(t) / r;
                out.push_back({c0.x + s * (c1.x - c0.x), c0.y + s * (c1.y - c0.y)});
            }
        }
    }
    return out;
}

std::vector<Vec2> fibre_positions(const FibreArrayConfig& config) {
    auto all = hex_positions(config.rings, config.centre_pitch);
    all.resize(config.fibre_count());
    return all;
}

std::vector<std::size_t> ring_rotation_permutation(int rings, int steps) {
    std::vector<std::size_t> perm(hex_fibre_count(rings));
    perm[0] = 0;
    for (int r = 1; r <= rings; ++r) {
        const std::size_t base = 3 * static_cast<std::size_t>(r) * (r - 1) + 1;
        const int len = 6 * r;
        const int shift = ((steps % 6 + 6) % 6) * r;
        for (int j = 0; j < len; ++j) {
            perm[base + j] = base + static_cast<std::size_t>((j + shift) % len);
        }
    }
    return perm;
}

std::vector<std::size_t> point_reflection_permutation(int rings) {
    return ring_rotation_permutation(rings, 3);
}

PhaseVector permute_phases(const PhaseVector& phases, std::span<const std::size_t> perm) {
    if (perm.size() != phases.size()) {
        throw std::invalid_argument("permute_phases: permutation size mismatch");
    }
    PhaseVector out = PhaseVector::zeros(phases.size());
    for (std::size_t i = 0; i < perm.size(); ++i) out[perm[i]] = phases[i];
    return out;
}

PhaseVector random_phase_vector(std::size_t fibre_count, std::uint64_t seed) {
    if (fibre_count < 1) throw std::invalid_argument("random_phase_vector: fibre_count must be >= 1");
    Rng rng(seed);
    PhaseVector out = PhaseVector::zeros(fibre_count);
    // u in [0, 1) maps onto (-pi, pi].
    for (std::size_t k = 1; k < fibre_count; ++k) out[k] = kPi - 2.0 * kPi * uniform_unit(rng);
    return out;
}

double wrap_phase(double angle) {
    if (!std::isfinite(angle)) throw std::invalid_argument("wrap_phase: non-finite angle");
    double r = std::remainder(angle, 2.0 * kPi);
    if (r <= -kPi) r += 2.0 * kPi;
    return r;
}

PhaseVector rereference(const PhaseVector& phases) {
    if (phases.size() == 0) return phases;
    PhaseVector out = phases;
    const double ref = phases[0];
    for (double& p : out.phases) p = wrap_phase(p - ref);
    out[0] = 0.0;
    return out;
}

namespace {

// Visit every sample strictly inside each disc.
template <typename Visit>
void for_each_disc_sample(const FibreArrayConfig& config, Visit&& visit) {
    const std::size_t n = config.grid.n;
    const double pitch = config.grid.pitch;
    const double half = static_cast<double>(n / 2);
    const auto centres = fibre_positions(config);
    for (std::size_t k = 0; k < centres.size(); ++k) {
        const Vec2 c = centres[k];
        const auto lo_col = static_cast<long>(std::floor((c.x - config.fibre_radius) / pitch + half));
        const auto hi_col = static_cast<long>(std::ceil((c.x + config.fibre_radius) / pitch + half));
        const auto lo_row = static_cast<long>(std::floor((c.y - config.fibre_radius) / pitch + half));
        const auto hi_row = static_cast<long>(std::ceil((c.y + config.fibre_radius) / pitch + half));
        for (long row = std::max(0L, lo_row); row <= std::min<long>(n - 1, hi_row); ++row) {
            const double dy = sample_coordinate(static_cast<std::size_t>(row), n, pitch) - c.y;
            for (long col = std::max(0L, lo_col); col <= std::min<long>(n - 1, hi_col); ++col) {
                const double dx = sample_coordinate(static_cast<std::size_t>(col), n, pitch) - c.x;
                if (inside_disc(dx, dy, config.fibre_radius)) {
                    visit(k, static_cast<std::size_t>(row), static_cast<std::size_t>(col), dx * dx + dy * dy);
                }
            }
        }
    }
}

}  // namespace

ComplexField assemble_field(const FibreArrayConfig& config, const PhaseVector& phases) {
    config.validate();
    if (phases.size() != config.fibre_count()) {
        throw std::invalid_argument("assemble_field: phase vector length " + std::to_string(phases.size()) +
                                    " does not match fibre count " + std::to_string(config.fibre_count()));
    }
    ComplexField field(config.grid.n, config.grid.pitch);
    const double w2 = config.gaussian_radius * config.gaussian_radius;
    std::vector<std::complex<double>> piston(phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) piston[k] = std::polar(1.0, phases[k]);
    for_each_disc_sample(config, [&](std::size_t k, std::size_t row, std::size_t col, double r2) {
        field.at(row, col) = std::exp(-r2 / w2) * piston[k];
    });
    return field;
}

std::vector<int> fibre_membership(const FibreArrayConfig& config) {
    config.validate();
    std::vector<int> owner(config.grid.n * config.grid.n, -1);
    for_each_disc_sample(config, [&](std::size_t k, std::size_t row, std::size_t col, double) {
        owner[row * config.grid.n + col] = static_cast<int>(k);
    });
    return owner;
}

double truncated_gaussian_power(double gaussian_radius, double fibre_radius) {
    const double w2 = gaussian_radius * gaussian_radius;
    return 0.5 * kPi * w2 * (1.0 - std::exp(-2.0 * fibre_radius * fibre_radius / w2));
}

}  // namespace cbc
