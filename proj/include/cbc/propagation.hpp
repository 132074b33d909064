#pragma once

#include <complex>
#include <cstddef>
#include <filesystem>
#include <vector>

#include "cbc/array.hpp"

namespace cbc {

/// |E|^2 on an n x n grid; the optical axis sits on sample (n/2, n/2).
struct IntensityMap {
    std::size_t n = 0;
    double pitch = 0.0;
    std::vector<double> values;

    IntensityMap() = default;
    IntensityMap(std::size_t side, double sample_pitch) : n(side), pitch(sample_pitch), values(side * side) {}

    double& at(std::size_t row, std::size_t col) { return values[row * n + col]; }
    double at(std::size_t row, std::size_t col) const { return values[row * n + col]; }
};

/// Thin lens: multiplies by exp(-i pi rho^2 / (lambda f)), rho measured from the grid centre.
/// With `spherical` the exact-sphere phase -k (sqrt(rho^2 + f^2) - f) is used instead.
ComplexField apply_lens(const ComplexField& field, double focal_length, double wavelength, bool spherical = false);

/// Band-limited angular spectrum propagation over `distance`.
/// Evanescent components are dropped; with `band_limit` the
/// frequency limit 1 / (lambda sqrt((2 du z)^2 + 1)), du = 1/(2 n pitch), is applied per axis.
ComplexField angular_spectrum(const ComplexField& field, double distance, double wavelength, bool band_limit = true);

/// Adjoint of angular_spectrum (conjugate transfer function, same mask). Used for back-propagation.
ComplexField angular_spectrum_adjoint(const ComplexField& field, double distance, double wavelength,
                                      bool band_limit = true);

/// Fibre plane -> lens -> focal plane.
ComplexField focal_field(const FibreArrayConfig& config, const PhaseVector& phases);

/// Fibre-plane field of config/phases, propagated through the lens to the focal plane.
ComplexField propagate_to_focus(const FibreArrayConfig& config, const ComplexField& fibre_plane);
/// Adjoint of propagate_to_focus.
ComplexField propagate_from_focus(const FibreArrayConfig& config, const ComplexField& focal_plane);

IntensityMap intensity_of(const ComplexField& field);

/// Sum of |E|^2 (or of map values) times pitch^2.
double total_power(const ComplexField& field);
double total_power(const IntensityMap& map);

/// Central `side` x `side` window (about the axis sample) of a larger field.
ComplexField central_window(const ComplexField& field, std::size_t side);

/// Trigonometric interpolation onto a grid `factor` times finer (pitch / factor). Exact for
/// the periodic, band-limited fields the angular spectrum produces; the axis stays on sample m/2.
ComplexField fourier_upsample(const ComplexField& field, std::size_t factor);

/// Debug dump: `<prefix>_re.f32` and `<prefix>_im.f32`, row-major little-endian float32.
void dump_field(const ComplexField& field, const std::filesystem::path& prefix);

/// Focal responses of each fibre on its own, restricted to a central window,
/// plus their full-plane Gram matrix. By linearity the focal field for any
/// phase vector is the coherent sum sum_k exp(i phi_k) F_k, so the window
/// field and the full-plane power come out without a transform.
/// Immutable after construction; safe to share between threads.
class FocalBasis {
public:
    FocalBasis(const FibreArrayConfig& config, std::size_t window);

    std::size_t fibre_count() const { return modes_.size(); }
    std::size_t window() const { return window_; }
    double pitch() const { return pitch_; }
    const FibreArrayConfig& config() const { return config_; }

    const ComplexField& mode(std::size_t k) const { return modes_[k]; }
    /// <F_j, F_k> over the full plane, in units of power (pitch^2 included).
    std::complex<double> gram(std::size_t j, std::size_t k) const { return gram_[j * modes_.size() + k]; }

    ComplexField field(const PhaseVector& phases) const;
    IntensityMap intensity(const PhaseVector& phases) const;
    /// Full-plane focal power.
    double total_power(const PhaseVector& phases) const;
    /// Full-plane focal power for arbitrary complex fibre weights.
    double total_power(const std::vector<std::complex<double>>& weights) const;

private:
    FibreArrayConfig config_;
    std::size_t window_;
    double pitch_;
    std::vector<ComplexField> modes_;
    std::vector<std::complex<double>> gram_;
};

}  // namespace cbc
