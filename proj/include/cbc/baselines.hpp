#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "cbc/array.hpp"
#include "cbc/metrics.hpp"
#include "cbc/propagation.hpp"

namespace cbc {

/// Nearest point of the fibre constraint set: each disc keeps its Gaussian
/// amplitude and takes one piston phase, arg sum(A * field) over the disc
/// (the amplitude-weighted circular mean). Re-referenced to the central fibre.
class FibreProjector {
public:
    explicit FibreProjector(const FibreArrayConfig& config);

    std::size_t fibre_count() const { return count_; }
    PhaseVector project(const ComplexField& fibre_plane) const;
    ComplexField synthesise(const PhaseVector& phases) const;

private:
    FibreArrayConfig config_;
    std::size_t count_;
    std::vector<std::size_t> index_;
    std::vector<int> owner_;
    std::vector<double> amplitude_;
};

struct GsResult {
    PhaseVector phases;
    // ||(|E| - sqrt(target))|| / ||sqrt(target)|| of the estimate entering each iteration.
    std::vector<double> amplitude_error;
};

/// Gerchberg-Saxton between the fibre plane and the focal plane on the full grid.
/// Without `init` the estimate starts flat.
GsResult gs_run(const IntensityMap& target, const FibreArrayConfig& config, std::size_t iterations,
                const std::optional<PhaseVector>& init = std::nullopt);
PhaseVector gs_retrieve(const IntensityMap& target, const FibreArrayConfig& config, std::size_t iterations,
                        const std::optional<PhaseVector>& init = std::nullopt);

/// gs_retrieve followed by a twin check: the result conjugated and point-reflected is polished
/// for `twin_iterations` and kept if its amplitude error is lower. Intensity alone cannot order
/// the two starts, but they reach different error floors.
PhaseVector gs_retrieve_resolved(const IntensityMap& target, const FibreArrayConfig& config, std::size_t iterations,
                                 const PhaseVector& init, std::size_t twin_iterations = 50);

/// Focal-plane target known only on the central window of a FocalBasis, up to scale.
struct WindowTarget {
    std::vector<double> intensity;  // window x window, row-major
    std::vector<unsigned char> known;  // 1 where the target constrains the field
};

/// Target for a FocalBasis built from an 8-bit intensity image: every window sample
/// inside the imaged crop is the least-squares inverse of the bilinear resize.
WindowTarget window_target_from_image(const IntensityImage& image, const FocalBasis& basis);

struct ModalGsResult {
    PhaseVector phases;
    double residual = 0.0;  // normalised L1 on the known samples after scale matching
};

/// Gerchberg-Saxton carried out in the span of the per-fibre focal modes. The
/// amplitude is replaced only where the target is known, and the target is
/// rescaled to the estimate's power there each round. With the whole plane known
/// this is the same iteration as gs_run.
ModalGsResult modal_gs(const FocalBasis& basis, const WindowTarget& target, std::size_t iterations,
                       const PhaseVector& init);

/// Scale-matched normalised L1 between the estimate's window intensity and the target.
double window_residual(const FocalBasis& basis, const WindowTarget& target, const PhaseVector& phases);

struct SpgdParams {
    double perturbation = 0.1;  // radians per fibre per step
    double gain = 0.6;
    std::size_t max_iters = 2000;
    double target_pib = 95.0;  // stop once the objective reaches this
    std::uint64_t seed = 0;
};

struct SpgdResult {
    PhaseVector phases;  // best seen
    double best = 0.0;
    std::vector<double> trace;  // best objective seen after each iteration
    std::size_t iterations = 0;
    bool reached = false;
    bool aborted = false;  // objective returned a non-finite value
    std::string message;
};

using Objective = std::function<double(const PhaseVector&)>;

/// Two-sided SPGD maximising `objective` from `init`. The central fibre is never perturbed.
SpgdResult spgd_optimize(const Objective& objective, const PhaseVector& init, const SpgdParams& params);

/// Fast focal PIB of a phase vector: bucket power from the basis window, total from the Gram matrix.
class PibEvaluator {
public:
    /// `bucket` in native map coordinates.
    PibEvaluator(const FocalBasis& basis, const BucketSpec& bucket);
    double operator()(const PhaseVector& phases) const;

private:
    const FocalBasis* basis_;
    BucketSpec bucket_;
    std::vector<std::size_t> inside_;
};

/// {2 pi k / levels - pi}, wrapped to (-pi, pi].
std::vector<double> phase_grid(std::size_t levels);

/// Exhaustive search of the phase grid for every non-central fibre, minimising the
/// full-plane L2 distance to `target`. Throws std::invalid_argument when
/// levels^(fibres - 1) exceeds 1e7.
PhaseVector brute_force_retrieve(const IntensityMap& target, const FibreArrayConfig& config, std::size_t levels);

}  // namespace cbc
