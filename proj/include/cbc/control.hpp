#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "cbc/array.hpp"
#include "cbc/baselines.hpp"
#include "cbc/imaging.hpp"
#include "cbc/metrics.hpp"
#include "cbc/propagation.hpp"

namespace cbc {

/// wrap(current - predicted + target), then re-referenced so the central fibre reads zero.
PhaseVector correct(const PhaseVector& current, const PhaseVector& predicted, const PhaseVector& target);

/// Everything a trial needs to turn phases into images and scores. Not copyable:
/// the PIB evaluator points into the basis.
class SimulationContext {
public:
    explicit SimulationContext(const FibreArrayConfig& config, std::size_t window = 104);
    SimulationContext(const SimulationContext&) = delete;
    SimulationContext& operator=(const SimulationContext&) = delete;

    const FibreArrayConfig& config() const { return config_; }
    const FocalBasis& basis() const { return basis_; }
    const BucketSpec& bucket() const { return bucket_; }

    /// 8-bit intensity image of the phases (rendered from the basis window).
    IntensityImage render(const PhaseVector& phases) const;
    double power_in_bucket(const PhaseVector& phases) const { return pib_(phases); }

private:
    FibreArrayConfig config_;
    FocalBasis basis_;
    BucketSpec bucket_;
    PibEvaluator pib_;
};

/// Intensity image -> phase vector. Implementations must be safe for concurrent retrieve() calls.
class RetrievalEngine {
public:
    virtual ~RetrievalEngine() = default;
    virtual PhaseVector retrieve(const IntensityImage& image) const = 0;
    virtual std::string name() const = 0;
};

/// Phase vector -> intensity image.
class ReverseOperator {
public:
    virtual ~ReverseOperator() = default;
    virtual IntensityImage reconstruct(const PhaseVector& phases) const = 0;
    virtual std::string name() const = 0;
};

/// Always answers the flat vector, so correction changes nothing.
class IdentityEngine : public RetrievalEngine {
public:
    explicit IdentityEngine(std::size_t fibre_count) : count_(fibre_count) {}
    PhaseVector retrieve(const IntensityImage&) const override { return PhaseVector::zeros(count_); }
    std::string name() const override { return "identity"; }

private:
    std::size_t count_;
};

/// Lookup table of known (image, phases) pairs; answers the phases of the nearest image in L1.
class OracleEngine : public RetrievalEngine {
public:
    explicit OracleEngine(std::vector<std::pair<IntensityImage, PhaseVector>> table);
    PhaseVector retrieve(const IntensityImage& image) const override;
    std::string name() const override { return "oracle"; }

private:
    std::vector<std::pair<IntensityImage, PhaseVector>> table_;
};

struct GsEngineParams {
    std::size_t iterations = 200;
    std::size_t starts = 32;  // upper bound
    double good_enough = 0.05;  // stop once a start's residual is this low
    std::uint64_t seed = 0x9e3779b97f4a7c15ULL;
    // Iterations spent polishing the twin of each start (conjugated, point-reflected);
    // 0 disables the check. Skipped when the active fibres are not reflection-closed.
    std::size_t twin_iterations = 50;
};

/// Multi-start modal Gerchberg-Saxton against the image; keeps the start with the lowest
/// residual. Each start is compared with its twin, which has nearly the same intensity.
/// Starts follow a fixed seed sequence, so answers are deterministic.
class GsEngine : public RetrievalEngine {
public:
    GsEngine(const SimulationContext& context, GsEngineParams params = {});
    PhaseVector retrieve(const IntensityImage& image) const override;
    std::string name() const override { return "gs"; }

private:
    const SimulationContext* context_;
    GsEngineParams params_;
    std::vector<std::size_t> reflection_;  // empty when the twin check is off
};

/// SPGD on -100 x the scale-matched residual between the image and the simulated crop.
class SpgdEngine : public RetrievalEngine {
public:
    SpgdEngine(const SimulationContext& context, SpgdParams params = {});
    PhaseVector retrieve(const IntensityImage& image) const override;
    std::string name() const override { return "spgd"; }

private:
    const SimulationContext* context_;
    SpgdParams params_;
};

/// Invocation of the external network: `<command> predict --model M --in IN.png --out OUT.png`.
struct ExternalModel {
    std::string command = "neural";
    std::filesystem::path model;
};

/// Forward network through the file protocol; the output phase image is decoded.
class ExternalNeuralEngine : public RetrievalEngine {
public:
    ExternalNeuralEngine(ExternalModel model, const FibreArrayConfig& config);
    PhaseVector retrieve(const IntensityImage& image) const override;
    std::string name() const override { return "neural"; }

private:
    ExternalModel model_;
    FibreArrayConfig config_;
};

class ExactReverse : public ReverseOperator {
public:
    explicit ExactReverse(const SimulationContext& context) : context_(&context) {}
    IntensityImage reconstruct(const PhaseVector& phases) const override { return context_->render(phases); }
    std::string name() const override { return "exact"; }

private:
    const SimulationContext* context_;
};

/// Reverse network through the file protocol.
class ExternalNeuralReverse : public ReverseOperator {
public:
    ExternalNeuralReverse(ExternalModel model, const FibreArrayConfig& config);
    IntensityImage reconstruct(const PhaseVector& phases) const override;
    std::string name() const override { return "neural"; }

private:
    ExternalModel model_;
    FibreArrayConfig config_;
};

/// Runs `<command> predict ...` on `input`; throws std::runtime_error on a non-zero exit.
RgbImage run_external_predict(const ExternalModel& model, const RgbImage& input);

struct TrialResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    double pib_before = 0.0;
    double pib_after = 0.0;
    // Normalised L1 to the target's image; only for non-flat targets, else -1.
    double shape_before = -1.0;
    double shape_after = -1.0;
    PhaseVector predicted;
    PhaseVector corrected;
};

/// One correction step on hidden phases `current` whose clean image is `clean`.
/// The engine sees only the noisy image.
TrialResult run_trial(const RetrievalEngine& engine, const SimulationContext& context, const PhaseVector& current,
                      const IntensityImage& clean, const PhaseVector& target, const NoiseSpec& noise);

/// Hidden phases drawn from `seed`, imaged, corrected and re-simulated. The noise stream
/// is seeded from `noise.seed`.
TrialResult closed_loop_trial(const RetrievalEngine& engine, const SimulationContext& context, std::uint64_t seed,
                              const PhaseVector& target, const NoiseSpec& noise);

struct FeasibilityReport {
    bool ok = false;  // false when the engine or reverse operator failed
    std::string error;
    double residual = 0.0;
    double threshold = 0.0;
    bool feasible = false;
    PhaseVector phases;
    IntensityImage reconstructed;
    RgbImage diff;
};

FeasibilityReport feasibility_check(const IntensityImage& target, const RetrievalEngine& engine,
                                    const ReverseOperator& reverse, double threshold);

/// mean + 3 standard deviations of residuals measured on known-feasible images.
double calibrate_threshold(std::span<const double> residuals);

/// Thresholds for two input pipelines. A rotated query has been through one more bilinear
/// resampling than a test image, which alone costs about 2% L1, so it is judged against
/// test images rotated by 60 degrees: still feasible, since the array is 6-fold symmetric.
struct FeasibilityCalibration {
    std::vector<double> direct;     // residuals of the test images as stored
    std::vector<double> resampled;  // residuals of the same images rotated by 60 degrees
    double direct_threshold = 0.0;
    double resampled_threshold = 0.0;
    /// direct_threshold for multiples of 360 degrees, resampled_threshold otherwise.
    double threshold_for(double degrees) const;
};

/// Throws std::runtime_error if any check fails and std::invalid_argument for fewer than two images.
FeasibilityCalibration calibrate_feasibility(std::span<const IntensityImage> feasible, const RetrievalEngine& engine,
                                             const ReverseOperator& reverse, std::size_t workers = 0);

/// Bilinear rotation about the image centre; positive angles turn the picture
/// counter-clockwise as displayed (rows downward). Pixels from outside the frame are 0.
IntensityImage rotate_intensity_image(const IntensityImage& image, double degrees);

/// normalised_l1(image, image rotated by 60 degrees); 0 for a perfectly 6-fold pattern.
double sixfold_asymmetry(const IntensityImage& image);

/// Mean of the central disc (radius = `core_radius` pixels) over the image maximum.
double core_brightness(const IntensityImage& image, double core_radius);

/// Index of the image that best reads as a 6-fold ring: lowest
/// sixfold_asymmetry + core_brightness. Throws on an empty list.
std::size_t find_ring_image(std::span<const IntensityImage> images, double core_radius);

}  // namespace cbc
