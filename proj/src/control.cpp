#include "cbc/control.hpp"

#include <sys/wait.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "cbc/errors.hpp"
#include "cbc/parallel.hpp"
#include "cbc/png_io.hpp"
#include "cbc/rng.hpp"

namespace cbc {

PhaseVector correct(const PhaseVector& current, const PhaseVector& predicted, const PhaseVector& target) {
    if (current.size() != predicted.size() || current.size() != target.size()) {
        throw std::invalid_argument("correct: phase vectors differ in length");
    }
    if (current.size() == 0) throw std::invalid_argument("correct: empty phase vector");
    PhaseVector out = PhaseVector::zeros(current.size());
    for (std::size_t k = 0; k < out.size(); ++k) out[k] = wrap_phase(current[k] - predicted[k] + target[k]);
    return rereference(out);
}

SimulationContext::SimulationContext(const FibreArrayConfig& config, std::size_t window)
    : config_(config), basis_(config, window), bucket_(bucket_from_flat(config)), pib_(basis_, bucket_) {}

IntensityImage SimulationContext::render(const PhaseVector& phases) const {
    const RenderedIntensity r = render_intensity_image(basis_.intensity(phases), config_.imaging);
    if (r.degenerate) throw MetricUndefined("rendered intensity is all zero");
    return r.image;
}

OracleEngine::OracleEngine(std::vector<std::pair<IntensityImage, PhaseVector>> table) : table_(std::move(table)) {
    if (table_.empty()) throw std::invalid_argument("oracle engine needs at least one known pair");
}

PhaseVector OracleEngine::retrieve(const IntensityImage& image) const {
    std::size_t best = 0;
    long best_d = std::numeric_limits<long>::max();
    for (std::size_t i = 0; i < table_.size(); ++i) {
        const IntensityImage& known = table_[i].first;
        if (known.width != image.width || known.height != image.height) continue;
        long d = 0;
        for (std::size_t p = 0; p < image.pixels.size(); ++p) {
            d += std::abs(static_cast<int>(known.pixels[p]) - static_cast<int>(image.pixels[p]));
        }
        if (d < best_d) {
            best_d = d;
            best = i;
        }
    }
    if (best_d == std::numeric_limits<long>::max()) throw std::invalid_argument("oracle: no known image of this size");
    return table_[best].second;
}

GsEngine::GsEngine(const SimulationContext& context, GsEngineParams params) : context_(&context), params_(params) {
    if (params_.starts < 1) throw std::invalid_argument("gs engine: starts must be >= 1");
    const std::size_t count = context.basis().fibre_count();
    if (params_.twin_iterations == 0) return;
    std::vector<std::size_t> perm = point_reflection_permutation(context.config().rings);
    perm.resize(count);
    if (std::all_of(perm.begin(), perm.end(), [&](std::size_t i) { return i < count; })) reflection_ = std::move(perm);
}

namespace {

// Chi-square of a measured image against a model rendering, shot-noise weighted.
double image_distance(const IntensityImage& model, const IntensityImage& measured) {
    double acc = 0.0;
    for (std::size_t i = 0; i < model.pixels.size(); ++i) {
        const double m = static_cast<double>(model.pixels[i]);
        const double d = m - static_cast<double>(measured.pixels[i]);
        acc += d * d / (m + 1.0);
    }
    return acc;
}

}  // namespace

PhaseVector GsEngine::retrieve(const IntensityImage& image) const {
    const FocalBasis& basis = context_->basis();
    const WindowTarget target = window_target_from_image(image, basis);
    PhaseVector best;
    double best_distance = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < params_.starts; ++s) {
        const PhaseVector init = random_phase_vector(basis.fibre_count(), derive_seed(params_.seed, s));
        ModalGsResult r = modal_gs(basis, target, params_.iterations, init);
        double distance = image_distance(context_->render(r.phases), image);
        if (!reflection_.empty()) {
            PhaseVector negated = r.phases;
            for (auto& v : negated.phases) v = wrap_phase(-v);
            ModalGsResult twin = modal_gs(basis, target, params_.twin_iterations, permute_phases(negated, reflection_));
            const double d = image_distance(context_->render(twin.phases), image);
            if (d < distance) {
                distance = d;
                r = std::move(twin);
            }
        }
        if (distance < best_distance) {
            best_distance = distance;
            best = r.phases;
        }
        if (r.residual <= params_.good_enough) break;
    }
    return best;
}

SpgdEngine::SpgdEngine(const SimulationContext& context, SpgdParams params) : context_(&context), params_(params) {}

PhaseVector SpgdEngine::retrieve(const IntensityImage& image) const {
    const FocalBasis& basis = context_->basis();
    const WindowTarget target = window_target_from_image(image, basis);
    const Objective objective = [&](const PhaseVector& p) { return -100.0 * window_residual(basis, target, p); };
    const PhaseVector init = random_phase_vector(basis.fibre_count(), params_.seed);
    const SpgdResult r = spgd_optimize(objective, init, params_);
    if (r.aborted) throw std::runtime_error("spgd engine: " + r.message);
    return r.phases;
}

namespace {

std::string shell_quote(const std::string& s) {
    std::string out = "'";
    for (char ch : s) {
        if (ch == '\'') {
            out += "'\\''";
        } else {
            out += ch;
        }
    }
    return out + "'";
}

std::filesystem::path scratch_dir() {
    static std::atomic<unsigned long> counter{0};
    const auto dir = std::filesystem::temp_directory_path() /
                     ("cbc-predict-" + std::to_string(::getpid()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace

RgbImage run_external_predict(const ExternalModel& model, const RgbImage& input) {
    const auto dir = scratch_dir();
    const auto in = dir / "in.png";
    const auto out = dir / "out.png";
    struct Cleanup {
        std::filesystem::path dir;
        ~Cleanup() {
            std::error_code ec;
            std::filesystem::remove_all(dir, ec);
        }
    } cleanup{dir};
    write_png(input, in);
    const std::string cmd = model.command + " predict --model " + shell_quote(model.model.string()) + " --in " +
                            shell_quote(in.string()) + " --out " + shell_quote(out.string());
    const int status = std::system(cmd.c_str());
    if (status == -1 || !WIFEXITED(status) || WEXITSTATUS(status) != 0) {
        throw std::runtime_error("external model command failed: " + cmd);
    }
    RgbImage result = read_png_rgb(out);
    if (result.width != input.width || result.height != input.height) {
        throw std::runtime_error("external model returned a " + std::to_string(result.width) + "x" +
                                 std::to_string(result.height) + " image for a " + std::to_string(input.width) +
                                 "x" + std::to_string(input.height) + " input");
    }
    return result;
}

ExternalNeuralEngine::ExternalNeuralEngine(ExternalModel model, const FibreArrayConfig& config)
    : model_(std::move(model)), config_(config) {}

PhaseVector ExternalNeuralEngine::retrieve(const IntensityImage& image) const {
    return decode_phase_image(run_external_predict(model_, gray_to_rgb(image)), config_);
}

ExternalNeuralReverse::ExternalNeuralReverse(ExternalModel model, const FibreArrayConfig& config)
    : model_(std::move(model)), config_(config) {}

IntensityImage ExternalNeuralReverse::reconstruct(const PhaseVector& phases) const {
    return rgb_to_gray(run_external_predict(model_, render_phase_image(config_, phases)));
}

namespace {

bool is_flat(const PhaseVector& p) {
    return std::all_of(p.phases.begin(), p.phases.end(), [](double v) { return v == 0.0; });
}

}  // namespace

TrialResult run_trial(const RetrievalEngine& engine, const SimulationContext& context, const PhaseVector& current,
                      const IntensityImage& clean, const PhaseVector& target, const NoiseSpec& noise) {
    TrialResult res;
    try {
        const IntensityImage observed = add_noise(clean, noise);
        res.pib_before = context.power_in_bucket(current);
        res.predicted = engine.retrieve(observed);
        res.predicted.validate();
        res.corrected = correct(current, res.predicted, target);
        res.pib_after = context.power_in_bucket(res.corrected);
        if (!is_flat(target)) {
            const IntensityImage want = context.render(target);
            res.shape_before = normalised_l1(context.render(current), want);
            res.shape_after = normalised_l1(context.render(res.corrected), want);
        }
        res.ok = true;
    } catch (const std::exception& e) {
        res.ok = false;
        res.error = e.what();
    }
    return res;
}

TrialResult closed_loop_trial(const RetrievalEngine& engine, const SimulationContext& context, std::uint64_t seed,
                              const PhaseVector& target, const NoiseSpec& noise) {
    const PhaseVector current = random_phase_vector(context.basis().fibre_count(), seed);
    TrialResult res = run_trial(engine, context, current, context.render(current), target, noise);
    res.seed = seed;
    return res;
}

FeasibilityReport feasibility_check(const IntensityImage& target, const RetrievalEngine& engine,
                                    const ReverseOperator& reverse, double threshold) {
    FeasibilityReport rep;
    rep.threshold = threshold;
    try {
        rep.phases = engine.retrieve(target);
        rep.reconstructed = reverse.reconstruct(rep.phases);
        rep.residual = normalised_l1(target, rep.reconstructed);
        rep.feasible = rep.residual <= threshold;
        rep.diff = difference_image(target, rep.reconstructed);
        rep.ok = true;
    } catch (const std::exception& e) {
        rep.ok = false;
        rep.feasible = false;
        rep.error = e.what();
    }
    return rep;
}

double calibrate_threshold(std::span<const double> residuals) {
    if (residuals.empty()) throw std::invalid_argument("calibrate_threshold: no residuals");
    const PibSummary s = pib_statistics(residuals);
    return s.mean + 3.0 * s.stddev;
}

double FeasibilityCalibration::threshold_for(double degrees) const {
    return std::fmod(degrees, 360.0) == 0.0 ? direct_threshold : resampled_threshold;
}

FeasibilityCalibration calibrate_feasibility(std::span<const IntensityImage> feasible, const RetrievalEngine& engine,
                                             const ReverseOperator& reverse, std::size_t workers) {
    if (feasible.size() < 2) throw std::invalid_argument("calibration needs at least two images");
    const std::size_t n = feasible.size();
    FeasibilityCalibration cal;
    cal.direct.resize(n);
    cal.resampled.resize(n);
    std::vector<std::string> errors(2 * n);
    parallel_for(2 * n, workers, [&](std::size_t t) {
        const std::size_t i = t % n;
        const bool rotated = t >= n;
        const FeasibilityReport r =
            feasibility_check(rotated ? rotate_intensity_image(feasible[i], 60.0) : feasible[i], engine, reverse, 1.0);
        if (!r.ok) errors[t] = r.error;
        (rotated ? cal.resampled : cal.direct)[i] = r.residual;
    });
    for (const auto& e : errors) {
        if (!e.empty()) throw std::runtime_error("calibration failed: " + e);
    }
    cal.direct_threshold = calibrate_threshold(cal.direct);
    cal.resampled_threshold = calibrate_threshold(cal.resampled);
    return cal;
}

IntensityImage rotate_intensity_image(const IntensityImage& image, double degrees) {
    if (!std::isfinite(degrees)) throw std::invalid_argument("rotate: angle must be finite");
    if (image.width != image.height) throw std::invalid_argument("rotate: image must be square");
    const std::size_t n = image.width;
    IntensityImage out(n, n);
    if (n == 0) return out;
    const std::vector<double> src = to_doubles(image);
    const double centre = 0.5 * static_cast<double>(n - 1);
    const double t = degrees * kPi / 180.0;
    const double c = std::cos(t);
    const double s = std::sin(t);
    const double lo = -1e-9;
    const double hi = static_cast<double>(n - 1) + 1e-9;
    for (std::size_t r = 0; r < n; ++r) {
        const double y = static_cast<double>(r) - centre;
        for (std::size_t col = 0; col < n; ++col) {
            const double x = static_cast<double>(col) - centre;
            const double sc = centre + c * x - s * y;
            const double sr = centre + s * x + c * y;
            if (sc < lo || sc > hi || sr < lo || sr > hi) continue;
            out.at(r, col) = static_cast<std::uint8_t>(std::clamp(std::round(bilinear(src, n, sr, sc)), 0.0, 255.0));
        }
    }
    return out;
}

double sixfold_asymmetry(const IntensityImage& image) {
    return normalised_l1(image, rotate_intensity_image(image, 60.0));
}

double core_brightness(const IntensityImage& image, double core_radius) {
    if (image.width != image.height || image.width == 0) throw std::invalid_argument("core_brightness: bad image");
    const double centre = 0.5 * static_cast<double>(image.width - 1);
    double sum = 0.0;
    std::size_t used = 0;
    std::uint8_t peak = 0;
    for (std::size_t r = 0; r < image.height; ++r) {
        for (std::size_t c = 0; c < image.width; ++c) {
            peak = std::max(peak, image.at(r, c));
            const double dr = static_cast<double>(r) - centre;
            const double dc = static_cast<double>(c) - centre;
            if (dr * dr + dc * dc > core_radius * core_radius) continue;
            sum += image.at(r, c);
            ++used;
        }
    }
    if (peak == 0 || used == 0) return 1.0;
    return sum / static_cast<double>(used) / static_cast<double>(peak);
}

std::size_t find_ring_image(std::span<const IntensityImage> images, double core_radius) {
    if (images.empty()) throw std::invalid_argument("find_ring_image: no images");
    std::size_t best = 0;
    double best_score = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < images.size(); ++i) {
        const double score = sixfold_asymmetry(images[i]) + core_brightness(images[i], core_radius);
        if (score < best_score) {
            best_score = score;
            best = i;
        }
    }
    return best;
}

}  // namespace cbc
