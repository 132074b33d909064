#include "cbc/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>

#include "cbc/imaging.hpp"
#include "cbc/rng.hpp"

namespace cbc {

FibreProjector::FibreProjector(const FibreArrayConfig& config) : config_(config), count_(config.fibre_count()) {
    const ComplexField flat = assemble_field(config, PhaseVector::zeros(count_));
    const std::vector<int> owner = fibre_membership(config);
    for (std::size_t i = 0; i < owner.size(); ++i) {
        if (owner[i] < 0) continue;
        index_.push_back(i);
        owner_.push_back(owner[i]);
        amplitude_.push_back(flat.samples[i].real());
    }
}

PhaseVector FibreProjector::project(const ComplexField& fibre_plane) const {
    if (fibre_plane.n != config_.grid.n) throw std::invalid_argument("FibreProjector: grid mismatch");
    std::vector<std::complex<double>> acc(count_);
    for (std::size_t s = 0; s < index_.size(); ++s) {
        acc[static_cast<std::size_t>(owner_[s])] += amplitude_[s] * fibre_plane.samples[index_[s]];
    }
    PhaseVector out = PhaseVector::zeros(count_);
    for (std::size_t k = 0; k < count_; ++k) out[k] = std::arg(acc[k]);
    return rereference(out);
}

ComplexField FibreProjector::synthesise(const PhaseVector& phases) const {
    if (phases.size() != count_) throw std::invalid_argument("FibreProjector: phase vector length mismatch");
    std::vector<std::complex<double>> unit(count_);
    for (std::size_t k = 0; k < count_; ++k) unit[k] = std::polar(1.0, phases[k]);
    ComplexField out(config_.grid.n, config_.grid.pitch);
    for (std::size_t s = 0; s < index_.size(); ++s) {
        out.samples[index_[s]] = amplitude_[s] * unit[static_cast<std::size_t>(owner_[s])];
    }
    return out;
}

GsResult gs_run(const IntensityMap& target, const FibreArrayConfig& config, std::size_t iterations,
                const std::optional<PhaseVector>& init) {
    config.validate();
    if (target.n != config.grid.n || target.pitch != config.grid.pitch) {
        throw std::invalid_argument("gs_retrieve: target map does not match the configured grid");
    }
    const std::size_t count = config.fibre_count();
    const FibreProjector projector(config);
    GsResult result;
    result.phases = init ? rereference(*init) : PhaseVector::zeros(count);
    if (result.phases.size() != count) throw std::invalid_argument("gs_retrieve: init length mismatch");

    std::vector<double> amplitude(target.values.size());
    double norm = 0.0;
    for (std::size_t i = 0; i < amplitude.size(); ++i) {
        if (!(target.values[i] >= 0.0)) throw std::invalid_argument("gs_retrieve: target must be non-negative");
        amplitude[i] = std::sqrt(target.values[i]);
        norm += target.values[i];
    }
    if (!(norm > 0.0)) throw std::invalid_argument("gs_retrieve: target is all zero");
    norm = std::sqrt(norm);

    for (std::size_t it = 0; it < iterations; ++it) {
        ComplexField focal = propagate_to_focus(config, projector.synthesise(result.phases));
        double err = 0.0;
        for (std::size_t i = 0; i < focal.samples.size(); ++i) {
            auto& v = focal.samples[i];
            const double mag = std::abs(v);
            err += (mag - amplitude[i]) * (mag - amplitude[i]);
            v = mag > 0.0 ? v * (amplitude[i] / mag) : std::complex<double>(amplitude[i], 0.0);
        }
        result.amplitude_error.push_back(std::sqrt(err) / norm);
        result.phases = projector.project(propagate_from_focus(config, focal));
    }
    return result;
}

PhaseVector gs_retrieve(const IntensityMap& target, const FibreArrayConfig& config, std::size_t iterations,
                        const std::optional<PhaseVector>& init) {
    return gs_run(target, config, iterations, init).phases;
}

PhaseVector gs_retrieve_resolved(const IntensityMap& target, const FibreArrayConfig& config, std::size_t iterations,
                                 const PhaseVector& init, std::size_t twin_iterations) {
    PhaseVector found = gs_retrieve(target, config, iterations, init);
    std::vector<std::size_t> perm = point_reflection_permutation(config.rings);
    perm.resize(found.size());
    if (twin_iterations == 0 || !std::all_of(perm.begin(), perm.end(), [&](std::size_t i) { return i < perm.size(); })) {
        return found;
    }
    PhaseVector negated = found;
    for (auto& v : negated.phases) v = wrap_phase(-v);
    const PhaseVector twin = gs_retrieve(target, config, twin_iterations, permute_phases(negated, perm));
    const auto error = [&](const PhaseVector& p) { return gs_run(target, config, 1, p).amplitude_error.front(); };
    return error(twin) < error(found) ? twin : found;
}

namespace {

// Least-squares inverse of one axis of the crop-and-resize: maps `size` image pixels back onto
// the window samples they interpolate. Returns the first active sample and the K x size operator.
std::pair<std::size_t, std::vector<double>> unresample_axis(const RasterGeometry& g, std::size_t window,
                                                            std::size_t n, std::size_t& active) {
    const double off = static_cast<double>(n / 2) - static_cast<double>(window / 2);
    std::vector<double> r(g.size * window, 0.0);
    for (std::size_t i = 0; i < g.size; ++i) {
        const double u = static_cast<double>(n / 2) + (static_cast<double>(i) - g.axis) * g.scale() - off;
        const double j0 = std::floor(u);
        const double f = u - j0;
        const auto j = static_cast<std::size_t>(j0);
        if (j0 < 0.0 || j + 1 >= window) throw std::invalid_argument("focal basis window smaller than the image crop");
        r[i * window + j] += 1.0 - f;
        r[i * window + j + 1] += f;
    }
    std::size_t lo = window;
    std::size_t hi = 0;
    for (std::size_t j = 0; j < window; ++j) {
        double w = 0.0;
        for (std::size_t i = 0; i < g.size; ++i) w += r[i * window + j];
        if (w > 1e-9) {
            lo = std::min(lo, j);
            hi = j;
        }
    }
    const std::size_t k = hi + 1 - lo;
    // Normal equations [RtR | Rt], reduced by Gauss-Jordan.
    const std::size_t cols = k + g.size;
    std::vector<double> a(k * cols, 0.0);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < g.size; ++i) {
            const double rp = r[i * window + lo + p];
            if (rp == 0.0) continue;
            for (std::size_t q = 0; q < k; ++q) a[p * cols + q] += rp * r[i * window + lo + q];
            a[p * cols + k + i] = rp;
        }
    }
    for (std::size_t p = 0; p < k; ++p) {
        const double piv = a[p * cols + p];
        for (std::size_t c = 0; c < cols; ++c) a[p * cols + c] /= piv;
        for (std::size_t q = 0; q < k; ++q) {
            const double m = a[q * cols + p];
            if (q == p || m == 0.0) continue;
            for (std::size_t c = 0; c < cols; ++c) a[q * cols + c] -= m * a[p * cols + c];
        }
    }
    std::vector<double> op(k * g.size);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t i = 0; i < g.size; ++i) op[p * g.size + i] = a[p * cols + k + i];
    }
    active = k;
    return {lo, std::move(op)};
}

}  // namespace

WindowTarget window_target_from_image(const IntensityImage& image, const FocalBasis& basis) {
    const ImagingGeometry& imaging = basis.config().imaging;
    if (image.width != imaging.image_size || image.height != imaging.image_size) {
        throw std::invalid_argument("intensity image is " + std::to_string(image.width) + "x" +
                                    std::to_string(image.height) + ", expected " +
                                    std::to_string(imaging.image_size));
    }
    const std::size_t w = basis.window();
    if (w < imaging.intensity_crop + 2) throw std::invalid_argument("focal basis window smaller than the image crop");
    const RasterGeometry g = RasterGeometry::centred(imaging.intensity_crop, imaging.image_size);
    const std::size_t size = g.size;
    std::size_t k = 0;
    const auto [lo, op] = unresample_axis(g, w, basis.config().grid.n, k);
    const std::vector<double> pixels = to_doubles(image);
    // samples = op * pixels * op^T
    std::vector<double> half(size * k, 0.0);
    for (std::size_t r = 0; r < size; ++r) {
        for (std::size_t p = 0; p < k; ++p) {
            double acc = 0.0;
            for (std::size_t c = 0; c < size; ++c) acc += pixels[r * size + c] * op[p * size + c];
            half[r * k + p] = acc;
        }
    }
    WindowTarget t;
    t.intensity.assign(w * w, 0.0);
    t.known.assign(w * w, 0);
    for (std::size_t p = 0; p < k; ++p) {
        for (std::size_t q = 0; q < k; ++q) {
            double acc = 0.0;
            for (std::size_t r = 0; r < size; ++r) acc += op[p * size + r] * half[r * k + q];
            const std::size_t idx = (lo + p) * w + lo + q;
            t.intensity[idx] = std::max(acc, 0.0);
            t.known[idx] = 1;
        }
    }
    return t;
}

namespace {

// <F_k, x> restricted to the known samples, for every mode.
std::vector<std::complex<double>> project_known(const FocalBasis& basis, const WindowTarget& target,
                                                const std::vector<std::complex<double>>& x) {
    std::vector<std::complex<double>> out(basis.fibre_count());
    for (std::size_t k = 0; k < out.size(); ++k) {
        const auto& m = basis.mode(k).samples;
        std::complex<double> acc{0.0, 0.0};
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (target.known[i]) acc += std::conj(m[i]) * x[i];
        }
        out[k] = acc;
    }
    return out;
}

double scale_to(const WindowTarget& target, const std::vector<std::complex<double>>& field) {
    double est = 0.0;
    double tgt = 0.0;
    for (std::size_t i = 0; i < field.size(); ++i) {
        if (!target.known[i]) continue;
        est += std::norm(field[i]);
        tgt += target.intensity[i];
    }
    return tgt > 0.0 ? est / tgt : 0.0;
}

}  // namespace

double window_residual(const FocalBasis& basis, const WindowTarget& target, const PhaseVector& phases) {
    const ComplexField f = basis.field(phases);
    const double s = scale_to(target, f.samples);
    double num = 0.0;
    double den = 0.0;
    for (std::size_t i = 0; i < f.samples.size(); ++i) {
        if (!target.known[i]) continue;
        const double a = std::norm(f.samples[i]);
        const double b = s * target.intensity[i];
        num += std::abs(a - b);
        den += std::max(a, b);
    }
    return den > 0.0 ? num / den : 0.0;
}

ModalGsResult modal_gs(const FocalBasis& basis, const WindowTarget& target, std::size_t iterations,
                       const PhaseVector& init) {
    const std::size_t count = basis.fibre_count();
    const std::size_t w = basis.window();
    if (target.intensity.size() != w * w || target.known.size() != w * w) {
        throw std::invalid_argument("modal_gs: target does not match the basis window");
    }
    if (init.size() != count) throw std::invalid_argument("modal_gs: init length mismatch");
    // Gram entries are power (pitch^2 included); window inner products are plain sums.
    const double area = basis.pitch() * basis.pitch();
    PhaseVector phases = rereference(init);
    std::vector<std::complex<double>> delta(w * w);
    for (std::size_t it = 0; it < iterations; ++it) {
        const ComplexField f = basis.field(phases);
        const double s = scale_to(target, f.samples);
        for (std::size_t i = 0; i < delta.size(); ++i) {
            delta[i] = {0.0, 0.0};
            if (!target.known[i]) continue;
            const auto v = f.samples[i];
            const double mag = std::abs(v);
            const double want = std::sqrt(s * target.intensity[i]);
            const std::complex<double> g = mag > 0.0 ? v * (want / mag) : std::complex<double>(want, 0.0);
            delta[i] = g - v;
        }
        const auto corr = project_known(basis, target, delta);
        PhaseVector next = PhaseVector::zeros(count);
        for (std::size_t k = 0; k < count; ++k) {
            std::complex<double> acc = corr[k] * area;
            for (std::size_t j = 0; j < count; ++j) acc += basis.gram(k, j) * std::polar(1.0, phases[j]);
            next[k] = std::arg(acc);
        }
        phases = rereference(next);
    }
    return {phases, window_residual(basis, target, phases)};
}

SpgdResult spgd_optimize(const Objective& objective, const PhaseVector& init, const SpgdParams& params) {
    if (!(params.perturbation > 0.0)) throw std::invalid_argument("spgd: perturbation must be positive");
    if (params.max_iters < 1) throw std::invalid_argument("spgd: max_iters must be >= 1");
    if (!std::isfinite(params.gain)) throw std::invalid_argument("spgd: gain must be finite");
    if (init.size() == 0) throw std::invalid_argument("spgd: empty phase vector");

    SpgdResult res;
    PhaseVector phi = rereference(init);
    const auto evaluate = [&](const PhaseVector& p, double& out) {
        out = objective(p);
        if (std::isfinite(out)) return true;
        res.aborted = true;
        res.message = "objective returned a non-finite value at iteration " + std::to_string(res.iterations);
        return false;
    };

    double current = 0.0;
    if (!evaluate(phi, current)) return res;
    res.phases = phi;
    res.best = current;
    if (current >= params.target_pib) {
        res.reached = true;
        return res;
    }

    Rng rng(params.seed);
    const std::size_t count = phi.size();
    PhaseVector delta = PhaseVector::zeros(count);
    PhaseVector plus = phi;
    PhaseVector minus = phi;
    while (res.iterations < params.max_iters) {
        for (std::size_t k = 1; k < count; ++k) {
            delta[k] = (rng() >> 63) ? params.perturbation : -params.perturbation;
            plus[k] = wrap_phase(phi[k] + delta[k]);
            minus[k] = wrap_phase(phi[k] - delta[k]);
        }
        double jp = 0.0;
        double jm = 0.0;
        if (!evaluate(plus, jp) || !evaluate(minus, jm)) return res;
        const double step = params.gain * (jp - jm);
        for (std::size_t k = 1; k < count; ++k) phi[k] = wrap_phase(phi[k] + step * delta[k]);
        ++res.iterations;

        if (!evaluate(phi, current)) return res;
        if (current > res.best) {
            res.best = current;
            res.phases = phi;
        }
        res.trace.push_back(res.best);
        if (res.best >= params.target_pib) {
            res.reached = true;
            break;
        }
    }
    return res;
}

PibEvaluator::PibEvaluator(const FocalBasis& basis, const BucketSpec& bucket) : basis_(&basis), bucket_(bucket) {
    bucket.validate();
    const std::size_t n = basis.config().grid.n;
    const std::size_t w = basis.window();
    const double off = static_cast<double>(n / 2 - w / 2);
    const double cr = bucket.centre_row - off;
    const double cc = bucket.centre_col - off;
    if (cr - bucket.radius < 0.0 || cc - bucket.radius < 0.0 || cr + bucket.radius > static_cast<double>(w - 1) ||
        cc + bucket.radius > static_cast<double>(w - 1)) {
        throw std::invalid_argument("PibEvaluator: bucket does not fit the basis window");
    }
    for (std::size_t r = 0; r < w; ++r) {
        for (std::size_t c = 0; c < w; ++c) {
            const double dr = static_cast<double>(r) - cr;
            const double dc = static_cast<double>(c) - cc;
            if (dr * dr + dc * dc <= bucket.radius * bucket.radius) inside_.push_back(r * w + c);
        }
    }
}

double PibEvaluator::operator()(const PhaseVector& phases) const {
    const std::size_t count = basis_->fibre_count();
    if (phases.size() != count) throw std::invalid_argument("PibEvaluator: phase vector length mismatch");
    std::vector<std::complex<double>> unit(count);
    for (std::size_t k = 0; k < count; ++k) unit[k] = std::polar(1.0, phases[k]);
    double inside = 0.0;
    for (std::size_t i : inside_) {
        std::complex<double> v{0.0, 0.0};
        for (std::size_t k = 0; k < count; ++k) v += unit[k] * basis_->mode(k).samples[i];
        inside += std::norm(v);
    }
    const double total = basis_->total_power(unit);
    if (!(total > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    return pib_from_fraction(inside * basis_->pitch() * basis_->pitch() / total, bucket_);
}

std::vector<double> phase_grid(std::size_t levels) {
    if (levels < 1) throw std::invalid_argument("phase_grid: levels must be >= 1");
    std::vector<double> out(levels);
    for (std::size_t k = 0; k < levels; ++k) {
        out[k] = wrap_phase(2.0 * kPi * static_cast<double>(k) / static_cast<double>(levels) - kPi);
    }
    return out;
}

PhaseVector brute_force_retrieve(const IntensityMap& target, const FibreArrayConfig& config, std::size_t levels) {
    config.validate();
    if (target.n != config.grid.n || target.pitch != config.grid.pitch) {
        throw std::invalid_argument("brute_force_retrieve: target map does not match the configured grid");
    }
    const std::size_t count = config.fibre_count();
    const std::vector<double> grid = phase_grid(levels);
    double space = 1.0;
    for (std::size_t k = 1; k < count; ++k) space *= static_cast<double>(levels);
    if (space > 1e7) {
        throw std::invalid_argument("brute_force_retrieve: " + std::to_string(levels) + "^" +
                                    std::to_string(count - 1) + " candidates exceed the 1e7 limit");
    }

    // The focal intensity is a real quadratic form in the fibre phasors:
    //   I(x) = sum_m alpha_m(c) B_m(x),  B = |F_j|^2, Re F_j* F_k, Im F_j* F_k (j < k),
    // so ||I - T||^2 = alpha' G alpha - 2 alpha' L + ||T||^2 with G, L precomputed once.
    const FocalBasis basis(config, config.grid.n);
    const std::size_t pixels = target.values.size();
    const std::size_t terms = count * count;
    std::vector<std::vector<double>> b(terms, std::vector<double>(pixels));
    {
        std::size_t m = 0;
        for (std::size_t j = 0; j < count; ++j) {
            const auto& fj = basis.mode(j).samples;
            for (std::size_t i = 0; i < pixels; ++i) b[m][i] = std::norm(fj[i]);
            ++m;
        }
        for (std::size_t j = 0; j < count; ++j) {
            for (std::size_t k = j + 1; k < count; ++k) {
                const auto& fj = basis.mode(j).samples;
                const auto& fk = basis.mode(k).samples;
                for (std::size_t i = 0; i < pixels; ++i) {
                    const auto p = std::conj(fj[i]) * fk[i];
                    b[m][i] = p.real();
                    b[m + 1][i] = p.imag();
                }
                m += 2;
            }
        }
    }
    std::vector<double> gram(terms * terms);
    std::vector<double> lin(terms);
    for (std::size_t a = 0; a < terms; ++a) {
        double l = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) l += b[a][i] * target.values[i];
        lin[a] = l;
        for (std::size_t c = a; c < terms; ++c) {
            double s = 0.0;
            for (std::size_t i = 0; i < pixels; ++i) s += b[a][i] * b[c][i];
            gram[a * terms + c] = gram[c * terms + a] = s;
        }
    }
    b.clear();

    const auto coefficients = [&](const std::vector<std::complex<double>>& c, std::vector<double>& alpha) {
        std::size_t m = 0;
        for (std::size_t j = 0; j < count; ++j) alpha[m++] = std::norm(c[j]);
        for (std::size_t j = 0; j < count; ++j) {
            for (std::size_t k = j + 1; k < count; ++k) {
                const auto a = std::conj(c[j]) * c[k];
                alpha[m++] = 2.0 * a.real();
                alpha[m++] = -2.0 * a.imag();
            }
        }
    };

    // Odometer over the free fibres; keep a short list of the best quadratic-form scores.
    constexpr std::size_t kShortlist = 16;
    std::vector<std::pair<double, std::vector<std::size_t>>> best;
    std::vector<std::size_t> digit(count, 0);
    std::vector<std::complex<double>> c(count, {1.0, 0.0});
    std::vector<std::complex<double>> table(levels);
    for (std::size_t k = 0; k < levels; ++k) table[k] = std::polar(1.0, grid[k]);
    std::vector<double> alpha(terms);
    const auto total = static_cast<std::size_t>(space);
    for (std::size_t idx = 0; idx < total; ++idx) {
        for (std::size_t k = 1; k < count; ++k) c[k] = table[digit[k]];
        coefficients(c, alpha);
        double q = 0.0;
        for (std::size_t a = 0; a < terms; ++a) {
            double row = 0.0;
            const double* g = &gram[a * terms];
            for (std::size_t cc = 0; cc < terms; ++cc) row += g[cc] * alpha[cc];
            q += alpha[a] * (row - 2.0 * lin[a]);
        }
        if (best.size() < kShortlist || q < best.back().first) {
            best.emplace_back(q, digit);
            std::sort(best.begin(), best.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
            if (best.size() > kShortlist) best.pop_back();
        }
        for (std::size_t k = 1; k < count; ++k) {
            if (++digit[k] < levels) break;
            digit[k] = 0;
        }
    }

    // The quadratic form cancels large terms; re-rank the shortlist directly.
    PhaseVector winner;
    double winner_d = std::numeric_limits<double>::infinity();
    for (const auto& [score, digits] : best) {
        PhaseVector p = PhaseVector::zeros(count);
        for (std::size_t k = 1; k < count; ++k) p[k] = grid[digits[k]];
        const ComplexField f = basis.field(p);
        double d = 0.0;
        for (std::size_t i = 0; i < pixels; ++i) {
            const double diff = std::norm(f.samples[i]) - target.values[i];
            d += diff * diff;
        }
        if (d < winner_d) {
            winner_d = d;
            winner = p;
        }
    }
    return winner;
}

}  // namespace cbc
