#include "cbc/propagation.hpp"

#include <fftw3.h>

#include <bit>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <tuple>

#include "cbc/errors.hpp"

namespace cbc {

namespace {

// FFTW planning is not thread-safe; executing an existing plan on new arrays is.
// FFTW_ESTIMATE keeps the chosen algorithm, and therefore every output bit,
// identical from run to run.
struct FftPlans {
    fftw_plan forward = nullptr;
    fftw_plan backward = nullptr;
};

std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

const FftPlans& plans_for(std::size_t n) {
    static std::map<std::size_t, FftPlans> registry;
    std::lock_guard lock(planner_mutex());
    auto it = registry.find(n);
    if (it != registry.end()) return it->second;
    std::vector<std::complex<double>> scratch(n * n);
    auto* data = reinterpret_cast<fftw_complex*>(scratch.data());
    const int side = static_cast<int>(n);
    FftPlans p;
    p.forward = fftw_plan_dft_2d(side, side, data, data, FFTW_FORWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    p.backward = fftw_plan_dft_2d(side, side, data, data, FFTW_BACKWARD, FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p.forward || !p.backward) throw std::runtime_error("fftw: planning failed");
    return registry.emplace(n, p).first->second;
}

void fft_in_place(std::vector<std::complex<double>>& data, std::size_t n, bool forward) {
    const FftPlans& p = plans_for(n);
    auto* ptr = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(forward ? p.forward : p.backward, ptr, ptr);
}

using TransferKey = std::tuple<std::size_t, double, double, double, bool>;

// Transfer function including the 1/n^2 round-trip normalisation.
std::shared_ptr<const std::vector<std::complex<double>>> transfer_function(std::size_t n, double pitch,
                                                                           double distance, double wavelength,
                                                                           bool band_limit) {
    static std::mutex m;
    static std::map<TransferKey, std::shared_ptr<const std::vector<std::complex<double>>>> cache;
    const TransferKey key{n, pitch, distance, wavelength, band_limit};
    {
        std::lock_guard lock(m);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }

    auto h = std::make_shared<std::vector<std::complex<double>>>(n * n);
    const double df = 1.0 / (static_cast<double>(n) * pitch);
    const double inv_l2 = 1.0 / (wavelength * wavelength);
    // Matsushima-Shimobaba limit with du = 1/(2S), S = n * pitch the sampling window.
    const double du = 0.5 * df;
    const double limit = 1.0 / (wavelength * std::sqrt(std::pow(2.0 * du * distance, 2) + 1.0));
    const double norm = 1.0 / static_cast<double>(n * n);
    const auto freq = [&](std::size_t k) {
        const long s = k < n / 2 ? static_cast<long>(k) : static_cast<long>(k) - static_cast<long>(n);
        return static_cast<double>(s) * df;
    };
    for (std::size_t r = 0; r < n; ++r) {
        const double fy = freq(r);
        for (std::size_t c = 0; c < n; ++c) {
            const double fx = freq(c);
            const double arg = inv_l2 - fx * fx - fy * fy;
            std::complex<double> v{0.0, 0.0};
            const bool passed = !band_limit || (std::abs(fx) < limit && std::abs(fy) < limit);
            if (arg > 0.0 && passed) v = std::polar(norm, 2.0 * kPi * distance * std::sqrt(arg));
            (*h)[r * n + c] = v;
        }
    }

    std::lock_guard lock(m);
    return cache.emplace(key, std::move(h)).first->second;
}

ComplexField propagate(const ComplexField& field, double distance, double wavelength, bool band_limit,
                       bool adjoint) {
    if (!(distance >= 0.0)) throw std::invalid_argument("angular_spectrum: distance must be >= 0");
    if (!(wavelength > 0.0)) throw std::invalid_argument("angular_spectrum: wavelength must be positive");
    if (field.n == 0 || field.samples.size() != field.n * field.n) {
        throw std::invalid_argument("angular_spectrum: malformed field");
    }
    const auto h = transfer_function(field.n, field.pitch, distance, wavelength, band_limit);
    ComplexField out = field;
    fft_in_place(out.samples, out.n, true);
    if (adjoint) {
        for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= std::conj((*h)[i]);
    } else {
        for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= (*h)[i];
    }
    fft_in_place(out.samples, out.n, false);
    return out;
}

using LensKey = std::tuple<std::size_t, double, double, double, bool>;

// Unit phasors of the forward lens, cached like the transfer functions.
std::shared_ptr<const std::vector<std::complex<double>>> lens_factors(std::size_t n, double pitch,
                                                                      double focal_length, double wavelength,
                                                                      bool spherical) {
    static std::mutex m;
    static std::map<LensKey, std::shared_ptr<const std::vector<std::complex<double>>>> cache;
    const LensKey key{n, pitch, focal_length, wavelength, spherical};
    {
        std::lock_guard lock(m);
        auto it = cache.find(key);
        if (it != cache.end()) return it->second;
    }
    auto t = std::make_shared<std::vector<std::complex<double>>>(n * n);
    const double k = 2.0 * kPi / wavelength;
    for (std::size_t r = 0; r < n; ++r) {
        const double y = sample_coordinate(r, n, pitch);
        for (std::size_t c = 0; c < n; ++c) {
            const double x = sample_coordinate(c, n, pitch);
            const double rho2 = x * x + y * y;
            const double phase = spherical ? k * (std::sqrt(rho2 + focal_length * focal_length) - focal_length)
                                           : kPi * rho2 / (wavelength * focal_length);
            (*t)[r * n + c] = std::polar(1.0, -phase);
        }
    }
    std::lock_guard lock(m);
    return cache.emplace(key, std::move(t)).first->second;
}

ComplexField lens(const ComplexField& field, double focal_length, double wavelength, bool spherical, bool adjoint) {
    if (!(focal_length > 0.0)) throw std::invalid_argument("apply_lens: focal length must be positive");
    if (!(wavelength > 0.0)) throw std::invalid_argument("apply_lens: wavelength must be positive");
    const auto t = lens_factors(field.n, field.pitch, focal_length, wavelength, spherical);
    ComplexField out = field;
    if (adjoint) {
        for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= std::conj((*t)[i]);
    } else {
        for (std::size_t i = 0; i < out.samples.size(); ++i) out.samples[i] *= (*t)[i];
    }
    return out;
}

}  // namespace

ComplexField apply_lens(const ComplexField& field, double focal_length, double wavelength, bool spherical) {
    return lens(field, focal_length, wavelength, spherical, false);
}

ComplexField angular_spectrum(const ComplexField& field, double distance, double wavelength, bool band_limit) {
    return propagate(field, distance, wavelength, band_limit, false);
}

ComplexField angular_spectrum_adjoint(const ComplexField& field, double distance, double wavelength,
                                      bool band_limit) {
    return propagate(field, distance, wavelength, band_limit, true);
}

ComplexField propagate_to_focus(const FibreArrayConfig& config, const ComplexField& fibre_plane) {
    return angular_spectrum(apply_lens(fibre_plane, config.focal_distance, config.wavelength, config.spherical_lens),
                            config.focal_distance, config.wavelength, config.band_limit);
}

ComplexField propagate_from_focus(const FibreArrayConfig& config, const ComplexField& focal_plane) {
    return lens(angular_spectrum_adjoint(focal_plane, config.focal_distance, config.wavelength, config.band_limit),
                config.focal_distance, config.wavelength, config.spherical_lens, true);
}

ComplexField focal_field(const FibreArrayConfig& config, const PhaseVector& phases) {
    return propagate_to_focus(config, assemble_field(config, phases));
}

IntensityMap intensity_of(const ComplexField& field) {
    IntensityMap map(field.n, field.pitch);
    for (std::size_t i = 0; i < field.samples.size(); ++i) map.values[i] = std::norm(field.samples[i]);
    return map;
}

double total_power(const ComplexField& field) {
    double sum = 0.0;
    for (const auto& v : field.samples) sum += std::norm(v);
    return sum * field.pitch * field.pitch;
}

double total_power(const IntensityMap& map) {
    double sum = 0.0;
    for (double v : map.values) sum += v;
    return sum * map.pitch * map.pitch;
}

ComplexField central_window(const ComplexField& field, std::size_t side) {
    if (side % 2 != 0 || side > field.n) throw std::invalid_argument("central_window: bad window size");
    ComplexField out(side, field.pitch);
    const std::size_t off = field.n / 2 - side / 2;
    for (std::size_t r = 0; r < side; ++r) {
        for (std::size_t c = 0; c < side; ++c) out.at(r, c) = field.at(r + off, c + off);
    }
    return out;
}

ComplexField fourier_upsample(const ComplexField& field, std::size_t factor) {
    if (factor < 1) throw std::invalid_argument("fourier_upsample: factor must be >= 1");
    const std::size_t n = field.n;
    if (n % 2 != 0) throw std::invalid_argument("fourier_upsample: grid side must be even");
    if (factor == 1) return field;
    const std::size_t m = n * factor;
    std::vector<std::complex<double>> spec = field.samples;
    fft_in_place(spec, n, true);
    // Each input frequency lands on one output bin; the Nyquist bin is split
    // between +n/2 and -n/2 so a real input stays real.
    const auto targets = [&](std::size_t k) {
        std::vector<std::pair<std::size_t, double>> t;
        if (k < n / 2) {
            t.emplace_back(k, 1.0);
        } else if (k > n / 2) {
            t.emplace_back(k + m - n, 1.0);
        } else {
            t.emplace_back(n / 2, 0.5);
            t.emplace_back(m - n / 2, 0.5);
        }
        return t;
    };
    ComplexField out(m, field.pitch / static_cast<double>(factor));
    const double scale = 1.0 / static_cast<double>(n * n);
    for (std::size_t kr = 0; kr < n; ++kr) {
        for (std::size_t kc = 0; kc < n; ++kc) {
            for (const auto& [tr, wr] : targets(kr)) {
                for (const auto& [tc, wc] : targets(kc)) out.at(tr, tc) += spec[kr * n + kc] * (wr * wc * scale);
            }
        }
    }
    fft_in_place(out.samples, m, false);
    return out;
}

void dump_field(const ComplexField& field, const std::filesystem::path& prefix) {
    const auto write = [&](const std::string& suffix, auto part) {
        const std::filesystem::path path = prefix.string() + suffix;
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        for (const auto& v : field.samples) {
            const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(part(v)));
            const char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                                   static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
            out.write(bytes, 4);
        }
        if (!out) throw IoError("write failed: " + path.string());
    };
    write("_re.f32", [](const std::complex<double>& v) { return v.real(); });
    write("_im.f32", [](const std::complex<double>& v) { return v.imag(); });
}

FocalBasis::FocalBasis(const FibreArrayConfig& config, std::size_t window)
    : config_(config), window_(window), pitch_(config.grid.pitch) {
    config.validate();
    if (window % 2 != 0 || window < 2 || window > config.grid.n) {
        throw std::invalid_argument("FocalBasis: window must be even and fit the grid");
    }
    const std::size_t count = config.fibre_count();
    const ComplexField all = assemble_field(config, PhaseVector::zeros(count));
    const std::vector<int> owner = fibre_membership(config);

    std::vector<ComplexField> full;
    full.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        ComplexField single(config.grid.n, config.grid.pitch);
        for (std::size_t i = 0; i < owner.size(); ++i) {
            if (owner[i] == static_cast<int>(k)) single.samples[i] = all.samples[i];
        }
        full.push_back(propagate_to_focus(config, single));
        modes_.push_back(central_window(full.back(), window));
    }

    gram_.assign(count * count, {0.0, 0.0});
    const double area = pitch_ * pitch_;
    for (std::size_t j = 0; j < count; ++j) {
        for (std::size_t k = j; k < count; ++k) {
            std::complex<double> acc{0.0, 0.0};
            const auto& a = full[j].samples;
            const auto& b = full[k].samples;
            for (std::size_t i = 0; i < a.size(); ++i) acc += std::conj(a[i]) * b[i];
            gram_[j * count + k] = acc * area;
            gram_[k * count + j] = std::conj(acc) * area;
        }
    }
}

ComplexField FocalBasis::field(const PhaseVector& phases) const {
    if (phases.size() != modes_.size()) throw std::invalid_argument("FocalBasis: phase vector length mismatch");
    ComplexField out(window_, pitch_);
    for (std::size_t k = 0; k < modes_.size(); ++k) {
        const std::complex<double> w = std::polar(1.0, phases[k]);
        const auto& m = modes_[k].samples;
        for (std::size_t i = 0; i < m.size(); ++i) out.samples[i] += w * m[i];
    }
    return out;
}

IntensityMap FocalBasis::intensity(const PhaseVector& phases) const { return intensity_of(field(phases)); }

double FocalBasis::total_power(const std::vector<std::complex<double>>& weights) const {
    const std::size_t count = modes_.size();
    if (weights.size() != count) throw std::invalid_argument("FocalBasis: weight vector length mismatch");
    double sum = 0.0;
    for (std::size_t j = 0; j < count; ++j) {
        sum += std::norm(weights[j]) * gram_[j * count + j].real();
        for (std::size_t k = j + 1; k < count; ++k) {
            sum += 2.0 * (std::conj(weights[j]) * weights[k] * gram_[j * count + k]).real();
        }
    }
    return sum;
}

double FocalBasis::total_power(const PhaseVector& phases) const {
    std::vector<std::complex<double>> w(phases.size());
    for (std::size_t k = 0; k < phases.size(); ++k) w[k] = std::polar(1.0, phases[k]);
    return total_power(w);
}

}  // namespace cbc
