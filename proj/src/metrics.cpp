#include "cbc/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "cbc/errors.hpp"

namespace cbc {

void BucketSpec::validate() const {
    if (!(radius > 0.0)) throw std::invalid_argument("bucket: radius must be positive");
    if (!(reference_fraction > 0.0) || reference_fraction > 1.0) {
        throw std::invalid_argument("bucket: reference fraction must lie in (0, 1]");
    }
}

std::vector<double> to_doubles(const IntensityImage& image) {
    return std::vector<double>(image.pixels.begin(), image.pixels.end());
}

std::vector<double> radial_profile(const std::vector<double>& values, std::size_t n, double centre_row,
                                   double centre_col, std::size_t max_radius) {
    std::vector<double> profile(max_radius + 1);
    profile[0] = bilinear(values, n, centre_row, centre_col);
    for (std::size_t r = 1; r <= max_radius; ++r) {
        const double radius = static_cast<double>(r);
        const auto samples = std::max<std::size_t>(8, static_cast<std::size_t>(std::ceil(4.0 * kPi * radius)));
        double sum = 0.0;
        for (std::size_t s = 0; s < samples; ++s) {
            const double a = 2.0 * kPi * static_cast<double>(s) / static_cast<double>(samples);
            sum += bilinear(values, n, centre_row + radius * std::sin(a), centre_col + radius * std::cos(a));
        }
        profile[r] = sum / static_cast<double>(samples);
    }
    return profile;
}

BucketSpec bucket_from_reference(const std::vector<double>& values, std::size_t n) {
    if (values.size() != n * n || n < 3) throw std::invalid_argument("bucket: malformed raster");
    const auto peak_it = std::max_element(values.begin(), values.end());
    if (!(*peak_it > 0.0)) throw MetricUndefined("bucket: reference raster is all zero");
    const auto peak = static_cast<std::size_t>(peak_it - values.begin());
    const std::size_t pr = std::clamp<std::size_t>(peak / n, 1, n - 2);
    const std::size_t pc = std::clamp<std::size_t>(peak % n, 1, n - 2);

    // Centroid of the half-maximum core around the peak; symmetric spots come out on their axis.
    const double half = 0.5 * *peak_it;
    const std::size_t reach = std::max<std::size_t>(2, n / 16);
    const std::size_t r_lo = pr > reach ? pr - reach : 0;
    const std::size_t c_lo = pc > reach ? pc - reach : 0;
    const std::size_t r_hi = std::min(n - 1, pr + reach);
    const std::size_t c_hi = std::min(n - 1, pc + reach);
    double w = 0.0, wr = 0.0, wc = 0.0;
    for (std::size_t r = r_lo; r <= r_hi; ++r) {
        for (std::size_t c = c_lo; c <= c_hi; ++c) {
            const double v = values[r * n + c];
            if (v < half) continue;
            w += v;
            wr += v * static_cast<double>(r);
            wc += v * static_cast<double>(c);
        }
    }
    BucketSpec b;
    b.centre_row = wr / w;
    b.centre_col = wc / w;

    const std::size_t max_radius = n / 2 - 1;
    const std::vector<double> profile = radial_profile(values, n, b.centre_row, b.centre_col, max_radius);
    std::size_t radius = max_radius;
    for (std::size_t r = 1; r + 1 <= max_radius; ++r) {
        if (profile[r] < profile[r - 1] && profile[r] <= profile[r + 1]) {
            radius = r;
            break;
        }
    }
    b.radius = static_cast<double>(radius);
    b.reference_fraction = 1.0;
    b.reference_fraction = bucket_fraction(values, n, b);
    b.validate();
    return b;
}

BucketSpec bucket_from_flat(const FibreArrayConfig& config) {
    const IntensityMap map = intensity_of(focal_field(config, PhaseVector::zeros(config.fibre_count())));
    return bucket_from_reference(map.values, map.n);
}

BucketSpec bucket_from_flat_image(const FibreArrayConfig& config) {
    const IntensityMap map = intensity_of(focal_field(config, PhaseVector::zeros(config.fibre_count())));
    const IntensityImage image = render_intensity_image(map, config.imaging).image;
    return bucket_from_reference(to_doubles(image), image.width);
}

double bucket_power(const std::vector<double>& values, std::size_t n, const BucketSpec& bucket) {
    if (values.size() != n * n) throw std::invalid_argument("bucket: malformed raster");
    const double r2 = bucket.radius * bucket.radius;
    const auto lo_r = static_cast<long>(std::floor(bucket.centre_row - bucket.radius));
    const auto hi_r = static_cast<long>(std::ceil(bucket.centre_row + bucket.radius));
    const auto lo_c = static_cast<long>(std::floor(bucket.centre_col - bucket.radius));
    const auto hi_c = static_cast<long>(std::ceil(bucket.centre_col + bucket.radius));
    if (lo_r < 0 || lo_c < 0 || hi_r >= static_cast<long>(n) || hi_c >= static_cast<long>(n)) {
        throw std::invalid_argument("bucket: bucket does not lie within the raster");
    }
    double inside = 0.0;
    for (long r = lo_r; r <= hi_r; ++r) {
        const double dr = static_cast<double>(r) - bucket.centre_row;
        for (long c = lo_c; c <= hi_c; ++c) {
            const double dc = static_cast<double>(c) - bucket.centre_col;
            if (dr * dr + dc * dc <= r2) inside += values[static_cast<std::size_t>(r) * n + static_cast<std::size_t>(c)];
        }
    }
    return inside;
}

double bucket_fraction(const std::vector<double>& values, std::size_t n, const BucketSpec& bucket) {
    const double total = std::accumulate(values.begin(), values.end(), 0.0);
    if (!(total > 0.0)) throw MetricUndefined("power in the bucket is undefined for an all-zero raster");
    return bucket_power(values, n, bucket) / total;
}

double pib_from_fraction(double fraction, const BucketSpec& bucket) {
    return 100.0 * fraction / bucket.reference_fraction;
}

double power_in_bucket(const IntensityMap& map, const BucketSpec& bucket) {
    return pib_from_fraction(bucket_fraction(map.values, map.n, bucket), bucket);
}

double power_in_bucket(const IntensityImage& image, const BucketSpec& bucket) {
    if (image.width != image.height) throw std::invalid_argument("power_in_bucket: image must be square");
    return pib_from_fraction(bucket_fraction(to_doubles(image), image.width, bucket), bucket);
}

RgbImage difference_image(const IntensityImage& input, const IntensityImage& output) {
    if (input.width != output.width || input.height != output.height) {
        throw std::invalid_argument("difference_image: dimension mismatch");
    }
    RgbImage out(input.width, input.height);
    for (std::size_t i = 0; i < input.pixels.size(); ++i) {
        const int d = static_cast<int>(output.pixels[i]) - static_cast<int>(input.pixels[i]);
        if (d > 0) out.pixels[3 * i] = static_cast<std::uint8_t>(std::min(d, 255));
        if (d < 0) out.pixels[3 * i + 1] = static_cast<std::uint8_t>(std::min(-d, 255));
    }
    return out;
}

double normalised_l1(const IntensityImage& a, const IntensityImage& b) {
    if (a.width != b.width || a.height != b.height) throw std::invalid_argument("normalised_l1: dimension mismatch");
    double diff = 0.0;
    double norm = 0.0;
    for (std::size_t i = 0; i < a.pixels.size(); ++i) {
        diff += std::abs(static_cast<double>(a.pixels[i]) - static_cast<double>(b.pixels[i]));
        norm += std::max(a.pixels[i], b.pixels[i]);
    }
    return norm > 0.0 ? diff / norm : 0.0;
}

double PibSummary::fraction_at_least(double threshold) const {
    for (std::size_t i = 0; i < thresholds.size(); ++i) {
        if (thresholds[i] == threshold) return ccdf[i];
    }
    throw std::invalid_argument("PibSummary: threshold not on the 0..100 grid");
}

PibSummary pib_statistics(std::span<const double> values) {
    if (values.empty()) throw std::invalid_argument("pib_statistics: empty list");
    PibSummary s;
    const double n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / n);
    for (int t = 0; t <= 100; ++t) {
        const double threshold = t;
        const auto count = std::count_if(values.begin(), values.end(), [&](double v) { return v >= threshold; });
        s.thresholds.push_back(threshold);
        s.ccdf.push_back(static_cast<double>(count) / n);
    }
    return s;
}

double ks_statistic(std::span<const double> a, std::span<const double> b) {
    if (a.empty() || b.empty()) throw std::invalid_argument("ks_statistic: empty sample");
    std::vector<double> x(a.begin(), a.end());
    std::vector<double> y(b.begin(), b.end());
    std::sort(x.begin(), x.end());
    std::sort(y.begin(), y.end());
    std::size_t i = 0, j = 0;
    double d = 0.0;
    while (i < x.size() && j < y.size()) {
        const double v = std::min(x[i], y[j]);
        while (i < x.size() && x[i] <= v) ++i;
        while (j < y.size() && y[j] <= v) ++j;
        d = std::max(d, std::abs(static_cast<double>(i) / x.size() - static_cast<double>(j) / y.size()));
    }
    return d;
}

}  // namespace cbc
