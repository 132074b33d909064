#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cbc/array.hpp"
#include "cbc/imaging.hpp"
#include "cbc/propagation.hpp"

namespace cbc {

/// Circular bucket on a raster, with the flat-phase reference fraction it was calibrated on.
struct BucketSpec {
    double centre_row = 0.0;
    double centre_col = 0.0;
    double radius = 0.0;  // pixels; pixel centres at distance <= radius are inside
    double reference_fraction = 1.0;

    void validate() const;
    bool operator==(const BucketSpec&) const = default;
};

/// Mean of bilinear samples on circles of radius 0, 1, ..., max_radius about the centre.
std::vector<double> radial_profile(const std::vector<double>& values, std::size_t n, double centre_row,
                                   double centre_col, std::size_t max_radius);

/// Centre at the peak pixel (refined to the centroid of its half-maximum core), radius at the first
/// local minimum of the radial profile, reference fraction measured on the same raster.
BucketSpec bucket_from_reference(const std::vector<double>& values, std::size_t n);

/// Bucket on the focal intensity map of the flat-phase profile.
BucketSpec bucket_from_flat(const FibreArrayConfig& config);
/// Bucket on the rendered 8-bit flat-phase intensity image.
BucketSpec bucket_from_flat_image(const FibreArrayConfig& config);

/// Fraction of the raster total inside the bucket. Throws MetricUndefined for an all-zero raster.
double bucket_fraction(const std::vector<double>& values, std::size_t n, const BucketSpec& bucket);
double bucket_power(const std::vector<double>& values, std::size_t n, const BucketSpec& bucket);

/// 100 x fraction / reference_fraction. Not clamped: may exceed 100.
double pib_from_fraction(double fraction, const BucketSpec& bucket);
double power_in_bucket(const IntensityMap& map, const BucketSpec& bucket);
double power_in_bucket(const IntensityImage& image, const BucketSpec& bucket);

/// Output minus input: positive differences in red, negative in green.
RgbImage difference_image(const IntensityImage& input, const IntensityImage& output);

/// sum |a - b| / sum max(a, b), in [0, 1]; 0 when both are all-zero.
double normalised_l1(const IntensityImage& a, const IntensityImage& b);

struct PibSummary {
    double mean = 0.0;
    double stddev = 0.0;  // population standard deviation
    std::vector<double> thresholds;   // 0, 1, ..., 100
    std::vector<double> ccdf;         // fraction of values >= threshold
    double fraction_at_least(double threshold) const;
};

PibSummary pib_statistics(std::span<const double> values);

/// Two-sample Kolmogorov-Smirnov statistic sup |F_a - F_b|.
double ks_statistic(std::span<const double> a, std::span<const double> b);

std::vector<double> to_doubles(const IntensityImage& image);

}  // namespace cbc
