#pragma once

#include <cstdint>
#include <random>

namespace cbc {

using Rng = std::mt19937_64;

/// SplitMix64 finaliser; a bijective 64-bit mix.
std::uint64_t splitmix64(std::uint64_t x);

/// Stable per-item seed for item `id` of a run seeded with `base`.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t id);

/// Uniform double in [0, 1) built from the top 53 bits of one draw.
/// Spelled out (rather than std::uniform_real_distribution) so phase draws
/// are identical across standard library implementations.
inline double uniform_unit(Rng& rng) {
    return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

}  // namespace cbc
