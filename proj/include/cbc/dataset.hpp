#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "cbc/array.hpp"
#include "cbc/imaging.hpp"

namespace cbc {

inline constexpr int kManifestSchemaVersion = 1;

struct PairEntry {
    std::size_t id = 0;
    std::uint64_t seed = 0;
    PhaseVector phases;
    std::string intensity_file;  // relative to the dataset directory
    std::string phase_file;
    std::string intensity_sha256;  // of the file bytes
    std::string phase_sha256;
};

/// Layout: manifest.json, pairs/{id:06}_x.png (intensity, RGB-equal), pairs/{id:06}_y.png (phase).
struct PairManifest {
    int schema_version = kManifestSchemaVersion;
    bool complete = false;
    FibreArrayConfig config;
    std::string config_hash;
    std::uint64_t base_seed = 0;
    std::size_t count = 0;
    std::vector<PairEntry> entries;  // sorted by id
};

/// Per-pair seed: derive_seed(base_seed, id).
std::uint64_t pair_seed(std::uint64_t base_seed, std::size_t id);

std::string intensity_file_name(std::size_t id);
std::string phase_file_name(std::size_t id);

/// The two images of one pair, simulated on the full grid.
std::pair<IntensityImage, PhaseImage> simulate_pair(const FibreArrayConfig& config, const PhaseVector& phases);

/// Generates (or resumes) a dataset. Existing entries of an incomplete manifest with
/// the same config and base seed are kept when their files still match. On an I/O
/// failure the manifest is written with complete = false before the error propagates.
/// Output bytes do not depend on `workers` (0 = default_workers()).
PairManifest generate_pairs(const FibreArrayConfig& config, std::size_t count, std::uint64_t base_seed,
                            const std::filesystem::path& out_dir, std::size_t workers = 0);

std::string manifest_to_json(const PairManifest& manifest);
PairManifest manifest_from_json(const std::string& text);
/// Throws IoError when manifest.json is missing or unreadable.
PairManifest load_manifest(const std::filesystem::path& dir);
void save_manifest(const PairManifest& manifest, const std::filesystem::path& dir);

struct EntryCheck {
    std::size_t id = 0;
    bool ok = true;
    bool resimulated = false;
    std::vector<std::string> problems;
};

struct VerifyReport {
    bool manifest_complete = false;
    std::vector<EntryCheck> entries;
    std::size_t failures() const;
    bool ok() const { return manifest_complete && failures() == 0; }
};

/// Checks presence and hashes of every file, and re-simulates `resimulate` evenly
/// spaced entries, comparing decoded rasters bit for bit.
VerifyReport verify_manifest(const std::filesystem::path& dir, std::size_t resimulate = 8, std::size_t workers = 0);

}  // namespace cbc
