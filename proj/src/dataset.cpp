#include "cbc/dataset.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cbc/config_io.hpp"
#include "cbc/errors.hpp"
#include "cbc/hashing.hpp"
#include "cbc/parallel.hpp"
#include "cbc/png_io.hpp"
#include "cbc/propagation.hpp"
#include "cbc/rng.hpp"

namespace cbc {

namespace {

using nlohmann::json;

std::string numbered(std::size_t id, const char* suffix) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "pairs/%06zu_%s.png", id, suffix);
    return buf;
}

// Choices baked into the images, recorded so a dataset describes itself.
json encoding_notes() {
    return {
        {"intensity", "crop intensity_crop samples about the axis, bilinear resize to image_size, max -> 255, round"},
        {"phase", "R = round(255 (cos + 1) / 2), G = 0, B = round(255 (sin + 1) / 2) inside discs, black outside; "
                  "crop phase_crop samples, bilinear resize to image_size, round"},
        {"resize", "bilinear, axis-centred, single resampling step"},
        {"intensity_png", "RGB with equal channels"},
        {"seed", "per-pair seed = derive_seed(base_seed, id)"},
    };
}

bool entry_files_match(const std::filesystem::path& dir, const PairEntry& e) {
    try {
        return sha256_file(dir / e.intensity_file) == e.intensity_sha256 && sha256_file(dir / e.phase_file) == e.phase_sha256;
    } catch (const IoError&) {
        return false;
    }
}

}  // namespace

std::uint64_t pair_seed(std::uint64_t base_seed, std::size_t id) { return derive_seed(base_seed, id); }

std::string intensity_file_name(std::size_t id) { return numbered(id, "x"); }
std::string phase_file_name(std::size_t id) { return numbered(id, "y"); }

std::pair<IntensityImage, PhaseImage> simulate_pair(const FibreArrayConfig& config, const PhaseVector& phases) {
    const RenderedIntensity r = render_intensity_image(intensity_of(focal_field(config, phases)), config.imaging);
    if (r.degenerate) throw MetricUndefined("simulated intensity is all zero");
    return {r.image, render_phase_image(config, phases)};
}

std::string manifest_to_json(const PairManifest& m) {
    json config = json::object();
    for (const auto& [k, v] : config_to_key_values(m.config)) config[k] = v;
    json entries = json::array();
    for (const auto& e : m.entries) {
        entries.push_back({
            {"id", e.id},
            {"seed", e.seed},
            {"phases", e.phases.phases},
            {"intensity_file", e.intensity_file},
            {"phase_file", e.phase_file},
            {"intensity_sha256", e.intensity_sha256},
            {"phase_sha256", e.phase_sha256},
        });
    }
    const json j = {
        {"schema_version", m.schema_version},
        {"complete", m.complete},
        {"config", config},
        {"encoding", encoding_notes()},
        {"config_hash", m.config_hash},
        {"base_seed", m.base_seed},
        {"count", m.count},
        {"entries", entries},
    };
    return j.dump(1) + "\n";
}

PairManifest manifest_from_json(const std::string& text) {
    PairManifest m;
    try {
        const json j = json::parse(text);
        m.schema_version = j.at("schema_version").get<int>();
        if (m.schema_version != kManifestSchemaVersion) {
            throw std::invalid_argument("manifest: unsupported schema_version " + std::to_string(m.schema_version));
        }
        m.complete = j.at("complete").get<bool>();
        KeyValues kv;
        for (const auto& [k, v] : j.at("config").items()) kv[k] = v.get<std::string>();
        m.config = config_from_key_values(kv);
        m.config_hash = j.at("config_hash").get<std::string>();
        m.base_seed = j.at("base_seed").get<std::uint64_t>();
        m.count = j.at("count").get<std::size_t>();
        for (const auto& e : j.at("entries")) {
            PairEntry p;
            p.id = e.at("id").get<std::size_t>();
            p.seed = e.at("seed").get<std::uint64_t>();
            p.phases = PhaseVector(e.at("phases").get<std::vector<double>>());
            p.intensity_file = e.at("intensity_file").get<std::string>();
            p.phase_file = e.at("phase_file").get<std::string>();
            p.intensity_sha256 = e.at("intensity_sha256").get<std::string>();
            p.phase_sha256 = e.at("phase_sha256").get<std::string>();
            m.entries.push_back(std::move(p));
        }
    } catch (const json::exception& e) {
        throw std::invalid_argument(std::string("manifest: ") + e.what());
    }
    return m;
}

PairManifest load_manifest(const std::filesystem::path& dir) {
    const auto path = dir / "manifest.json";
    std::ifstream in(path);
    if (!in) throw IoError("cannot read " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return manifest_from_json(ss.str());
}

void save_manifest(const PairManifest& manifest, const std::filesystem::path& dir) {
    // Write then rename so a crash never leaves a truncated manifest behind.
    const auto path = dir / "manifest.json";
    const auto tmp = dir / "manifest.json.tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << manifest_to_json(manifest);
        if (!out) throw IoError("write failed: " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw IoError("cannot replace " + path.string() + ": " + ec.message());
}

PairManifest generate_pairs(const FibreArrayConfig& config, std::size_t count, std::uint64_t base_seed,
                            const std::filesystem::path& out_dir, std::size_t workers) {
    config.validate();
    if (count < 1) throw std::invalid_argument("generate_pairs: count must be >= 1");
    std::error_code ec;
    std::filesystem::create_directories(out_dir / "pairs", ec);
    if (ec) throw IoError("cannot create " + (out_dir / "pairs").string() + ": " + ec.message());

    PairManifest m;
    m.config = config;
    m.config_hash = config_hash(config);
    m.base_seed = base_seed;
    m.count = count;

    std::vector<std::optional<PairEntry>> slots(count);
    if (std::filesystem::exists(out_dir / "manifest.json")) {
        const PairManifest old = load_manifest(out_dir);
        if (old.config_hash == m.config_hash && old.base_seed == base_seed) {
            for (const auto& e : old.entries) {
                if (e.id < count && entry_files_match(out_dir, e)) slots[e.id] = e;
            }
        }
    }

    std::vector<std::size_t> todo;
    for (std::size_t id = 0; id < count; ++id) {
        if (!slots[id]) todo.push_back(id);
    }
    const std::size_t fibres = config.fibre_count();
    std::mutex slot_mutex;
    const auto collect = [&] {
        m.entries.clear();
        for (const auto& s : slots) {
            if (s) m.entries.push_back(*s);
        }
    };
    try {
        parallel_for(todo.size(), workers, [&](std::size_t t) {
            const std::size_t id = todo[t];
            PairEntry e;
            e.id = id;
            e.seed = pair_seed(base_seed, id);
            e.phases = random_phase_vector(fibres, e.seed);
            const auto [intensity, phase] = simulate_pair(config, e.phases);
            e.intensity_file = intensity_file_name(id);
            e.phase_file = phase_file_name(id);
            write_png(gray_to_rgb(intensity), out_dir / e.intensity_file);
            write_png(phase, out_dir / e.phase_file);
            e.intensity_sha256 = sha256_file(out_dir / e.intensity_file);
            e.phase_sha256 = sha256_file(out_dir / e.phase_file);
            std::lock_guard lock(slot_mutex);
            slots[id] = std::move(e);
        });
    } catch (...) {
        collect();
        m.complete = false;
        try {
            save_manifest(m, out_dir);
        } catch (const std::exception&) {
        }
        throw;
    }
    collect();
    m.complete = true;
    save_manifest(m, out_dir);
    return m;
}

std::size_t VerifyReport::failures() const {
    return static_cast<std::size_t>(std::count_if(entries.begin(), entries.end(), [](const EntryCheck& e) { return !e.ok; }));
}

VerifyReport verify_manifest(const std::filesystem::path& dir, std::size_t resimulate, std::size_t workers) {
    const PairManifest m = load_manifest(dir);
    VerifyReport report;
    report.manifest_complete = m.complete && m.entries.size() == m.count;
    report.entries.resize(m.entries.size());

    std::vector<bool> sampled(m.entries.size(), false);
    const std::size_t picks = std::min(resimulate, m.entries.size());
    for (std::size_t i = 0; i < picks; ++i) sampled[i * m.entries.size() / picks] = true;

    const std::string expected_hash = config_hash(m.config);
    parallel_for(m.entries.size(), workers, [&](std::size_t i) {
        const PairEntry& e = m.entries[i];
        EntryCheck& check = report.entries[i];
        check.id = e.id;
        const auto fail = [&](std::string why) {
            check.ok = false;
            check.problems.push_back(std::move(why));
        };
        if (e.id != i) fail("id out of sequence (expected " + std::to_string(i) + ")");
        if (m.config_hash != expected_hash) fail("config hash does not match the recorded config");
        if (e.seed != pair_seed(m.base_seed, e.id)) fail("seed does not follow from base_seed");
        try {
            e.phases.validate();
            if (e.phases.size() != m.config.fibre_count()) fail("phase vector length does not match the config");
        } catch (const std::exception& ex) {
            fail(ex.what());
        }
        for (const auto& [file, hash] : {std::pair{e.intensity_file, e.intensity_sha256}, std::pair{e.phase_file, e.phase_sha256}}) {
            if (!std::filesystem::exists(dir / file)) {
                fail("missing " + file);
                continue;
            }
            try {
                if (sha256_file(dir / file) != hash) fail("hash mismatch for " + file);
            } catch (const std::exception& ex) {
                fail(ex.what());
            }
        }
        if (!sampled[i] || !check.ok) return;
        check.resimulated = true;
        try {
            const auto [intensity, phase] = simulate_pair(m.config, e.phases);
            if (!(read_png_rgb(dir / e.intensity_file) == gray_to_rgb(intensity))) fail("re-simulated intensity differs");
            if (!(read_png_rgb(dir / e.phase_file) == phase)) fail("re-simulated phase image differs");
        } catch (const std::exception& ex) {
            fail(std::string("re-simulation failed: ") + ex.what());
        }
    });
    return report;
}

}  // namespace cbc
