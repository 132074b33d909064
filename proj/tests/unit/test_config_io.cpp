#include <doctest.h>

#include <filesystem>
#include <fstream>

#include "cbc/config_io.hpp"
#include "cbc/errors.hpp"
#include "cbc/rng.hpp"

using namespace cbc;

namespace {

struct TempDir {
    std::filesystem::path path;
    explicit TempDir(const std::string& name) : path(std::filesystem::temp_directory_path() / name) {
        std::filesystem::remove_all(path);
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
};

}  // namespace

TEST_CASE("default configuration") {
    const FibreArrayConfig c = default_config();
    CHECK(c.rings == 2);
    CHECK(c.fibre_count() == 19);
    CHECK(c.fibre_radius == 500e-6);
    CHECK(c.centre_pitch == 1e-3);
    CHECK(c.gaussian_radius == doctest::Approx(0.8 * c.fibre_radius));
    CHECK(c.wavelength == 1e-6);
    CHECK(c.focal_distance == 0.25);
    CHECK(c.grid.n == 1000);
    CHECK(c.grid.pitch == 10e-6);
    CHECK(c.imaging.intensity_crop == 100);
    CHECK(c.imaging.phase_crop == 512);
    CHECK(c.imaging.image_size == 256);
    CHECK(c.band_limit);
    CHECK_FALSE(c.spherical_lens);
}

TEST_CASE("key-value parsing") {
    const KeyValues kv = parse_key_values("# comment\n\n  rings = 1 \nwavelength=1.064e-6\r\n");
    CHECK(kv.size() == 2);
    CHECK(kv.at("rings") == "1");
    CHECK(kv.at("wavelength") == "1.064e-6");
    CHECK_THROWS_AS(parse_key_values("rings 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key_values("= 1\n"), std::invalid_argument);
    CHECK_THROWS_AS(parse_key_values("a = 1\na = 2\n"), std::invalid_argument);
    CHECK(parse_key_values(format_key_values(kv)) == kv);
}

TEST_CASE("config keys") {
    FibreArrayConfig c = config_from_key_values({{"rings", "1"}, {"grid_n", "512"}, {"active_fibres", "3"}});
    CHECK(c.rings == 1);
    CHECK(c.grid.n == 512);
    CHECK(c.fibre_count() == 3);
    CHECK_THROWS_AS(config_from_key_values({{"ring", "1"}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_key_values({{"rings", "two"}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_key_values({{"grid_pitch", "1e-5x"}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_key_values({{"grid_n", "-4"}}), std::invalid_argument);
    CHECK_THROWS_AS(config_from_key_values({{"band_limit", "maybe"}}), std::invalid_argument);
    // parsed but invalid as a whole
    CHECK_THROWS_AS(config_from_key_values({{"gaussian_radius", "6e-4"}}), std::invalid_argument);
}

TEST_CASE("config round trip and hash") {
    TempDir dir("cbc_config_test");
    FibreArrayConfig c = default_config();
    c.wavelength = 1.0 / 3.0 * 1e-6;
    c.spherical_lens = true;
    c.active_fibres = 7;
    save_config(c, dir.path / "c.txt");
    const FibreArrayConfig back = load_config(dir.path / "c.txt");
    CHECK(config_to_key_values(back) == config_to_key_values(c));
    CHECK(back.wavelength == c.wavelength);
    CHECK(config_hash(back) == config_hash(c));
    CHECK(config_hash(c).size() == 64);

    FibreArrayConfig other = c;
    other.grid.pitch *= 1.0000001;
    CHECK(config_hash(other) != config_hash(c));
    CHECK_THROWS_AS(load_config(dir.path / "missing.txt"), IoError);
}

TEST_CASE("phase vectors as JSON") {
    for (std::uint64_t s = 0; s < 50; ++s) {
        const PhaseVector p = random_phase_vector(19, s);
        REQUIRE(phases_from_json(phases_to_json(p)) == p);
    }
    CHECK(phases_to_json(PhaseVector({0.0, 0.5})) == "[0.0,0.5]");
    CHECK_THROWS_AS(phases_from_json("{}"), std::invalid_argument);
    CHECK_THROWS_AS(phases_from_json("[]"), std::invalid_argument);
    CHECK_THROWS_AS(phases_from_json("[0, \"a\"]"), std::invalid_argument);
    CHECK_THROWS_AS(phases_from_json("[0.3, 0.1]"), std::invalid_argument);
    CHECK_THROWS_AS(phases_from_json("[0, 4]"), std::invalid_argument);
    CHECK_THROWS_AS(phases_from_json("[0, 1"), std::invalid_argument);

    TempDir dir("cbc_phase_test");
    const PhaseVector p = random_phase_vector(7, 1);
    save_phases(p, dir.path / "p.json");
    CHECK(load_phases(dir.path / "p.json") == p);
    CHECK_THROWS_AS(load_phases(dir.path / "none.json"), IoError);
}

TEST_CASE("derived seeds") {
    CHECK(derive_seed(1, 0) == derive_seed(1, 0));
    CHECK(derive_seed(1, 0) != derive_seed(1, 1));
    CHECK(derive_seed(1, 0) != derive_seed(2, 0));
    // frozen so datasets stay reproducible across releases
    CHECK(splitmix64(0) == 0xe220a8397b1dcdafULL);
}
