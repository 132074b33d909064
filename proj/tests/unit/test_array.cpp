#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "cbc/array.hpp"
#include "cbc/config_io.hpp"
#include "cbc/rng.hpp"

using namespace cbc;

namespace {

FibreArrayConfig small_config(int rings = 1) {
    FibreArrayConfig c;
    c.rings = rings;
    c.grid.n = 256;
    c.grid.pitch = 20e-6;
    return c;
}

bool same_point_set(std::vector<Vec2> a, std::vector<Vec2> b, double tol) {
    if (a.size() != b.size()) return false;
    for (const auto& p : a) {
        const auto it = std::find_if(b.begin(), b.end(), [&](const Vec2& q) {
            return std::abs(p.x - q.x) <= tol && std::abs(p.y - q.y) <= tol;
        });
        if (it == b.end()) return false;
        b.erase(it);
    }
    return true;
}

}  // namespace

TEST_CASE("hex_positions: counts by ring") {
    const std::size_t expected[] = {1, 7, 19, 37, 61};
    for (int r = 0; r <= 4; ++r) {
        CHECK(hex_positions(r, 1e-3).size() == expected[r]);
        CHECK(hex_fibre_count(r) == expected[r]);
    }
    CHECK_THROWS_AS(hex_positions(-1, 1e-3), std::invalid_argument);
    CHECK_THROWS_AS(hex_positions(1, 0.0), std::invalid_argument);
}

TEST_CASE("hex_positions: one ring") {
    const auto p = hex_positions(1, 1e-3);
    CHECK(p[0].x == 0.0);
    CHECK(p[0].y == 0.0);
    CHECK(p[1].x == doctest::Approx(1e-3));
    CHECK(std::abs(p[1].y) < 1e-15);
    CHECK(p[2].x == doctest::Approx(0.5e-3));
    CHECK(p[2].y == doctest::Approx(std::sqrt(3.0) / 2 * 1e-3));
}

TEST_CASE("hex_positions: closed under 60 degree rotation") {
    for (int r = 0; r <= 4; ++r) {
        const auto p = hex_positions(r, 1e-3);
        std::vector<Vec2> rot;
        const double c = std::cos(kPi / 3), s = std::sin(kPi / 3);
        for (const auto& q : p) rot.push_back({c * q.x - s * q.y, s * q.x + c * q.y});
        CHECK(same_point_set(p, rot, 1e-12));
    }
}

TEST_CASE("hex_positions: every ring starts on +x and runs counter-clockwise") {
    const auto p = hex_positions(3, 1e-3);
    std::size_t start = 1;
    for (int ring = 1; ring <= 3; ++ring) {
        CHECK(p[start].x == doctest::Approx(ring * 1e-3));
        CHECK(std::abs(p[start].y) < 1e-12);
        // the next site lies at a larger polar angle
        CHECK(std::atan2(p[start + 1].y, p[start + 1].x) > 0.0);
        start += 6 * ring;
    }
}

TEST_CASE("ring rotation permutation moves each site onto its rotated image") {
    const auto p = hex_positions(2, 1e-3);
    const auto perm = ring_rotation_permutation(2, 1);
    const double c = std::cos(kPi / 3), s = std::sin(kPi / 3);
    for (std::size_t i = 0; i < p.size(); ++i) {
        const Vec2 q = p[perm[i]];
        CHECK(q.x == doctest::Approx(c * p[i].x - s * p[i].y).epsilon(1e-9).scale(1e-3));
        CHECK(q.y == doctest::Approx(s * p[i].x + c * p[i].y).epsilon(1e-9).scale(1e-3));
    }
    const auto six = ring_rotation_permutation(2, 6);
    for (std::size_t i = 0; i < six.size(); ++i) CHECK(six[i] == i);

    const auto refl = point_reflection_permutation(2);
    for (std::size_t i = 0; i < p.size(); ++i) {
        CHECK(p[refl[i]].x == doctest::Approx(-p[i].x).scale(1e-3));
        CHECK(p[refl[i]].y == doctest::Approx(-p[i].y).scale(1e-3));
    }
}

TEST_CASE("permute_phases places entry i at perm[i]") {
    const PhaseVector v({0.0, 0.1, 0.2});
    const std::vector<std::size_t> perm{0, 2, 1};
    const PhaseVector out = permute_phases(v, perm);
    CHECK(out[1] == 0.2);
    CHECK(out[2] == 0.1);
}

TEST_CASE("random_phase_vector") {
    CHECK(random_phase_vector(1, 123).phases == std::vector<double>{0.0});
    CHECK(random_phase_vector(19, 42) == random_phase_vector(19, 42));
    CHECK_FALSE(random_phase_vector(19, 42) == random_phase_vector(19, 43));
    random_phase_vector(19, 7).validate();

    const std::size_t draws = 100000;
    std::vector<double> sc(19, 0.0), ss(19, 0.0);
    for (std::size_t d = 0; d < draws; ++d) {
        const PhaseVector v = random_phase_vector(19, derive_seed(99, d));
        for (std::size_t k = 1; k < 19; ++k) {
            sc[k] += std::cos(v[k]);
            ss[k] += std::sin(v[k]);
        }
    }
    for (std::size_t k = 1; k < 19; ++k) {
        CHECK(std::abs(sc[k] / draws) < 0.02);
        CHECK(std::abs(ss[k] / draws) < 0.02);
    }
}

TEST_CASE("wrap_phase") {
    CHECK(wrap_phase(0.0) == 0.0);
    CHECK(wrap_phase(3 * kPi) == doctest::Approx(kPi));
    CHECK(wrap_phase(-kPi) == kPi);
    CHECK(wrap_phase(kPi) == kPi);
    CHECK_THROWS_AS(wrap_phase(std::nan("")), std::invalid_argument);
    CHECK_THROWS_AS(wrap_phase(INFINITY), std::invalid_argument);

    Rng rng(2024);
    for (int i = 0; i < 1000000; ++i) {
        const double x = (uniform_unit(rng) - 0.5) * 200.0;
        const double w = wrap_phase(x);
        REQUIRE(w > -kPi);
        REQUIRE(w <= kPi);
        REQUIRE(wrap_phase(w) == w);
        REQUIRE(std::abs(std::remainder(x - w, 2 * kPi)) < 1e-9);
    }
}

TEST_CASE("rereference pins the central fibre") {
    const PhaseVector v({1.0, 2.0, -3.0});
    const PhaseVector r = rereference(v);
    CHECK(r[0] == 0.0);
    CHECK(r[1] == doctest::Approx(1.0));
    CHECK(r[2] == doctest::Approx(wrap_phase(-4.0)));
}

TEST_CASE("PhaseVector::validate") {
    CHECK_NOTHROW(PhaseVector({0.0, kPi}).validate());
    CHECK_THROWS_AS(PhaseVector({0.1, 0.0}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(PhaseVector({0.0, -kPi}).validate(), std::invalid_argument);
    CHECK_THROWS_AS(PhaseVector({0.0, 4.0}).validate(), std::invalid_argument);
}

TEST_CASE("config validation") {
    FibreArrayConfig c = default_config();
    CHECK_NOTHROW(c.validate());
    CHECK(c.fibre_count() == 19);

    FibreArrayConfig bad = c;
    bad.gaussian_radius = bad.fibre_radius;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.grid.n = 999;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.grid.pitch = 0.0;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
    bad = c;
    bad.grid.n = 200;  // 2 mm window cannot hold the outer ring
    CHECK_THROWS(bad.validate());
    bad = c;
    bad.rings = -1;
    CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

    FibreArrayConfig seven = c;
    seven.active_fibres = 7;
    CHECK(seven.fibre_count() == 7);
    CHECK(fibre_positions(seven).size() == 7);
}

TEST_CASE("assemble_field: amplitudes and phases") {
    FibreArrayConfig c = small_config(1);
    const std::size_t n = c.grid.n;
    const auto centres = fibre_positions(c);

    PhaseVector phases = PhaseVector::zeros(7);
    phases[3] = kPi / 3;
    const ComplexField f = assemble_field(c, phases);
    const auto owner = fibre_membership(c);

    for (std::size_t k = 0; k < centres.size(); ++k) {
        const double col = centres[k].x / c.grid.pitch + static_cast<double>(n / 2);
        const double row = centres[k].y / c.grid.pitch + static_cast<double>(n / 2);
        const auto v = f.at(static_cast<std::size_t>(std::lround(row)), static_cast<std::size_t>(std::lround(col)));
        CHECK(std::abs(v) == doctest::Approx(1.0).epsilon(5e-3));
    }
    for (std::size_t r = 0; r < n; ++r) {
        for (std::size_t col = 0; col < n; ++col) {
            const auto v = f.at(r, col);
            const double x = sample_coordinate(col, n, c.grid.pitch);
            const double y = sample_coordinate(r, n, c.grid.pitch);
            double nearest = INFINITY;
            for (const auto& p : centres) nearest = std::min(nearest, std::hypot(x - p.x, y - p.y));
            if (nearest > c.fibre_radius) {
                REQUIRE(v == std::complex<double>(0.0, 0.0));
                REQUIRE(owner[r * n + col] == -1);
            }
            if (owner[r * n + col] == 3) REQUIRE(std::arg(v) == doctest::Approx(kPi / 3));
        }
    }

    CHECK_THROWS_AS(assemble_field(c, PhaseVector::zeros(6)), std::invalid_argument);
}

TEST_CASE("assemble_field: total power against the closed-form truncated Gaussian") {
    FibreArrayConfig c = small_config(2);
    c.grid.n = 512;
    c.grid.pitch = 10e-6;
    const ComplexField f = assemble_field(c, random_phase_vector(19, 5));
    double power = 0.0;
    for (const auto& v : f.samples) power += std::norm(v);
    power *= c.grid.pitch * c.grid.pitch;
    const double analytic = 19 * truncated_gaussian_power(c.gaussian_radius, c.fibre_radius);
    CHECK(std::abs(power / analytic - 1.0) < 5e-3);
    // pi w^2 / 2 (1 - exp(-2 a^2 / w^2)) for a = 500, w = 400 um
    CHECK(truncated_gaussian_power(400e-6, 500e-6) == doctest::Approx(2.40285e-7).epsilon(1e-4));
}
