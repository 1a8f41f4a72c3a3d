#include <doctest.h>

#include <cmath>
#include <numbers>
#include <random>

#include "regiontag/error.hpp"
#include "regiontag/geometry.hpp"

using namespace regiontag;

namespace {

Vec3 spherical(double az_deg, double el_deg) {
    const double a = az_deg * std::numbers::pi / 180.0, e = el_deg * std::numbers::pi / 180.0;
    return {std::cos(e) * std::cos(a), std::cos(e) * std::sin(a), std::sin(e)};
}

ArrayGeometry x_axis_pair(double length) {
    ArrayGeometry g;
    g.mic_positions = {Vec3{length / 2, 0, 0}, Vec3{-length / 2, 0, 0}, Vec3{0, 0.01, 0}, Vec3{0, -0.01, 0}};
    return g;
}

}  // namespace

TEST_CASE("default tetrahedron") {
    const auto g = default_tetrahedral_geometry();
    const Vec3 c = g.centroid();
    CHECK(std::abs(c.x) < 1e-12);
    CHECK(std::abs(c.y) < 1e-12);
    CHECK(std::abs(c.z) < 1e-12);
    CHECK(g.mic_positions[0].norm() == doctest::Approx(0.042).epsilon(1e-12));
    CHECK(g.sound_speed == 343.0);
    CHECK(g.sample_rate == 24000.0);
    // chord from the spherical coordinates, computed independently
    const Vec3 a = spherical(45, 35), b = spherical(-45, -35);
    const double angle = std::acos(a.dot(b));
    CHECK(g.pair_distance(0, 1) == doctest::Approx(2 * 0.042 * std::sin(angle / 2)).epsilon(1e-12));
    CHECK_NOTHROW(g.validate());
}

TEST_CASE("geometry validation") {
    auto g = default_tetrahedral_geometry();
    g.mic_positions[0].x += 1e-6;
    CHECK_THROWS_AS(g.validate(), Error);
    g = default_tetrahedral_geometry();
    g.sound_speed = 0;
    CHECK_THROWS_AS(g.validate(), Error);
}

TEST_CASE("pair delay examples") {
    const auto g = default_tetrahedral_geometry();
    CHECK(pair_delay(g, {0, 0}, DirectionOfArrival::make(73, 12)) == 0.0);
    const auto x = x_axis_pair(0.1);
    CHECK(pair_delay(x, {0, 1}, DirectionOfArrival::make(0, 0)) == doctest::Approx(0.1 / 343.0).epsilon(1e-12));
    CHECK(std::abs(pair_delay(x, {0, 1}, DirectionOfArrival::make(90, 0))) < 1e-15);
}

TEST_CASE("pair delay antisymmetry and projection bound") {
    const auto g = default_tetrahedral_geometry();
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> az(-180, 180), el(-90, 90);
    for (int i = 0; i < 1000; ++i) {
        const auto doa = DirectionOfArrival::make(az(rng), el(rng));
        for (int a = 0; a < 4; ++a) {
            for (int b = 0; b < 4; ++b) {
                const MicPair p{a, b};
                const double d = pair_delay(g, p, doa);
                REQUIRE(d == doctest::Approx(-pair_delay(g, p.swapped(), doa)).epsilon(1e-12));
                REQUIRE(std::abs(d) <= g.pair_distance(a, b) / g.sound_speed + 1e-15);
            }
        }
    }
}

TEST_CASE("target phase") {
    const auto g = default_tetrahedral_geometry();
    const auto doa = DirectionOfArrival::make(30, 10);
    for (int p = 0; p < 4; ++p) CHECK(target_phase(g, {0, p}, doa, 0, 512) == 0.0);
    for (int k = 0; k <= 256; k += 17) CHECK(target_phase(g, {2, 2}, doa, k, 512) == 0.0);
    // linear in the bin index
    const double p1 = target_phase(g, {0, 1}, doa, 1, 512);
    for (int k = 0; k <= 256; ++k) CHECK(target_phase(g, {0, 1}, doa, k, 512) == doctest::Approx(k * p1).epsilon(1e-12));
    CHECK_THROWS_AS(target_phase(g, {0, 1}, doa, 257, 512), Error);
}

TEST_CASE("literal planar steering agrees with the geometric delay on an x-axis pair") {
    const double phi = 0.08;
    const auto x = x_axis_pair(phi);
    for (double theta : {-170.0, -90.0, -12.5, 0.0, 33.0, 90.0, 145.0}) {
        const auto doa = DirectionOfArrival::make(theta, 0);
        for (int k : {0, 1, 37, 128, 256}) {
            const double literal = 2 * std::numbers::pi * (k * 24000.0 / 512) * phi *
                                   std::cos(theta * std::numbers::pi / 180) / 343.0;
            CHECK(std::abs(target_phase(x, {0, 1}, doa, k, 512) - literal) < 1e-12);
            CHECK(std::abs(target_phase(x, {0, 1}, doa, k, 512, SteeringModel::LiteralPlanar) - literal) < 1e-12);
        }
    }
}

TEST_CASE("azimuth wrapping and doa ranges") {
    CHECK(wrap_azimuth(180) == -180);
    CHECK(wrap_azimuth(-180) == -180);
    CHECK(wrap_azimuth(390) == doctest::Approx(30));
    CHECK(wrap_azimuth(-190) == doctest::Approx(170));
    CHECK(DirectionOfArrival::make(270, 0).azimuth == doctest::Approx(-90));
    CHECK_THROWS_AS(DirectionOfArrival::make(0, 91), Error);
}

TEST_CASE("geometry file round trip") {
    const auto g = default_tetrahedral_geometry();
    const auto back = parse_geometry(format_geometry(g));
    for (int i = 0; i < 4; ++i) {
        CHECK(back.mic_positions[i].x == g.mic_positions[i].x);
        CHECK(back.mic_positions[i].y == g.mic_positions[i].y);
        CHECK(back.mic_positions[i].z == g.mic_positions[i].z);
    }
    const auto custom = parse_geometry("# square\nmic0 = 0.1 0 0\nmic1 = -0.1 0 0\nmic2 = 0 0.1 0\nmic3 = 0 -0.1 0\nsound_speed = 340\n");
    CHECK(custom.sound_speed == 340);
    CHECK(custom.pair_distance(0, 1) == doctest::Approx(0.2));
    CHECK_THROWS_AS(parse_geometry("mic0 = 1 2\n"), Error);
    CHECK_THROWS_AS(parse_geometry("speed = 3\n"), Error);
}
