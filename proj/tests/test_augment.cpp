#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "oracles.hpp"
#include "regiontag/augment.hpp"
#include "regiontag/error.hpp"

using namespace regiontag;

namespace {

const ArrayGeometry& geom() {
    static const auto g = default_tetrahedral_geometry();
    return g;
}

SceneAnnotation one_event_annotation(const EventSpec& e, double length) {
    SceneSpec s;
    s.clip_length = length;
    s.events = {e};
    return annotate_scene(s);
}

// largest |DF(original, az) - DF(transformed, mapped az)| over all bins, with a pair set
// that is closed under channel permutations
double df_consistency_error(const oracle::SingleSource& s, const AcsTransform& t) {
    const auto ann = one_event_annotation(s.event, s.clip.duration());
    const auto aug = apply_acs(s.clip, ann, t);
    const auto pairs = oracle::all_pairs();
    const auto a = directional_feature(stft(s.clip), geom(), pairs, s.event.azimuth);
    const auto b = directional_feature(stft(aug.clip), geom(), pairs, aug.annotation.frames[0][0].azimuth);
    double worst = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) worst = std::max(worst, std::abs(a.values[i] - b.values[i]));
    return worst;
}

}  // namespace

TEST_CASE("acs table structure") {
    const auto table = derive_acs_table(geom());
    CHECK(table[0].rotation_deg == 0);
    CHECK_FALSE(table[0].reflect);
    CHECK(table[0].permutation == std::array<int, 4>{0, 1, 2, 3});
    for (const auto& t : table) {
        auto p = t.permutation;
        std::sort(p.begin(), p.end());
        CHECK(p == std::array<int, 4>{0, 1, 2, 3});
        // mic i lands where the map sends it
        for (int i = 0; i < 4; ++i) {
            const Vec3 m = geom().mic_positions[i];
            const double az = std::atan2(m.y, m.x) * 180 / std::numbers::pi;
            const double el = std::asin(m.z / m.norm()) * 180 / std::numbers::pi;
            const Vec3 target = geom().mic_positions[t.permutation[i]];
            const Vec3 mapped = DirectionOfArrival::make(t.map_azimuth(az), t.map_elevation(el)).unit_vector() * m.norm();
            REQUIRE((mapped - target).norm() < 1e-12);
        }
    }
}

TEST_CASE("acs composition is the dihedral group of order 8") {
    const auto table = derive_acs_table(geom());
    // compare with D4 acting on azimuth: check composition against the azimuth maps directly
    for (int a = 0; a < 8; ++a) {
        for (int b = 0; b < 8; ++b) {
            const int c = compose_acs(table, a, b);
            REQUIRE(c >= 0);
            for (int i = 0; i < 4; ++i) REQUIRE(table[c].permutation[i] == table[b].permutation[table[a].permutation[i]]);
            REQUIRE(table[c].flip_elevation == (table[a].flip_elevation != table[b].flip_elevation));
            for (double az : {-170.0, -33.0, 0.0, 12.0, 95.0}) {
                REQUIRE(wrap_azimuth(table[c].map_azimuth(az)) ==
                        doctest::Approx(wrap_azimuth(table[b].map_azimuth(table[a].map_azimuth(az)))));
            }
        }
    }
    // group axioms: identity, closure (above), inverses
    for (int a = 0; a < 8; ++a) {
        CHECK(compose_acs(table, 0, a) == a);
        int inverses = 0;
        for (int b = 0; b < 8; ++b) inverses += compose_acs(table, a, b) == 0;
        CHECK(inverses == 1);
    }
    // quarter turn twice is the half turn
    int quarter = -1, half = -1;
    for (const auto& t : table) {
        if (!t.reflect && t.rotation_deg == 90) quarter = t.id;
        if (!t.reflect && t.rotation_deg == 180) half = t.id;
    }
    CHECK(compose_acs(table, quarter, quarter) == half);
}

TEST_CASE("apply acs") {
    const auto table = derive_acs_table(geom());
    const auto s = oracle::single_source_scene(geom(), 8);
    const auto ann = one_event_annotation(s.event, s.clip.duration());
    SUBCASE("identity") {
        const auto out = apply_acs(s.clip, ann, table[0]);
        CHECK(out.clip.channels == s.clip.channels);
        CHECK(out.annotation == ann);
    }
    SUBCASE("quarter turn twice equals the half turn") {
        int q = 0, h = 0;
        for (const auto& t : table) {
            if (!t.reflect && t.rotation_deg == 90) q = t.id;
            if (!t.reflect && t.rotation_deg == 180) h = t.id;
        }
        const auto once = apply_acs(s.clip, ann, table[q]);
        const auto twice = apply_acs(once.clip, once.annotation, table[q]);
        const auto half = apply_acs(s.clip, ann, table[h]);
        CHECK(twice.clip.channels == half.clip.channels);
        REQUIRE(twice.annotation.frames.size() == half.annotation.frames.size());
        for (std::size_t f = 0; f < half.annotation.frames.size(); ++f) {
            for (std::size_t k = 0; k < half.annotation.frames[f].size(); ++k) {
                CHECK(twice.annotation.frames[f][k].azimuth == doctest::Approx(half.annotation.frames[f][k].azimuth));
                CHECK(twice.annotation.frames[f][k].elevation == doctest::Approx(half.annotation.frames[f][k].elevation));
            }
        }
    }
    SUBCASE("channels are only permuted, classes and distances kept") {
        for (const auto& t : table) {
            const auto out = apply_acs(s.clip, ann, t);
            auto a = s.clip.channels, b = out.clip.channels;
            std::sort(a.begin(), a.end());
            std::sort(b.begin(), b.end());
            CHECK(a == b);
            CHECK(out.annotation.frames[0][0].class_id == ann.frames[0][0].class_id);
            CHECK(out.annotation.frames[0][0].distance == ann.frames[0][0].distance);
        }
    }
    SUBCASE("wrong channel count") {
        auto two = s.clip;
        two.channels.resize(2);
        CHECK_THROWS_AS(apply_acs(two, ann, table[1]), Error);
    }
}

TEST_CASE("acs label consistency through the directional feature") {
    const auto table = derive_acs_table(geom());
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto s = oracle::single_source_scene(geom(), 300 + seed, 0.5);
        for (const auto& t : table) CHECK(df_consistency_error(s, t) < 1e-6);
    }
}
