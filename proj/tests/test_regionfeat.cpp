#include <doctest.h>

#include <cmath>
#include <limits>
#include <numbers>

#include "oracles.hpp"
#include "regiontag/directional.hpp"
#include "regiontag/error.hpp"
#include "regiontag/features.hpp"
#include "regiontag/region.hpp"

using namespace regiontag;

namespace {

const ArrayGeometry& geom() {
    static const auto g = default_tetrahedral_geometry();
    return g;
}

SpectroTensor source_at(double az, double el, std::uint64_t seed, double seconds = 1.0) {
    SceneSpec spec;
    spec.clip_length = seconds;
    EventSpec e;
    e.class_id = static_cast<int>(seed % kNumClasses);
    e.duration = seconds;
    e.azimuth = az;
    e.elevation = el;
    e.distance = 2.0;
    spec.events.push_back(e);
    spec.seed = seed;
    return stft(render_scene(spec, geom()).clip);
}

double in_view_fraction(const FeaturePlane& fov, const std::vector<unsigned char>& mask) {
    std::size_t n = 0, kept = 0;
    for (std::size_t i = 0; i < fov.values.size(); ++i) {
        if (!mask[i]) continue;
        ++n;
        kept += fov.values[i] != -1.0;
    }
    return static_cast<double>(kept) / static_cast<double>(n);
}

}  // namespace

TEST_CASE("region membership") {
    CHECK(region_contains(AngularRegion::make(-30, 30), 0));
    CHECK(region_contains(AngularRegion::make(150, -150), 175));
    CHECK(region_contains(AngularRegion::make(150, -150), -175));
    CHECK_FALSE(region_contains(AngularRegion::make(150, -150), 0));
    CHECK(region_contains(AngularRegion::make(-30, 30), 30));
    CHECK_FALSE(region_contains(AngularRegion::make(-30, 30), 30.001));
    CHECK(region_contains(AngularRegion::make(-30, 30), -30));
    CHECK(region_contains_half_open(AngularRegion::make(-30, 30), -30));
    CHECK_FALSE(region_contains_half_open(AngularRegion::make(-30, 30), 30));
    const auto a = AngularRegion::make(-30, 30), b = AngularRegion::make(330, 390);
    CHECK(a.width() == b.width());
    CHECK(a.middle() == b.middle());
    for (double az = -180; az < 180; az += 0.5) REQUIRE(region_contains(a, az) == region_contains(b, az));
    CHECK(AngularRegion::make(150, -150).middle() == -180);
    CHECK(AngularRegion::make(0, 360).width() == 360);
    CHECK_THROWS_AS(AngularRegion::make(10, 10), Error);
    CHECK(parse_angular_region("-30:30").end == 30);
    CHECK_THROWS_AS(parse_angular_region("30"), Error);
    CHECK_THROWS_AS(parse_angular_region("a:b"), Error);
}

TEST_CASE("angle grid") {
    const auto g = AngleGrid::make(5);
    REQUIRE(g.angles.size() == 72);
    CHECK(g.angles.front() == -180);
    for (std::size_t i = 1; i < g.angles.size(); ++i) CHECK(g.angles[i] > g.angles[i - 1]);
    CHECK_THROWS_AS(AngleGrid::make(7), Error);
    int inside = 0;
    for (double a : g.angles) inside += region_contains(AngularRegion::make(-30, 30), a);
    CHECK(inside == 13);
}

TEST_CASE("directional feature basics") {
    const auto spec = source_at(40, 0, 1);
    const std::array<MicPair, 1> self{{{0, 0}}};
    for (double v : directional_feature(spec, geom(), self, 12).values) REQUIRE(v == 1.0);
    const auto df = directional_feature(spec, geom(), kFeaturePairs, -75);
    CHECK(df.kind == PlaneKind::DF);
    for (double v : df.values) REQUIRE(std::abs(v) <= 4.0 + 1e-12);
    const auto ref = kernels::directional_feature_reference(spec, geom(), kFeaturePairs, -75);
    for (std::size_t i = 0; i < df.values.size(); ++i) REQUIRE(std::abs(df.values[i] - ref.values[i]) < 1e-12);
}

TEST_CASE("directional feature is blind to 2 pi shifts of the ipd") {
    const auto spec = source_at(-120, 10, 2);
    const double az = 33.0;
    std::vector<FeaturePlane> ipds;
    for (auto p : kFeaturePairs) ipds.push_back(ipd(spec, p));
    const auto df = directional_feature(spec, geom(), kFeaturePairs, az);
    for (int t = 0; t < spec.frames(); t += 7) {
        for (int f = 0; f < spec.bins(); f += 5) {
            double shifted = 0.0;
            for (std::size_t n = 0; n < kFeaturePairs.size(); ++n) {
                const double p = target_phase(geom(), kFeaturePairs[n], DirectionOfArrival::make(az, 0), f, 512);
                shifted += std::cos(ipds[n].at(t, f) + 2 * std::numbers::pi * (n + 1) - p);
            }
            REQUIRE(std::abs(shifted - df.at(t, f)) < 1e-9);
        }
    }
}

TEST_CASE("directional feature peaks toward the source") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        const auto s = oracle::single_source_scene(geom(), 100 + seed);
        const auto spec = stft(s.clip);
        const auto mask = oracle::active_bins(spec);
        const double at = oracle::masked_mean(directional_feature(spec, geom(), kFeaturePairs, s.event.azimuth), mask);
        const double off = oracle::masked_mean(directional_feature(spec, geom(), kFeaturePairs, s.event.azimuth + 90), mask);
        CHECK(at > off);
    }
}

TEST_CASE("fov matches a direct grid recomputation") {
    const auto spec = source_at(70, 0, 3);
    const DirectionalFeatureBank bank(spec, geom(), kFeaturePairs);
    const auto grid = AngleGrid::make(5);
    for (const auto region : {AngularRegion::make(-30, 30), AngularRegion::make(150, -150), AngularRegion::make(40, 100)}) {
        const auto fov = fov_feature(bank, region, grid);
        CHECK(fov.kind == PlaneKind::FOV);
        const double ninf = -std::numeric_limits<double>::infinity();
        std::vector<double> f_in(fov.values.size(), ninf), f_out(fov.values.size(), ninf);
        std::vector<FeaturePlane> all;
        for (double a : grid.angles) {
            const auto df = bank.evaluate(a);
            const auto ref = kernels::directional_feature_reference(spec, geom(), kFeaturePairs, a);
            for (std::size_t i = 0; i < df.values.size(); ++i) REQUIRE(std::abs(df.values[i] - ref.values[i]) < 1e-12);
            auto& tgt = region_contains(region, a) ? f_in : f_out;
            for (std::size_t i = 0; i < df.values.size(); ++i) tgt[i] = std::max(tgt[i], df.values[i]);
            all.push_back(df);
        }
        int gated = 0;
        for (std::size_t i = 0; i < fov.values.size(); ++i) {
            const double expect = f_in[i] > f_out[i] ? f_in[i] : -1.0;
            REQUIRE(fov.values[i] == expect);
            gated += fov.values[i] == -1.0;
            // every kept value is a DF value from the grid
            if (fov.values[i] != -1.0) {
                bool found = false;
                for (const auto& df : all) found = found || df.values[i] == fov.values[i];
                REQUIRE(found);
            }
        }
        CHECK(gated > 0);
        const auto serial = kernels::fov_serial(bank, region, grid);
        CHECK(serial.values == fov.values);
    }
}

TEST_CASE("fov full circle and evaluation count") {
    const auto spec = source_at(-20, 0, 4);
    const DirectionalFeatureBank bank(spec, geom(), kFeaturePairs);
    const auto grid = AngleGrid::make(5);
    const std::size_t before = bank.evaluations();
    const auto fov = fov_feature(bank, AngularRegion::make(-180, 180), grid);
    CHECK(bank.evaluations() - before == 72);
    for (std::size_t i = 0; i < fov.values.size(); ++i) {
        double m = -4.0;
        for (double a : grid.angles) m = std::max(m, bank.evaluate(a).values[i]);
        if (i % 97 == 0) REQUIRE(fov.values[i] == m);
        REQUIRE(fov.values[i] != -1.0);
        if (i > 600) break;
    }
}

TEST_CASE("fov keeps more bins when the source is in view") {
    const auto region = AngularRegion::make(-30, 30);
    for (std::uint64_t seed = 0; seed < 4; ++seed) {
        const auto inside = source_at(5.0 * seed, 0, 10 + seed);
        const auto outside = source_at(5.0 * seed + 180, 0, 10 + seed);
        const DirectionalFeatureBank bi(inside, geom(), kFeaturePairs), bo(outside, geom(), kFeaturePairs);
        const double fi = in_view_fraction(fov_feature(bi, region, AngleGrid::make(5)), oracle::active_bins(inside));
        const double fo = in_view_fraction(fov_feature(bo, region, AngleGrid::make(5)), oracle::active_bins(outside));
        CHECK(fi > fo);
    }
}

TEST_CASE("fov kept-bin count is stable under joint quarter-turn rotations") {
    // the tetrahedron maps onto itself under quarter turns, so rotating source and query
    // together only relabels microphones
    const auto grid = AngleGrid::make(5);
    const auto pairs = oracle::all_pairs();
    auto kept = [&](double rot) {
        const auto spec = source_at(wrap_azimuth(20 + rot), 0, 21);
        const DirectionalFeatureBank bank(spec, geom(), pairs);
        const auto fov = fov_feature(bank, AngularRegion::make(-10 + rot, 50 + rot), grid);
        std::size_t n = 0;
        for (double v : fov.values) n += v != -1.0;
        return static_cast<double>(n);
    };
    const double base = kept(0);
    for (double rot : {90.0, 180.0, 270.0}) CHECK(std::abs(kept(rot) - base) <= 0.01 * base);
}

TEST_CASE("fov serial and parallel kernels agree bit for bit") {
    const auto spec = source_at(100, -15, 5, 2.0);
    const DirectionalFeatureBank bank(spec, geom(), kFeaturePairs);
    const auto region = AngularRegion::make(60, 180);
    CHECK(kernels::fov_serial(bank, region, AngleGrid::make(5)).values ==
          kernels::fov_parallel(bank, region, AngleGrid::make(5)).values);
}

TEST_CASE("feature recipes") {
    const auto r = FeatureRecipe::parse("LPS, ipd,df");
    CHECK(r.stack_planes() == 6);
    CHECK(r.to_string() == "lps,ipd,df");
    CHECK(r.needs_region());
    CHECK(FeatureRecipe::parse("lps,ipd,learned").embedding() == EmbeddingKind::Angle);
    CHECK(FeatureRecipe::parse("lps,ipd,distance").needs_distance());
    CHECK_THROWS_AS(FeatureRecipe::parse("lps,mel"), Error);
    CHECK_THROWS_AS(FeatureRecipe::parse("lps,lps"), Error);
    CHECK_THROWS_AS(FeatureRecipe::parse("angle"), Error);
    CHECK_THROWS_AS(FeatureRecipe::parse("lps,df,distance"), Error);

    const auto s = oracle::single_source_scene(geom(), 3);
    const auto planes = extract_planes(s.clip, geom(), FeatureRecipe::parse("lps,ipd,gccphat,df,fov"), {},
                                       AngularRegion::make(-30, 30));
    REQUIRE(planes.size() == 11);
    CHECK(planes[0].kind == PlaneKind::LPS);
    CHECK(planes[5].kind == PlaneKind::GCCPHAT);
    CHECK(planes[9].kind == PlaneKind::DF);
    CHECK(planes[10].kind == PlaneKind::FOV);
    for (const auto& p : planes) {
        CHECK(p.frames == planes[0].frames);
        CHECK(p.bins == 257);
    }
    CHECK_THROWS_AS(extract_planes(s.clip, geom(), FeatureRecipe::parse("lps,df"), {}, std::nullopt), Error);
}
