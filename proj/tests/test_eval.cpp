#include <doctest.h>

#include <cmath>

#include "oracles.hpp"
#include "regiontag/error.hpp"
#include "regiontag/harness.hpp"
#include "regiontag/metrics.hpp"

using namespace regiontag;

TEST_CASE("map examples") {
    ScoreMatrix one(1);
    one.add_row({0.9}, {0});
    one.add_row({0.8}, {1});
    one.add_row({0.7}, {0});
    CHECK(mean_average_precision(one) == 0.5);

    auto sm = oracle::random_scores(40, 13, 1);
    for (std::size_t i = 0; i < sm.scores.size(); ++i) sm.scores[i] = sm.labels[i] ? 1.0 : 0.0;
    CHECK(mean_average_precision(sm) == 1.0);
    CHECK(equal_error_rate(sm) == 0.0);
}

TEST_CASE("map skips classes without positives and rejects empty label sets") {
    ScoreMatrix sm(2);
    sm.add_row({0.3, 0.9}, {1, 0});
    sm.add_row({0.2, 0.1}, {0, 0});
    const auto ap = average_precision(sm);
    CHECK(ap.mean == 1.0);
    CHECK(ap.skipped_classes == std::vector<int>{1});
    CHECK(std::isnan(ap.per_class[1]));
    ScoreMatrix none(1);
    none.add_row({0.4}, {0});
    CHECK_THROWS_AS(mean_average_precision(none), Error);
    ScoreMatrix bad(1);
    bad.add_row({std::nan("")}, {1});
    CHECK_THROWS_AS(mean_average_precision(bad), Error);
}

TEST_CASE("map ties resolve by index") {
    ScoreMatrix sm(1);
    sm.add_row({0.5}, {0});
    sm.add_row({0.5}, {1});
    CHECK(mean_average_precision(sm) == 0.5);
}

TEST_CASE("map matches the threshold enumeration oracle") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto sm = oracle::random_scores(50, 13, seed);
        REQUIRE(mean_average_precision(sm) == oracle::brute_force_map(sm));
    }
}

TEST_CASE("eer examples and oracle") {
    ScoreMatrix flat(2);
    for (int i = 0; i < 10; ++i) flat.add_row({0.5, 0.5}, {static_cast<unsigned char>(i % 2), static_cast<unsigned char>(i % 3 == 0)});
    CHECK(equal_error_rate(flat) == 0.5);
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto sm = oracle::random_scores(50, 13, seed);
        REQUIRE(std::abs(equal_error_rate(sm) - oracle::brute_force_eer(sm)) < 1e-9);
    }
    ScoreMatrix all_pos(1);
    all_pos.add_row({0.3}, {1});
    CHECK_THROWS_AS(equal_error_rate(all_pos), Error);
}

TEST_CASE("metric invariances") {
    const auto sm = oracle::random_scores(60, 13, 7);
    auto squashed = sm;
    for (auto& s : squashed.scores) s = std::pow(s, 3.0) * 0.5 + 0.1;
    CHECK(mean_average_precision(squashed) == doctest::Approx(mean_average_precision(sm)).epsilon(1e-15));
    auto flipped = sm;
    for (std::size_t i = 0; i < sm.scores.size(); ++i) {
        flipped.scores[i] = 1.0 - sm.scores[i];
        flipped.labels[i] = !sm.labels[i];
    }
    CHECK(equal_error_rate(flipped) == doctest::Approx(equal_error_rate(sm)).epsilon(1e-12));
}

TEST_CASE("fixed regions tile the circle") {
    const auto regions = fixed_regions();
    REQUIRE(regions.size() == 6);
    for (double az = -180; az < 180; az += 0.25) {
        int hits = 0;
        for (const auto& r : regions) hits += region_contains_half_open(r, az);
        REQUIRE(hits == 1);
    }
    CHECK_THROWS_AS(fixed_regions(50, 6), Error);
}

TEST_CASE("location-aware region filtering") {
    std::vector<AnnotatedEvent> ev{{0, 0, 10, 0, 1}, {1, 1, 25, 0, 1}};
    CHECK(location_aware_regions(ev).size() == 1);
    CHECK(location_aware_regions(ev).front().middle() == doctest::Approx(10));
    ev[1].azimuth = 40;  // overlap exactly 30 is kept
    CHECK(location_aware_regions(ev).size() == 2);
    ev[1].azimuth = -175;
    ev.push_back({2, 2, 170, 0, 1});  // 15 degrees from -175 across the seam
    CHECK(location_aware_regions(ev).size() == 2);
}

TEST_CASE("harness behavior on a stub model") {
    const auto geom = default_tetrahedral_geometry();
    ModelConfig cfg;
    cfg.input_planes = 6;
    cfg.embedding = EmbeddingKind::None;
    auto model = CompactCnn<float>::initialized(cfg, 1);
    std::mt19937_64 rng(2);
    std::normal_distribution<float> g(0.0f, 0.3f);
    for (auto& v : model.parameters().at("head.weight").data) v = g(rng);
    const auto recipe = FeatureRecipe::parse("lps,ipd,df");
    FeatureSettings fs;

    SceneSpec spec;
    spec.clip_length = 1.0;
    spec.events = {EventSpec{3, 0.0, 1.0, 40.0, 0.0, 2.0, 1.0}};
    const auto scene = render_scene(spec, geom);
    Crop crop{scene.clip, scene.annotation.events_between(0, 1)};

    SUBCASE("single event: location-aware is one region-specific inference") {
        const auto row = run_harness_crop(model, crop, geom, recipe, fs, HarnessMode::location_aware());
        const auto region = AngularRegion::centered(40, 60);
        Conditioning c;
        c.azimuth = region.middle();
        const auto direct = model.forward(extract_stack(crop.audio, geom, recipe, fs, region), c);
        for (int k = 0; k < 13; ++k) CHECK(row.scores[k] == static_cast<double>(direct[k]));
        CHECK(row.labels[3] == 1);
    }
    SUBCASE("fixed-region labels equal omni labels") {
        auto two = spec;
        two.clip_length = 1.0;
        two.events.push_back(EventSpec{7, 0.2, 0.5, -120.0, 0.0, 1.0, 1.0});
        const auto sc = render_scene(two, geom);
        Crop c2{sc.clip, sc.annotation.events_between(0, 1)};
        const auto fixed = run_harness_crop(model, c2, geom, recipe, fs, HarnessMode::fixed_region());
        std::vector<unsigned char> omni(13, 0);
        for (const auto& e : c2.events) omni[e.class_id] = 1;
        CHECK(fixed.labels == omni);
    }
    SUBCASE("mode and model mismatch") {
        CHECK_THROWS_AS(run_harness(model, {crop}, geom, recipe, fs, HarnessMode::omni()), Error);
        CHECK_THROWS_AS(run_harness(model, {crop}, geom, FeatureRecipe::parse("lps,ipd"), fs, HarnessMode::fixed_region()), Error);
        ModelConfig dcfg;
        dcfg.input_planes = 5;
        dcfg.embedding = EmbeddingKind::Distance;
        CHECK_THROWS_AS(run_harness(CompactCnn<float>(dcfg), {crop}, geom, FeatureRecipe::parse("lps,ipd,distance"), fs,
                                    HarnessMode::fixed_region()),
                        Error);
    }
    SUBCASE("max aggregation is order independent") {
        const auto a = run_harness(model, {crop, crop}, geom, recipe, fs, HarnessMode::fixed_region());
        CHECK(a.rows() == 2);
        CHECK(a.scores[0] == a.scores[13]);
    }
}
