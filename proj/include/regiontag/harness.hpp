#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

#include "regiontag/dataset.hpp"
#include "regiontag/features.hpp"
#include "regiontag/metrics.hpp"
#include "regiontag/model.hpp"

namespace regiontag {

enum class HarnessKind { Omni, FixedRegion, LocationAware };

struct HarnessMode {
    HarnessKind kind = HarnessKind::Omni;
    double width = 60.0;
    int count = 6;                 ///< fixed-region tiles
    double overlap_filter = 30.0;  ///< location-aware: drop regions overlapping a kept one by more than this

    static HarnessMode omni() { return {}; }
    static HarnessMode fixed_region() { return {HarnessKind::FixedRegion}; }
    static HarnessMode location_aware() { return {HarnessKind::LocationAware}; }
};

std::string_view harness_name(HarnessKind kind);
HarnessMode parse_harness(std::string_view text);

/// `count` tiles of `width` degrees starting at -180; must cover the circle exactly.
std::vector<AngularRegion> fixed_regions(double width = 60.0, int count = 6);

/// One region per event centered on its azimuth, in event order; a region overlapping an
/// already kept one by more than `overlap_filter` degrees is dropped.
std::vector<AngularRegion> location_aware_regions(const std::vector<AnnotatedEvent>& events, double width = 60.0,
                                                  double overlap_filter = 30.0);

/// Scores and labels for one crop under a harness, max-aggregated over its regions.
struct HarnessRow {
    std::vector<double> scores;
    std::vector<unsigned char> labels;
};

HarnessRow run_harness_crop(const CompactCnn<float>& model, const Crop& crop, const ArrayGeometry& geom,
                            const FeatureRecipe& recipe, const FeatureSettings& features, const HarnessMode& mode);

/// Runs the harness on every crop, parallel across crops; rows keep the crop order.
ScoreMatrix run_harness(const CompactCnn<float>& model, const std::vector<Crop>& crops, const ArrayGeometry& geom,
                        const FeatureRecipe& recipe, const FeatureSettings& features, const HarnessMode& mode);

/// Throws Error(Usage) when the recipe or harness cannot drive the model.
void check_harness_compatible(const CompactCnn<float>& model, const FeatureRecipe& recipe, const HarnessMode& mode);

}  // namespace regiontag
