#include "regiontag/harness.hpp"

#include <algorithm>
#include <cmath>

#include "regiontag/error.hpp"
#include "regiontag/geometry.hpp"

namespace regiontag {

std::string_view harness_name(HarnessKind kind) {
    switch (kind) {
        case HarnessKind::Omni: return "omni";
        case HarnessKind::FixedRegion: return "fixed";
        case HarnessKind::LocationAware: return "location";
    }
    return "?";
}

HarnessMode parse_harness(std::string_view text) {
    if (text == "omni") return HarnessMode::omni();
    if (text == "fixed") return HarnessMode::fixed_region();
    if (text == "location") return HarnessMode::location_aware();
    usage_error("unknown harness '" + std::string(text) + "' (expected omni, fixed or location)");
}

std::vector<AngularRegion> fixed_regions(double width, int count) {
    if (count < 1 || std::abs(width * count - 360.0) > 1e-9) usage_error("fixed regions must tile the full circle");
    std::vector<AngularRegion> out;
    for (int i = 0; i < count; ++i) out.push_back(AngularRegion::make(-180.0 + width * i, -180.0 + width * (i + 1)));
    return out;
}

std::vector<AngularRegion> location_aware_regions(const std::vector<AnnotatedEvent>& events, double width,
                                                  double overlap_filter) {
    std::vector<double> kept;
    std::vector<AngularRegion> out;
    for (const auto& e : events) {
        const double center = wrap_azimuth(e.azimuth);
        bool overlaps = false;
        for (double k : kept) {
            const double d = std::abs(wrap_azimuth(center - k));
            if (width - d > overlap_filter) {
                overlaps = true;
                break;
            }
        }
        if (overlaps) continue;
        kept.push_back(center);
        out.push_back(AngularRegion::centered(center, width));
    }
    return out;
}

void check_harness_compatible(const CompactCnn<float>& model, const FeatureRecipe& recipe, const HarnessMode& mode) {
    const ModelConfig& cfg = model.config();
    if (recipe.stack_planes() != cfg.input_planes) {
        usage_error("features '" + recipe.to_string() + "' give " + std::to_string(recipe.stack_planes()) +
                    " planes, model expects " + std::to_string(cfg.input_planes));
    }
    if (recipe.embedding() != cfg.embedding) usage_error("feature recipe and model disagree on the learned embedding");
    if (cfg.embedding == EmbeddingKind::Distance) usage_error("distance-conditioned models have no angular harness");
    if (mode.kind == HarnessKind::Omni && recipe.needs_region()) {
        usage_error("omni harness needs a model without region features; '" + recipe.to_string() + "' expects a region");
    }
}

HarnessRow run_harness_crop(const CompactCnn<float>& model, const Crop& crop, const ArrayGeometry& geom,
                            const FeatureRecipe& recipe, const FeatureSettings& features, const HarnessMode& mode) {
    const int classes = model.config().num_classes;
    HarnessRow row;
    row.scores.assign(static_cast<std::size_t>(classes), 0.0);
    row.labels.assign(static_cast<std::size_t>(classes), 0);

    if (mode.kind == HarnessKind::Omni) {
        const auto p = model.forward(extract_stack(crop.audio, geom, recipe, features, std::nullopt), {});
        std::copy(p.begin(), p.end(), row.scores.begin());
        for (const auto& e : crop.events) {
            if (e.class_id < classes) row.labels[static_cast<std::size_t>(e.class_id)] = 1;
        }
        return row;
    }

    const bool fixed = mode.kind == HarnessKind::FixedRegion;
    const auto regions = fixed ? fixed_regions(mode.width, mode.count)
                               : location_aware_regions(crop.events, mode.width, mode.overlap_filter);
    for (const auto& region : regions) {
        Conditioning cond;
        cond.azimuth = region.middle();
        const auto p = model.forward(extract_stack(crop.audio, geom, recipe, features, region), cond);
        for (int c = 0; c < classes; ++c) {
            row.scores[static_cast<std::size_t>(c)] = std::max(row.scores[static_cast<std::size_t>(c)], static_cast<double>(p[static_cast<std::size_t>(c)]));
        }
        for (const auto& e : crop.events) {
            const bool in = fixed ? region_contains_half_open(region, e.azimuth) : region_contains(region, e.azimuth);
            if (in && e.class_id < classes) row.labels[static_cast<std::size_t>(e.class_id)] = 1;
        }
    }
    return row;
}

ScoreMatrix run_harness(const CompactCnn<float>& model, const std::vector<Crop>& crops, const ArrayGeometry& geom,
                        const FeatureRecipe& recipe, const FeatureSettings& features, const HarnessMode& mode) {
    check_harness_compatible(model, recipe, mode);
    std::vector<HarnessRow> rows(crops.size());
    std::vector<std::string> errors(crops.size());
#pragma omp parallel for schedule(dynamic)
    for (std::size_t i = 0; i < crops.size(); ++i) {
        try {
            rows[i] = run_harness_crop(model, crops[i], geom, recipe, features, mode);
        } catch (const std::exception& e) {
            errors[i] = e.what();
        }
    }
    for (const auto& e : errors) {
        if (!e.empty()) data_error("harness failed: " + e);
    }
    ScoreMatrix sm(model.config().num_classes);
    for (const auto& r : rows) sm.add_row(r.scores, r.labels);
    return sm;
}

}  // namespace regiontag
