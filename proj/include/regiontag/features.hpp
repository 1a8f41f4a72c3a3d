#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regiontag/dsp.hpp"
#include "regiontag/geometry.hpp"
#include "regiontag/model.hpp"
#include "regiontag/region.hpp"

namespace regiontag {

enum class FeatureToken { Lps, Ipd, GccPhat, Df, Fov, AngleEmbed, DistanceEmbed };

/// Ordered list of feature groups stacked on the channel axis, e.g. "lps,ipd,df".
/// Tokens: lps (1 plane, channel 0), ipd (4 planes), gccphat (4 planes), df (1), fov (1),
/// angle (learned angle embedding), distance (learned distance embedding).
struct FeatureRecipe {
    std::vector<FeatureToken> tokens;

    static FeatureRecipe parse(std::string_view text);
    std::string to_string() const;

    /// Number of stacked planes, embedding channel excluded.
    int stack_planes() const;
    std::vector<PlaneKind> plane_kinds() const;
    EmbeddingKind embedding() const;
    bool needs_region() const;    ///< df, fov or angle
    bool needs_distance() const;  ///< distance
    bool has(FeatureToken token) const;
};

struct FeatureSettings {
    int n_fft = kDefaultNfft;
    int hop = kDefaultHop;
    int gcc_max_lag = kDefaultGccMaxLag;
    double fov_resolution = 5.0;
    SteeringModel steering = SteeringModel::Geometric;
};

/// Feature planes (double precision) for one clip; region required for df/fov.
std::vector<FeaturePlane> extract_planes(const MultichannelClip& clip, const ArrayGeometry& geom,
                                         const FeatureRecipe& recipe, const FeatureSettings& settings,
                                         const std::optional<AngularRegion>& region);

/// Same planes packed as the model's float input stack.
FeatureStack<float> extract_stack(const MultichannelClip& clip, const ArrayGeometry& geom, const FeatureRecipe& recipe,
                                  const FeatureSettings& settings, const std::optional<AngularRegion>& region);

FeatureStack<float> pack_planes(const std::vector<FeaturePlane>& planes);

}  // namespace regiontag
