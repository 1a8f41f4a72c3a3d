#pragma once

#include <array>
#include <vector>

#include "regiontag/dsp.hpp"
#include "regiontag/geometry.hpp"
#include "regiontag/scene.hpp"

namespace regiontag {

inline constexpr int kNumAcsTransforms = 8;

/// One of the eight azimuth symmetries phi -> sign * phi + rotation of the array,
/// with the elevation flip and channel permutation that realize it physically.
struct AcsTransform {
    int id = 0;
    int rotation_deg = 0;       ///< one of 0, 90, 180, 270
    bool reflect = false;       ///< azimuth negated before rotating
    bool flip_elevation = false;
    /// new_channel[permutation[i]] = old_channel[i]: mic i lands on mic permutation[i].
    std::array<int, kNumMics> permutation{0, 1, 2, 3};

    double map_azimuth(double azimuth_deg) const;
    double map_elevation(double elevation_deg) const;
    /// Channel read by output channel j, i.e. the inverse permutation.
    std::vector<int> source_channels() const;
};

/// Builds all eight transforms for a geometry by matching mic positions under each
/// azimuth map, trying elevation as-is first, then flipped. Throws Error(Data) when the
/// geometry is not closed under some map. Transform 0 is the identity.
std::array<AcsTransform, kNumAcsTransforms> derive_acs_table(const ArrayGeometry& geom);

/// Index of the transform equal to applying `first`, then `second`.
int compose_acs(const std::array<AcsTransform, kNumAcsTransforms>& table, int first, int second);

struct AugmentedClip {
    MultichannelClip clip;
    SceneAnnotation annotation;
};

/// Permutes channels and maps every annotated azimuth/elevation; classes and distances
/// are unchanged. Throws Error(Data) when the clip is not 4-channel.
AugmentedClip apply_acs(const MultichannelClip& clip, const SceneAnnotation& ann, const AcsTransform& t);

}  // namespace regiontag
