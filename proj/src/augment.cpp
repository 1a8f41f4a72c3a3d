#include "regiontag/augment.hpp"

#include <cmath>
#include <numbers>

#include "regiontag/error.hpp"

namespace regiontag {

namespace {

Vec3 apply_map(const Vec3& p, int rotation_deg, bool reflect, bool flip_elevation) {
    const double y = reflect ? -p.y : p.y;
    const double z = flip_elevation ? -p.z : p.z;
    const double a = rotation_deg * std::numbers::pi / 180.0;
    return {std::cos(a) * p.x - std::sin(a) * y, std::sin(a) * p.x + std::cos(a) * y, z};
}

bool match_permutation(const ArrayGeometry& geom, int rotation_deg, bool reflect, bool flip,
                       std::array<int, kNumMics>& perm) {
    const double tol = 1e-9 + 1e-6 * geom.mic_positions[0].norm();
    std::array<bool, kNumMics> used{};
    for (int i = 0; i < kNumMics; ++i) {
        const Vec3 target = apply_map(geom.mic_positions[i], rotation_deg, reflect, flip);
        perm[i] = -1;
        for (int j = 0; j < kNumMics; ++j) {
            if (!used[j] && (geom.mic_positions[j] - target).norm() < tol) {
                perm[i] = j;
                used[j] = true;
                break;
            }
        }
        if (perm[i] < 0) return false;
    }
    return true;
}

}  // namespace

double AcsTransform::map_azimuth(double azimuth_deg) const {
    return wrap_azimuth((reflect ? -azimuth_deg : azimuth_deg) + rotation_deg);
}

double AcsTransform::map_elevation(double elevation_deg) const {
    return flip_elevation ? -elevation_deg : elevation_deg;
}

std::vector<int> AcsTransform::source_channels() const {
    std::vector<int> src(kNumMics);
    for (int i = 0; i < kNumMics; ++i) src[static_cast<std::size_t>(permutation[i])] = i;
    return src;
}

std::array<AcsTransform, kNumAcsTransforms> derive_acs_table(const ArrayGeometry& geom) {
    std::array<AcsTransform, kNumAcsTransforms> table;
    int id = 0;
    for (bool reflect : {false, true}) {
        for (int rotation : {0, 90, 180, 270}) {
            AcsTransform t;
            t.id = id;
            t.rotation_deg = rotation;
            t.reflect = reflect;
            bool found = false;
            for (bool flip : {false, true}) {
                if (match_permutation(geom, rotation, reflect, flip, t.permutation)) {
                    t.flip_elevation = flip;
                    found = true;
                    break;
                }
            }
            if (!found) {
                data_error("array geometry is not symmetric under azimuth map (rotation " + std::to_string(rotation) +
                           (reflect ? ", reflected)" : ")"));
            }
            table[static_cast<std::size_t>(id++)] = t;
        }
    }
    return table;
}

int compose_acs(const std::array<AcsTransform, kNumAcsTransforms>& table, int first, int second) {
    const AcsTransform& a = table.at(static_cast<std::size_t>(first));
    const AcsTransform& b = table.at(static_cast<std::size_t>(second));
    // b(a(phi)) = sb * (sa * phi + ra) + rb
    const bool reflect = a.reflect != b.reflect;
    const int rotation = (((b.reflect ? -a.rotation_deg : a.rotation_deg) + b.rotation_deg) % 360 + 360) % 360;
    for (const auto& t : table) {
        if (t.reflect == reflect && t.rotation_deg == rotation) return t.id;
    }
    internal_error("ACS table is not closed under composition");
}

AugmentedClip apply_acs(const MultichannelClip& clip, const SceneAnnotation& ann, const AcsTransform& t) {
    if (clip.num_channels() != kNumMics) data_error("channel swapping requires a 4-channel clip");
    AugmentedClip out;
    out.clip.sample_rate = clip.sample_rate;
    out.clip.channels.resize(kNumMics);
    for (int i = 0; i < kNumMics; ++i) {
        out.clip.channels[static_cast<std::size_t>(t.permutation[i])] = clip.channels[static_cast<std::size_t>(i)];
    }
    out.annotation = ann;
    for (auto& frame : out.annotation.frames) {
        for (auto& e : frame) {
            e.azimuth = t.map_azimuth(e.azimuth);
            e.elevation = t.map_elevation(e.elevation);
        }
    }
    return out;
}

}  // namespace regiontag
