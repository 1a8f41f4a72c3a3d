#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "regiontag/augment.hpp"
#include "regiontag/features.hpp"
#include "regiontag/model.hpp"
#include "regiontag/region.hpp"
#include "regiontag/scene.hpp"

namespace regiontag {

enum class QueryMode { Omni, Angular, Distance };

std::string_view query_mode_name(QueryMode mode);
QueryMode parse_query_mode(std::string_view text);

struct LabeledClip {
    std::string name;
    MultichannelClip audio;
    SceneAnnotation annotation;
};

/// Text manifest: "[train]" / "[val]" / "[test]" section headers, then one
/// "<wav path> <csv path>" pair per line. Relative paths resolve against the manifest's
/// directory; '#' starts a comment.
struct Manifest {
    struct Entry {
        std::string wav;
        std::string csv;
        bool operator==(const Entry&) const = default;
    };
    std::vector<Entry> train;
    std::vector<Entry> val;
    std::vector<Entry> test;

    static Manifest load(const std::string& path);
    void save(const std::string& path) const;
    std::vector<Entry>& split(std::string_view name);
    const std::vector<Entry>& split(std::string_view name) const;
    bool operator==(const Manifest&) const = default;
};

/// Loads every clip of a manifest split (4-channel WAV at the given rate + annotation CSV).
std::vector<LabeledClip> load_split(const Manifest& manifest, std::string_view split, double sample_rate = 24000.0);

/// All eight channel-swapped copies of each clip (transform 0 first).
std::vector<LabeledClip> expand_acs(const std::vector<LabeledClip>& clips, const ArrayGeometry& geom);

/// A crop of a clip together with the events active anywhere inside it.
struct Crop {
    MultichannelClip audio;
    std::vector<AnnotatedEvent> events;
};

/// Channel swap applied to a crop: channels permuted, event directions mapped.
Crop transform_crop(const Crop& crop, const AcsTransform& t);

/// Random crop of `seconds` containing at least one event; std::nullopt when none is found.
std::optional<Crop> sample_crop(const LabeledClip& clip, double seconds, std::uint64_t seed);

struct QuerySettings {
    double region_width = 60.0;
    double centered_probability = 0.5;  ///< chance the region is centered on a present event
    double distance_tolerance = 0.5;    ///< meters
};

struct TaggingQuery {
    std::optional<AngularRegion> region;
    std::optional<double> distance;
};

/// Draws a query for a crop: angular regions are centered on a random present event with
/// probability `centered_probability`, else uniformly placed; distance queries take the
/// distance of a random present event.
TaggingQuery sample_query(const Crop& crop, QueryMode mode, const QuerySettings& settings, std::uint64_t seed);

/// Multi-hot targets: omni marks every present class; angular marks classes with an event
/// inside the region (boundary-inclusive); distance marks classes with an event within the
/// tolerance of the queried distance.
std::vector<unsigned char> query_targets(const std::vector<AnnotatedEvent>& events, QueryMode mode,
                                         const TaggingQuery& query, const QuerySettings& settings,
                                         int num_classes = kNumClasses);

Conditioning conditioning_for(const TaggingQuery& query);

struct Example {
    FeatureStack<float> features;
    Conditioning conditioning;
    std::vector<float> targets;
};

struct ExampleSettings {
    double crop_seconds = 2.0;
    int crops_per_clip = 4;
    bool acs = false;  ///< each crop passes through one randomly drawn channel swap
    QuerySettings query;
};

/// Samples crops and queries from every clip and extracts their features. Deterministic
/// given the seed; parallel over clips (OpenMP) without affecting the result.
std::vector<Example> build_examples(const std::vector<LabeledClip>& clips, const ArrayGeometry& geom,
                                    const FeatureRecipe& recipe, QueryMode mode, const FeatureSettings& features,
                                    const ExampleSettings& settings, std::uint64_t seed);

/// Crops only (no features), as used by the tagging harnesses.
std::vector<Crop> sample_crops(const std::vector<LabeledClip>& clips, double seconds, int crops_per_clip,
                               std::uint64_t seed);

}  // namespace regiontag
