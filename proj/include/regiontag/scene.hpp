#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "regiontag/dsp.hpp"
#include "regiontag/geometry.hpp"

namespace regiontag {

inline constexpr int kNumClasses = 13;
inline constexpr double kAnnotationHop = 0.1;

std::string_view class_name(int class_id);

/// splitmix64 finalizer; derives independent seeds from a parent seed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t salt);

/// Synthesis recipe for one synthetic sound class: a harmonic comb plus band-limited
/// noise, shaped by an amplitude envelope.
struct ClassRecipe {
    double f0_hz;             ///< comb fundamental (0: no comb)
    int harmonics;            ///< number of comb partials
    double partial_ratio;     ///< partial k sits at f0 * k^ratio_exp; 1 = harmonic
    double harmonic_decay;    ///< amplitude ratio between successive partials
    double noise_lo_hz;       ///< band-limited noise lower edge
    double noise_hi_hz;       ///< band-limited noise upper edge
    double noise_mix;         ///< 0 = comb only, 1 = noise only
    double am_rate_hz;        ///< envelope modulation rate
    double am_depth;          ///< 0 = steady
    bool pulsed;              ///< envelope is a train of decaying bursts instead of a sinusoid
};

const ClassRecipe& class_recipe(int class_id);

/// Deterministic synthetic event: same (class, duration, seed) gives bit-identical
/// output. Peak-normalized to 0.5. Duration must lie in [0.2, 10] s.
std::vector<double> event_bank(int class_id, double duration, std::uint64_t seed,
                               double sample_rate = 24000.0);

/// User-supplied mono recordings per class, used instead of the synthetic bank.
struct WavBank {
    std::array<std::vector<std::vector<double>>, kNumClasses> clips;
    double sample_rate = 24000.0;

    /// Loads every "<class>_*.wav" (mono, matching rate) from a directory.
    static WavBank load(const std::string& directory, double sample_rate = 24000.0);
    /// Picks a recording by seed, loops/trims it to the duration, peak-normalizes to 0.5.
    std::vector<double> event(int class_id, double duration, std::uint64_t seed) const;
};

struct EventSpec {
    int class_id = 0;
    double onset = 0.0;     ///< seconds
    double duration = 1.0;  ///< seconds
    double azimuth = 0.0;   ///< degrees
    double elevation = 0.0; ///< degrees
    double distance = 1.0;  ///< meters
    double gain = 1.0;      ///< linear amplitude at the 1 m reference
};

struct SceneSpec {
    double clip_length = 10.0;
    std::vector<EventSpec> events;
    std::optional<double> noise_snr_db;
    std::uint64_t seed = 0;

    void validate() const;
};

struct AnnotatedEvent {
    int class_id = 0;
    int event_index = 0;
    double azimuth = 0.0;
    double elevation = 0.0;
    double distance = 0.0;

    bool operator==(const AnnotatedEvent&) const = default;
};

struct SceneAnnotation {
    double frame_hop = kAnnotationHop;
    std::vector<std::vector<AnnotatedEvent>> frames;

    bool operator==(const SceneAnnotation&) const = default;

    /// Distinct events active in any frame overlapping [start, end) seconds, ordered by event index.
    std::vector<AnnotatedEvent> events_between(double start, double end) const;
};

/// Free-field plane-wave rendering of a mono event onto the array: per-mic fractional
/// delay (32-tap windowed sinc) and 1/r amplitude referenced at 1 m.
MultichannelClip spatialize(std::span<const double> signal, const EventSpec& event,
                            const ArrayGeometry& geom);

struct RenderedScene {
    MultichannelClip clip;
    SceneAnnotation annotation;
};

/// Sums spatialized events, adds diffuse Gaussian noise at the requested SNR and
/// peak-limits to 0.99 by global scaling. Events come from `bank` when given.
RenderedScene render_scene(const SceneSpec& spec, const ArrayGeometry& geom,
                           const WavBank* bank = nullptr);

/// Annotation for a scene without rendering audio.
SceneAnnotation annotate_scene(const SceneSpec& spec);

/// CSV: header then `frame_index,class_index,event_index,azimuth_deg,elevation_deg,distance_m`.
std::string format_annotation(const SceneAnnotation& ann);
/// Parses the CSV; `num_frames` pads trailing empty frames (default: last frame with a row).
SceneAnnotation parse_annotation(std::string_view text, std::optional<int> num_frames = std::nullopt);
void write_annotation(const SceneAnnotation& ann, const std::string& path);
SceneAnnotation read_annotation(const std::string& path, std::optional<int> num_frames = std::nullopt);

/// Random scene statistics. Event counts follow N(mean, std) per minute, scaled to
/// the clip length, rounded and clamped to at least one.
struct SceneParams {
    double clip_length = 60.0;
    double events_mean_per_minute = 25.0;
    double events_std_per_minute = 3.0;
    int num_classes = kNumClasses;
    double duration_min = 1.0;
    double duration_max = 4.0;
    double elevation_min = -40.0;
    double elevation_max = 40.0;
    double distance_min = 1.0;
    double distance_max = 4.0;
    std::vector<double> distance_levels;  ///< when non-empty, distances are drawn from this set
    double gain_db_min = -6.0;
    double gain_db_max = 0.0;
    std::optional<double> noise_snr_db = 30.0;
};

int sample_event_count(const SceneParams& params, std::uint64_t seed);
SceneSpec sample_scene(const SceneParams& params, std::uint64_t seed);

}  // namespace regiontag
