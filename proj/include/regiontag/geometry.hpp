#pragma once

#include <array>
#include <string>
#include <string_view>

namespace regiontag {

struct Vec3 {
    double x = 0.0;
    double y = 0.0;
    double z = 0.0;

    Vec3 operator-(const Vec3& o) const { return {x - o.x, y - o.y, z - o.z}; }
    Vec3 operator+(const Vec3& o) const { return {x + o.x, y + o.y, z + o.z}; }
    Vec3 operator*(double s) const { return {x * s, y * s, z * s}; }
    double dot(const Vec3& o) const { return x * o.x + y * o.y + z * o.z; }
    double norm() const;
};

inline constexpr int kNumMics = 4;

/// Four-capsule array in array-centered coordinates (meters).
struct ArrayGeometry {
    std::array<Vec3, kNumMics> mic_positions{};
    double sound_speed = 343.0;
    double sample_rate = 24000.0;

    /// Throws Error(Data) when positions are non-finite, the centroid is off the
    /// origin by more than 1e-9 m, or speed/rate are not positive.
    void validate() const;
    Vec3 centroid() const;
    /// Euclidean distance between the two microphones of a pair.
    double pair_distance(int first, int second) const;
};

struct MicPair {
    int first = 0;
    int second = 0;

    MicPair swapped() const { return {second, first}; }
    bool operator==(const MicPair&) const = default;
};

/// Reference-mic pairs used by the IPD, GCC-PHAT and directional features.
inline constexpr std::array<MicPair, 4> kFeaturePairs{{{0, 0}, {0, 1}, {0, 2}, {0, 3}}};

/// Azimuth in [-180, 180), elevation in [-90, 90], both degrees.
struct DirectionOfArrival {
    double azimuth = 0.0;
    double elevation = 0.0;

    /// Wraps azimuth into range; throws if elevation is outside [-90, 90].
    static DirectionOfArrival make(double azimuth_deg, double elevation_deg);
    /// Unit vector pointing from the array toward the source.
    Vec3 unit_vector() const;
};

/// Wraps an angle in degrees into [-180, 180).
double wrap_azimuth(double degrees);

enum class SteeringModel {
    Geometric,      ///< dot-product delay, valid for any pair orientation
    LiteralPlanar,  ///< phi * cos(azimuth), only meaningful for x-axis pairs at zero elevation
};

ArrayGeometry default_tetrahedral_geometry();

/// Arrival-time lead of mic `first` over mic `second` for a far-field source,
/// i.e. how many seconds the second channel lags the first.
double pair_delay(const ArrayGeometry& geom, MicPair pair, const DirectionOfArrival& doa,
                  SteeringModel model = SteeringModel::Geometric);

/// Expected inter-channel phase (radians) of `pair` at an STFT bin.
double target_phase(const ArrayGeometry& geom, MicPair pair, const DirectionOfArrival& doa,
                    int freq_bin, int n_fft, SteeringModel model = SteeringModel::Geometric);

/// Parses the key-value geometry format:
///   mic0 = x y z   (one line per mic, meters)
///   sound_speed = 343
///   sample_rate = 24000
/// Blank lines and '#' comments are ignored; unspecified keys keep their defaults.
ArrayGeometry parse_geometry(std::string_view text);
ArrayGeometry load_geometry(const std::string& path);
std::string format_geometry(const ArrayGeometry& geom);

}  // namespace regiontag
