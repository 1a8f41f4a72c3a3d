#pragma once

#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace regiontag {

/// Horizontal span traversed counterclockwise from `begin` to `end` (degrees).
/// Spans may cross the +-180 seam; [330, 390] and [-30, 30] are the same span.
struct AngularRegion {
    double begin = -30.0;
    double end = 30.0;

    /// Validates that the width is in (0, 360].
    static AngularRegion make(double begin_deg, double end_deg);
    static AngularRegion centered(double center_deg, double width_deg);

    double width() const;
    /// Wrapped azimuth halfway through the span.
    double middle() const;
};

struct DistanceQuery {
    double meters = 1.0;
};

using RegionQuery = std::variant<AngularRegion, DistanceQuery>;

/// Boundary-inclusive membership of a (wrapped) azimuth in the span.
bool region_contains(const AngularRegion& region, double azimuth_deg);

/// Lower-inclusive, upper-exclusive membership; used where regions must partition the circle.
bool region_contains_half_open(const AngularRegion& region, double azimuth_deg);

/// Parses "begin:end" in degrees.
AngularRegion parse_angular_region(std::string_view text);

/// Azimuth grid covering [-180, 180) at a fixed resolution.
struct AngleGrid {
    double resolution = 5.0;
    std::vector<double> angles;

    /// Throws unless the resolution divides 360.
    static AngleGrid make(double resolution_deg);
};

}  // namespace regiontag
