#include "regiontag/region.hpp"

#include <cmath>
#include <string>

#include "regiontag/error.hpp"
#include "regiontag/geometry.hpp"

namespace regiontag {

namespace {

double span_width(double begin, double end) {
    const double raw = end - begin;
    if (raw > 0.0 && raw <= 360.0) return raw;
    double w = std::fmod(raw, 360.0);
    if (w < 0.0) w += 360.0;
    return w;
}

}  // namespace

AngularRegion AngularRegion::make(double begin_deg, double end_deg) {
    if (!std::isfinite(begin_deg) || !std::isfinite(end_deg)) usage_error("region bounds must be finite");
    const double w = span_width(begin_deg, end_deg);
    if (!(w > 0.0 && w <= 360.0)) usage_error("region width must be in (0, 360]");
    return {begin_deg, end_deg};
}

AngularRegion AngularRegion::centered(double center_deg, double width_deg) {
    if (!(width_deg > 0.0 && width_deg <= 360.0)) usage_error("region width must be in (0, 360]");
    return {center_deg - width_deg / 2.0, center_deg + width_deg / 2.0};
}

double AngularRegion::width() const { return span_width(begin, end); }

double AngularRegion::middle() const { return wrap_azimuth(begin + width() / 2.0); }

bool region_contains(const AngularRegion& region, double azimuth_deg) {
    const double w = region.width();
    if (w >= 360.0) return true;
    double d = std::fmod(wrap_azimuth(azimuth_deg) - wrap_azimuth(region.begin), 360.0);
    if (d < 0.0) d += 360.0;
    return d <= w;
}

bool region_contains_half_open(const AngularRegion& region, double azimuth_deg) {
    const double w = region.width();
    if (w >= 360.0) return true;
    double d = std::fmod(wrap_azimuth(azimuth_deg) - wrap_azimuth(region.begin), 360.0);
    if (d < 0.0) d += 360.0;
    return d < w;
}

AngularRegion parse_angular_region(std::string_view text) {
    const auto colon = text.find(':');
    if (colon == std::string_view::npos) usage_error("region must be 'begin:end' in degrees");
    try {
        std::size_t used = 0;
        const std::string b(text.substr(0, colon));
        const std::string e(text.substr(colon + 1));
        const double begin = std::stod(b, &used);
        if (used != b.size()) throw std::invalid_argument(b);
        const double end = std::stod(e, &used);
        if (used != e.size()) throw std::invalid_argument(e);
        return AngularRegion::make(begin, end);
    } catch (const std::logic_error&) {
        usage_error("cannot parse region '" + std::string(text) + "'");
    }
}

AngleGrid AngleGrid::make(double resolution_deg) {
    if (!(resolution_deg > 0.0)) usage_error("grid resolution must be positive");
    const double count = 360.0 / resolution_deg;
    const long n = std::lround(count);
    if (n < 1 || std::abs(count - static_cast<double>(n)) > 1e-9) usage_error("grid resolution must divide 360");
    AngleGrid grid;
    grid.resolution = resolution_deg;
    grid.angles.reserve(static_cast<std::size_t>(n));
    for (long i = 0; i < n; ++i) grid.angles.push_back(-180.0 + static_cast<double>(i) * resolution_deg);
    return grid;
}

}  // namespace regiontag
