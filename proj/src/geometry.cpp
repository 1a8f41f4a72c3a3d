#include "regiontag/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "regiontag/error.hpp"

namespace regiontag {

namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;

Vec3 spherical(double azimuth_deg, double elevation_deg, double radius) {
    const double az = azimuth_deg * kDegToRad;
    const double el = elevation_deg * kDegToRad;
    return {radius * std::cos(el) * std::cos(az), radius * std::cos(el) * std::sin(az),
            radius * std::sin(el)};
}

void check_pair(MicPair pair) {
    if (pair.first < 0 || pair.first >= kNumMics || pair.second < 0 || pair.second >= kNumMics) {
        usage_error("mic pair (" + std::to_string(pair.first) + "," + std::to_string(pair.second) +
                    ") out of range");
    }
}

std::string_view trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

}  // namespace

double Vec3::norm() const { return std::sqrt(dot(*this)); }

Vec3 ArrayGeometry::centroid() const {
    Vec3 c;
    for (const auto& m : mic_positions) c = c + m;
    return c * (1.0 / kNumMics);
}

double ArrayGeometry::pair_distance(int first, int second) const {
    check_pair({first, second});
    return (mic_positions[first] - mic_positions[second]).norm();
}

void ArrayGeometry::validate() const {
    for (const auto& m : mic_positions) {
        if (!std::isfinite(m.x) || !std::isfinite(m.y) || !std::isfinite(m.z)) {
            data_error("geometry: non-finite microphone position");
        }
    }
    if (centroid().norm() > 1e-9) data_error("geometry: microphone centroid is not at the origin");
    if (!(sound_speed > 0.0)) data_error("geometry: sound_speed must be positive");
    if (!(sample_rate > 0.0)) data_error("geometry: sample_rate must be positive");
}

double wrap_azimuth(double degrees) {
    double w = std::fmod(degrees + 180.0, 360.0);
    if (w < 0.0) w += 360.0;
    // fmod of a tiny negative value can round to exactly 360
    if (w >= 360.0) w -= 360.0;
    return w - 180.0;
}

DirectionOfArrival DirectionOfArrival::make(double azimuth_deg, double elevation_deg) {
    if (!std::isfinite(azimuth_deg) || !(elevation_deg >= -90.0 && elevation_deg <= 90.0)) {
        usage_error("direction of arrival out of range");
    }
    return {wrap_azimuth(azimuth_deg), elevation_deg};
}

Vec3 DirectionOfArrival::unit_vector() const { return spherical(azimuth, elevation, 1.0); }

ArrayGeometry default_tetrahedral_geometry() {
    constexpr double radius = 0.042;
    ArrayGeometry g;
    g.mic_positions = {spherical(45.0, 35.0, radius), spherical(-45.0, -35.0, radius),
                       spherical(135.0, -35.0, radius), spherical(-135.0, 35.0, radius)};
    g.sound_speed = 343.0;
    g.sample_rate = 24000.0;
    return g;
}

double pair_delay(const ArrayGeometry& geom, MicPair pair, const DirectionOfArrival& doa,
                  SteeringModel model) {
    check_pair(pair);
    if (model == SteeringModel::LiteralPlanar) {
        // verbatim planar formula; assumes the baseline points along +x
        return geom.pair_distance(pair.first, pair.second) * std::cos(doa.azimuth * kDegToRad) /
               geom.sound_speed;
    }
    const Vec3 baseline = geom.mic_positions[pair.first] - geom.mic_positions[pair.second];
    return baseline.dot(doa.unit_vector()) / geom.sound_speed;
}

double target_phase(const ArrayGeometry& geom, MicPair pair, const DirectionOfArrival& doa,
                    int freq_bin, int n_fft, SteeringModel model) {
    if (n_fft <= 0 || freq_bin < 0 || freq_bin > n_fft / 2) usage_error("frequency bin out of range");
    const double f_phys = static_cast<double>(freq_bin) * geom.sample_rate / n_fft;
    return 2.0 * std::numbers::pi * f_phys * pair_delay(geom, pair, doa, model);
}

ArrayGeometry parse_geometry(std::string_view text) {
    ArrayGeometry g = default_tetrahedral_geometry();
    std::istringstream in{std::string(text)};
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        std::string_view view = line;
        if (const auto hash = view.find('#'); hash != std::string_view::npos) view = view.substr(0, hash);
        view = trim(view);
        if (view.empty()) continue;
        const auto eq = view.find('=');
        if (eq == std::string_view::npos) {
            data_error("geometry line " + std::to_string(line_no) + ": expected key = value");
        }
        const std::string key{trim(view.substr(0, eq))};
        std::istringstream value{std::string(trim(view.substr(eq + 1)))};
        auto fail = [&] { data_error("geometry line " + std::to_string(line_no) + ": bad value for " + key); };
        if (key.size() == 4 && key.starts_with("mic") && key[3] >= '0' && key[3] <= '3') {
            Vec3& m = g.mic_positions[key[3] - '0'];
            if (!(value >> m.x >> m.y >> m.z)) fail();
        } else if (key == "sound_speed") {
            if (!(value >> g.sound_speed)) fail();
        } else if (key == "sample_rate") {
            if (!(value >> g.sample_rate)) fail();
        } else {
            data_error("geometry line " + std::to_string(line_no) + ": unknown key '" + key + "'");
        }
    }
    g.validate();
    return g;
}

ArrayGeometry load_geometry(const std::string& path) {
    std::ifstream in(path);
    if (!in) data_error("cannot open geometry file: " + path);
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_geometry(ss.str());
}

std::string format_geometry(const ArrayGeometry& geom) {
    std::ostringstream out;
    out.precision(17);
    for (int i = 0; i < kNumMics; ++i) {
        const auto& m = geom.mic_positions[i];
        out << "mic" << i << " = " << m.x << ' ' << m.y << ' ' << m.z << '\n';
    }
    out << "sound_speed = " << geom.sound_speed << '\n' << "sample_rate = " << geom.sample_rate << '\n';
    return out.str();
}

}  // namespace regiontag
