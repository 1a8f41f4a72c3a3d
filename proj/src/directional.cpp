#include "regiontag/directional.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "regiontag/error.hpp"

namespace regiontag {

DirectionalFeatureBank::DirectionalFeatureBank(const SpectroTensor& spec, const ArrayGeometry& geom,
                                               std::span<const MicPair> pairs, SteeringModel model)
    : geom_(geom), pairs_(pairs.begin(), pairs.end()), model_(model), frames_(spec.frames()),
      bins_(spec.bins()), n_fft_(spec.n_fft()) {
    if (pairs_.empty()) usage_error("directional feature needs at least one mic pair");
    const std::size_t plane = static_cast<std::size_t>(frames_) * bins_;
    cos_ipd_.resize(plane * pairs_.size());
    sin_ipd_.resize(plane * pairs_.size());
    for (std::size_t n = 0; n < pairs_.size(); ++n) {
        const FeaturePlane phase = ipd(spec, pairs_[n]);
        for (std::size_t i = 0; i < plane; ++i) {
            cos_ipd_[n * plane + i] = std::cos(phase.values[i]);
            sin_ipd_[n * plane + i] = std::sin(phase.values[i]);
        }
    }
}

DirectionalFeatureBank::Steering DirectionalFeatureBank::steering(double azimuth_deg) const {
    const DirectionOfArrival doa = DirectionOfArrival::make(azimuth_deg, 0.0);
    Steering s;
    s.cos_p.resize(pairs_.size() * static_cast<std::size_t>(bins_));
    s.sin_p.resize(s.cos_p.size());
    for (std::size_t n = 0; n < pairs_.size(); ++n) {
        for (int f = 0; f < bins_; ++f) {
            const double p = target_phase(geom_, pairs_[n], doa, f, n_fft_, model_);
            s.cos_p[n * bins_ + f] = std::cos(p);
            s.sin_p[n * bins_ + f] = std::sin(p);
        }
    }
    return s;
}

void DirectionalFeatureBank::evaluate_row(const Steering& s, int t, double* row) const {
    const std::size_t plane = static_cast<std::size_t>(frames_) * bins_;
    std::fill(row, row + bins_, 0.0);
    for (std::size_t n = 0; n < pairs_.size(); ++n) {
        const double* ci = cos_ipd_.data() + n * plane + static_cast<std::size_t>(t) * bins_;
        const double* si = sin_ipd_.data() + n * plane + static_cast<std::size_t>(t) * bins_;
        const double* cp = s.cos_p.data() + n * bins_;
        const double* sp = s.sin_p.data() + n * bins_;
        // cos(a - b) = cos a cos b + sin a sin b
        for (int f = 0; f < bins_; ++f) row[f] += ci[f] * cp[f] + si[f] * sp[f];
    }
}

FeaturePlane DirectionalFeatureBank::evaluate(double azimuth_deg) const {
    FeaturePlane out(frames_, bins_, PlaneKind::DF);
    const Steering s = steering(azimuth_deg);
    for (int t = 0; t < frames_; ++t) evaluate_row(s, t, &out.at(t, 0));
    count_evaluations(1);
    return out;
}

FeaturePlane directional_feature(const SpectroTensor& spec, const ArrayGeometry& geom,
                                 std::span<const MicPair> pairs, double azimuth_deg, SteeringModel model) {
    return DirectionalFeatureBank(spec, geom, pairs, model).evaluate(azimuth_deg);
}

FeaturePlane fov_feature(const DirectionalFeatureBank& bank, const AngularRegion& region,
                         const AngleGrid& grid) {
    return kernels::fov_parallel(bank, region, grid);
}

FeaturePlane fov_feature(const SpectroTensor& spec, const ArrayGeometry& geom,
                         std::span<const MicPair> pairs, const AngularRegion& region,
                         const AngleGrid& grid) {
    return fov_feature(DirectionalFeatureBank(spec, geom, pairs), region, grid);
}

namespace kernels {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

FeaturePlane gate(const std::vector<double>& f_in, const std::vector<double>& f_out, int frames, int bins) {
    FeaturePlane out(frames, bins, PlaneKind::FOV);
    for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] = f_in[i] > f_out[i] ? f_in[i] : -1.0;
    return out;
}

}  // namespace

FeaturePlane directional_feature_reference(const SpectroTensor& spec, const ArrayGeometry& geom,
                                           std::span<const MicPair> pairs, double azimuth_deg,
                                           SteeringModel model) {
    const DirectionOfArrival doa = DirectionOfArrival::make(azimuth_deg, 0.0);
    FeaturePlane out(spec.frames(), spec.bins(), PlaneKind::DF);
    for (const MicPair pair : pairs) {
        const FeaturePlane phase = ipd(spec, pair);
        for (int t = 0; t < spec.frames(); ++t) {
            for (int f = 0; f < spec.bins(); ++f) {
                out.at(t, f) += std::cos(phase.at(t, f) - target_phase(geom, pair, doa, f, spec.n_fft(), model));
            }
        }
    }
    return out;
}

FeaturePlane fov_serial(const DirectionalFeatureBank& bank, const AngularRegion& region,
                        const AngleGrid& grid) {
    const std::size_t plane = static_cast<std::size_t>(bank.frames()) * bank.bins();
    std::vector<double> f_in(plane, kNegInf);
    std::vector<double> f_out(plane, kNegInf);
    for (const double angle : grid.angles) {
        const FeaturePlane df = bank.evaluate(angle);
        auto& target = region_contains(region, angle) ? f_in : f_out;
        for (std::size_t i = 0; i < plane; ++i) target[i] = std::max(target[i], df.values[i]);
    }
    return gate(f_in, f_out, bank.frames(), bank.bins());
}

FeaturePlane fov_parallel(const DirectionalFeatureBank& bank, const AngularRegion& region,
                          const AngleGrid& grid) {
    const int frames = bank.frames();
    const int bins = bank.bins();
    const std::size_t plane = static_cast<std::size_t>(frames) * bins;
    const std::size_t n_angles = grid.angles.size();

    std::vector<DirectionalFeatureBank::Steering> steer(n_angles);
    std::vector<char> inside(n_angles);
    for (std::size_t a = 0; a < n_angles; ++a) {
        steer[a] = bank.steering(grid.angles[a]);
        inside[a] = region_contains(region, grid.angles[a]) ? 1 : 0;
    }
    std::vector<double> f_in(plane, kNegInf);
    std::vector<double> f_out(plane, kNegInf);

#pragma omp parallel
    {
        std::vector<double> row(static_cast<std::size_t>(bins));
#pragma omp for schedule(static)
        for (int t = 0; t < frames; ++t) {
            double* in_row = f_in.data() + static_cast<std::size_t>(t) * bins;
            double* out_row = f_out.data() + static_cast<std::size_t>(t) * bins;
            for (std::size_t a = 0; a < n_angles; ++a) {
                bank.evaluate_row(steer[a], t, row.data());
                double* target = inside[a] ? in_row : out_row;
                for (int f = 0; f < bins; ++f) target[f] = std::max(target[f], row[f]);
            }
        }
    }
    bank.count_evaluations(n_angles);
    return gate(f_in, f_out, frames, bins);
}

}  // namespace kernels

}  // namespace regiontag
