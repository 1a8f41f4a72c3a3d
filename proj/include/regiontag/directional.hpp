#pragma once

#include <atomic>
#include <cstddef>
#include <span>
#include <vector>

#include "regiontag/dsp.hpp"
#include "regiontag/geometry.hpp"
#include "regiontag/region.hpp"

namespace regiontag {

/// Caches cos/sin of the IPD planes for a pair list so that the directional
/// feature can be evaluated at many azimuths without recomputing the STFT or IPD.
/// DF(theta) = sum_n cos(IPD^n - P^n(theta)), evaluated at zero elevation.
class DirectionalFeatureBank {
public:
    DirectionalFeatureBank(const SpectroTensor& spec, const ArrayGeometry& geom,
                           std::span<const MicPair> pairs,
                           SteeringModel model = SteeringModel::Geometric);

    int frames() const { return frames_; }
    int bins() const { return bins_; }
    std::size_t num_pairs() const { return pairs_.size(); }

    /// Full T x F plane at one azimuth. Counts as one DF evaluation.
    FeaturePlane evaluate(double azimuth_deg) const;

    /// Per-bin steering terms for one azimuth: cos and sin of P^n, laid out [pair][bin].
    struct Steering {
        std::vector<double> cos_p;
        std::vector<double> sin_p;
    };
    Steering steering(double azimuth_deg) const;

    /// Accumulates DF for frame t into `row` (length F), overwriting it.
    void evaluate_row(const Steering& s, int t, double* row) const;

    std::size_t evaluations() const { return evaluations_.load(); }
    void count_evaluations(std::size_t n) const { evaluations_ += n; }

private:
    const ArrayGeometry geom_;
    std::vector<MicPair> pairs_;
    SteeringModel model_;
    int frames_;
    int bins_;
    int n_fft_;
    std::vector<double> cos_ipd_;  // [pair][t][f]
    std::vector<double> sin_ipd_;
    mutable std::atomic<std::size_t> evaluations_{0};
};

/// Directional feature plane at one azimuth (kind DF).
FeaturePlane directional_feature(const SpectroTensor& spec, const ArrayGeometry& geom,
                                 std::span<const MicPair> pairs, double azimuth_deg,
                                 SteeringModel model = SteeringModel::Geometric);

/// Field-of-view feature (kind FOV): per bin F_in if F_in > F_out else -1, where F_in and
/// F_out are DF maxima over grid angles inside / outside the region (boundaries count as
/// inside; an empty set has maximum -inf). Exactly one DF evaluation per grid angle.
FeaturePlane fov_feature(const DirectionalFeatureBank& bank, const AngularRegion& region,
                         const AngleGrid& grid);
FeaturePlane fov_feature(const SpectroTensor& spec, const ArrayGeometry& geom,
                         std::span<const MicPair> pairs, const AngularRegion& region,
                         const AngleGrid& grid);

namespace kernels {

/// Reference DF: direct cos(IPD - P) per bin from freshly computed IPD planes.
FeaturePlane directional_feature_reference(const SpectroTensor& spec, const ArrayGeometry& geom,
                                           std::span<const MicPair> pairs, double azimuth_deg,
                                           SteeringModel model = SteeringModel::Geometric);

/// Angle-major serial FOV reduction: evaluates each grid plane in full, then folds it in.
FeaturePlane fov_serial(const DirectionalFeatureBank& bank, const AngularRegion& region,
                        const AngleGrid& grid);

/// Frame-parallel FOV reduction (OpenMP). Performs the same per-bin arithmetic as
/// fov_serial, so the outputs are bit-identical for any thread count.
FeaturePlane fov_parallel(const DirectionalFeatureBank& bank, const AngularRegion& region,
                          const AngleGrid& grid);

}  // namespace kernels

}  // namespace regiontag
