#pragma once

#include <complex>
#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "regiontag/geometry.hpp"

namespace regiontag {

/// Time-domain multichannel audio, channel-major.
struct MultichannelClip {
    std::vector<std::vector<double>> channels;
    double sample_rate = 24000.0;

    static MultichannelClip zeros(int num_channels, std::size_t length, double sample_rate);

    int num_channels() const { return static_cast<int>(channels.size()); }
    std::size_t length() const { return channels.empty() ? 0 : channels.front().size(); }
    double duration() const { return static_cast<double>(length()) / sample_rate; }

    /// Equal-length channels, L > 0, finite samples, positive rate.
    void validate() const;
    /// Copy of samples [start, start + count).
    MultichannelClip slice(std::size_t start, std::size_t count) const;
};

enum class Window { Hann, Rectangular };

/// Per-channel complex STFT, indexed (channel, frame, bin).
class SpectroTensor {
public:
    SpectroTensor() = default;
    SpectroTensor(int channels, int frames, int n_fft, int hop, double sample_rate);

    int channels() const { return channels_; }
    int frames() const { return frames_; }
    int bins() const { return bins_; }
    int n_fft() const { return n_fft_; }
    int hop() const { return hop_; }
    double sample_rate() const { return sample_rate_; }

    std::complex<double>& at(int c, int t, int f) { return data_[index(c, t, f)]; }
    const std::complex<double>& at(int c, int t, int f) const { return data_[index(c, t, f)]; }
    std::complex<double>* frame(int c, int t) { return data_.data() + index(c, t, 0); }
    const std::complex<double>* frame(int c, int t) const { return data_.data() + index(c, t, 0); }
    const std::vector<std::complex<double>>& data() const { return data_; }

    /// Returns a tensor whose channel j is channel order[j] of this one.
    SpectroTensor permuted(const std::vector<int>& order) const;

private:
    std::size_t index(int c, int t, int f) const {
        return (static_cast<std::size_t>(c) * frames_ + t) * bins_ + f;
    }

    int channels_ = 0;
    int frames_ = 0;
    int bins_ = 0;
    int n_fft_ = 0;
    int hop_ = 0;
    double sample_rate_ = 0.0;
    std::vector<std::complex<double>> data_;
};

enum class PlaneKind : std::uint8_t { LPS = 0, IPD = 1, GCCPHAT = 2, DF = 3, FOV = 4, EMBED = 5 };

std::string_view plane_kind_name(PlaneKind kind);
PlaneKind parse_plane_kind(std::string_view name);

/// One T x F real-valued feature plane, row-major over (frame, bin).
struct FeaturePlane {
    int frames = 0;
    int bins = 0;
    PlaneKind kind = PlaneKind::LPS;
    std::vector<double> values;

    FeaturePlane() = default;
    FeaturePlane(int frames_, int bins_, PlaneKind kind_, double fill = 0.0)
        : frames(frames_), bins(bins_), kind(kind_),
          values(static_cast<std::size_t>(frames_) * bins_, fill) {}

    double& at(int t, int f) { return values[static_cast<std::size_t>(t) * bins + f]; }
    double at(int t, int f) const { return values[static_cast<std::size_t>(t) * bins + f]; }
};

inline constexpr double kSpectralFloor = 1e-10;
inline constexpr int kDefaultNfft = 512;
inline constexpr int kDefaultHop = 256;

/// Frames start at sample 0 with no centering; T = floor((L - n_fft) / hop) + 1.
/// Throws Error(Data) "clip too short" when L < n_fft.
SpectroTensor stft(const MultichannelClip& clip, int n_fft = kDefaultNfft, int hop = kDefaultHop,
                   Window window = Window::Hann);

/// Periodic Hann (or all-ones) analysis window of length n.
std::vector<double> analysis_window(int n, Window window);

/// log(|X|^2 + 1e-10) for one channel.
FeaturePlane lps(const SpectroTensor& spec, int channel);

/// angle(X^first) - angle(X^second), wrapped to (-pi, pi].
FeaturePlane ipd(const SpectroTensor& spec, MicPair pair);

/// Wraps radians into (-pi, pi].
double wrap_phase(double radians);

/// GCC-PHAT per frame, lags -max_lag..+max_lag. Lag l holds the correlation for
/// the second channel lagging the first by l samples, so a pure delay of D
/// samples on `pair.second` peaks at l = D.
struct LagMatrix {
    int frames = 0;
    int max_lag = 0;
    std::vector<double> values;  // frames x (2 max_lag + 1)

    int lags() const { return 2 * max_lag + 1; }
    double at(int t, int lag) const {
        return values[static_cast<std::size_t>(t) * lags() + (lag + max_lag)];
    }
    /// Lag (in samples) of the maximum for frame t; ties resolve to the smallest lag.
    int peak_lag(int t) const;
};

LagMatrix gcc_phat(const SpectroTensor& spec, MicPair pair, int max_lag);

/// GCC-PHAT resampled along the lag axis to the spectrogram's F bins by linear
/// interpolation, so it stacks with the other T x F planes.
FeaturePlane gcc_phat_plane(const SpectroTensor& spec, MicPair pair, int max_lag);

inline constexpr int kDefaultGccMaxLag = 32;

}  // namespace regiontag
