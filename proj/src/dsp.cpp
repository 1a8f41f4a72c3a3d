#include "regiontag/dsp.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "regiontag/error.hpp"
#include "regiontag/fft.hpp"

namespace regiontag {

MultichannelClip MultichannelClip::zeros(int num_channels, std::size_t length, double sample_rate) {
    MultichannelClip clip;
    clip.channels.assign(static_cast<std::size_t>(num_channels), std::vector<double>(length, 0.0));
    clip.sample_rate = sample_rate;
    return clip;
}

void MultichannelClip::validate() const {
    if (channels.empty()) data_error("clip has no channels");
    if (!(sample_rate > 0.0)) data_error("clip sample rate must be positive");
    const std::size_t len = channels.front().size();
    if (len == 0) data_error("clip is empty");
    for (const auto& ch : channels) {
        if (ch.size() != len) data_error("clip channels have unequal lengths");
        for (double v : ch) {
            if (!std::isfinite(v)) data_error("clip contains non-finite samples");
        }
    }
}

MultichannelClip MultichannelClip::slice(std::size_t start, std::size_t count) const {
    if (start + count > length()) usage_error("clip slice out of range");
    MultichannelClip out;
    out.sample_rate = sample_rate;
    out.channels.reserve(channels.size());
    for (const auto& ch : channels) {
        out.channels.emplace_back(ch.begin() + static_cast<std::ptrdiff_t>(start),
                                  ch.begin() + static_cast<std::ptrdiff_t>(start + count));
    }
    return out;
}

SpectroTensor::SpectroTensor(int channels, int frames, int n_fft, int hop, double sample_rate)
    : channels_(channels), frames_(frames), bins_(n_fft / 2 + 1), n_fft_(n_fft), hop_(hop),
      sample_rate_(sample_rate),
      data_(static_cast<std::size_t>(channels) * frames * (n_fft / 2 + 1)) {}

SpectroTensor SpectroTensor::permuted(const std::vector<int>& order) const {
    if (static_cast<int>(order.size()) != channels_) usage_error("permutation size mismatch");
    SpectroTensor out(channels_, frames_, n_fft_, hop_, sample_rate_);
    const std::size_t plane = static_cast<std::size_t>(frames_) * bins_;
    for (int j = 0; j < channels_; ++j) {
        if (order[j] < 0 || order[j] >= channels_) usage_error("permutation index out of range");
        std::copy_n(data_.begin() + static_cast<std::ptrdiff_t>(order[j] * plane), plane,
                    out.data_.begin() + static_cast<std::ptrdiff_t>(j * plane));
    }
    return out;
}

std::string_view plane_kind_name(PlaneKind kind) {
    switch (kind) {
        case PlaneKind::LPS: return "lps";
        case PlaneKind::IPD: return "ipd";
        case PlaneKind::GCCPHAT: return "gccphat";
        case PlaneKind::DF: return "df";
        case PlaneKind::FOV: return "fov";
        case PlaneKind::EMBED: return "embed";
    }
    return "?";
}

PlaneKind parse_plane_kind(std::string_view name) {
    for (auto k : {PlaneKind::LPS, PlaneKind::IPD, PlaneKind::GCCPHAT, PlaneKind::DF, PlaneKind::FOV,
                   PlaneKind::EMBED}) {
        if (plane_kind_name(k) == name) return k;
    }
    usage_error("unknown feature kind '" + std::string(name) + "'");
}

std::vector<double> analysis_window(int n, Window window) {
    std::vector<double> w(static_cast<std::size_t>(n), 1.0);
    if (window == Window::Hann) {
        for (int i = 0; i < n; ++i) w[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * i / n);
    }
    return w;
}

SpectroTensor stft(const MultichannelClip& clip, int n_fft, int hop, Window window) {
    if (n_fft <= 0 || (n_fft & (n_fft - 1)) != 0) usage_error("n_fft must be a power of two");
    if (hop <= 0 || hop > n_fft) usage_error("hop must be in [1, n_fft]");
    clip.validate();
    const std::size_t len = clip.length();
    if (len < static_cast<std::size_t>(n_fft)) data_error("clip too short");
    const int frames = static_cast<int>((len - n_fft) / hop) + 1;

    SpectroTensor spec(clip.num_channels(), frames, n_fft, hop, clip.sample_rate);
    const RealFft fft(n_fft);
    const auto win = analysis_window(n_fft, window);
    std::vector<double> buf(static_cast<std::size_t>(n_fft));
    for (int c = 0; c < clip.num_channels(); ++c) {
        const auto& x = clip.channels[c];
        for (int t = 0; t < frames; ++t) {
            const std::size_t start = static_cast<std::size_t>(t) * hop;
            for (int i = 0; i < n_fft; ++i) buf[i] = x[start + i] * win[i];
            fft.forward(buf, {spec.frame(c, t), static_cast<std::size_t>(spec.bins())});
        }
    }
    return spec;
}

FeaturePlane lps(const SpectroTensor& spec, int channel) {
    if (channel < 0 || channel >= spec.channels()) usage_error("lps: channel out of range");
    FeaturePlane out(spec.frames(), spec.bins(), PlaneKind::LPS);
    for (int t = 0; t < spec.frames(); ++t) {
        const auto* row = spec.frame(channel, t);
        for (int f = 0; f < spec.bins(); ++f) out.at(t, f) = std::log(std::norm(row[f]) + kSpectralFloor);
    }
    return out;
}

double wrap_phase(double radians) {
    constexpr double two_pi = 2.0 * std::numbers::pi;
    double w = std::remainder(radians, two_pi);  // [-pi, pi]
    if (w <= -std::numbers::pi) w += two_pi;
    return w;
}

FeaturePlane ipd(const SpectroTensor& spec, MicPair pair) {
    if (pair.first < 0 || pair.first >= spec.channels() || pair.second < 0 ||
        pair.second >= spec.channels()) {
        usage_error("ipd: mic pair out of range");
    }
    FeaturePlane out(spec.frames(), spec.bins(), PlaneKind::IPD);
    if (pair.first == pair.second) return out;
    for (int t = 0; t < spec.frames(); ++t) {
        const auto* a = spec.frame(pair.first, t);
        const auto* b = spec.frame(pair.second, t);
        for (int f = 0; f < spec.bins(); ++f) out.at(t, f) = wrap_phase(std::arg(a[f]) - std::arg(b[f]));
    }
    return out;
}

int LagMatrix::peak_lag(int t) const {
    int best = -max_lag;
    for (int lag = -max_lag + 1; lag <= max_lag; ++lag) {
        if (at(t, lag) > at(t, best)) best = lag;
    }
    return best;
}

LagMatrix gcc_phat(const SpectroTensor& spec, MicPair pair, int max_lag) {
    if (max_lag < 0 || max_lag > spec.n_fft() / 2) usage_error("gcc_phat: max_lag must be in [0, n_fft/2]");
    if (pair.first < 0 || pair.first >= spec.channels() || pair.second < 0 ||
        pair.second >= spec.channels()) {
        usage_error("gcc_phat: mic pair out of range");
    }
    const int n = spec.n_fft();
    LagMatrix out;
    out.frames = spec.frames();
    out.max_lag = max_lag;
    out.values.resize(static_cast<std::size_t>(out.frames) * out.lags());

    const RealFft fft(n);
    std::vector<std::complex<double>> cross(static_cast<std::size_t>(spec.bins()));
    std::vector<double> corr(static_cast<std::size_t>(n));
    for (int t = 0; t < spec.frames(); ++t) {
        const auto* a = spec.frame(pair.first, t);
        const auto* b = spec.frame(pair.second, t);
        for (int f = 0; f < spec.bins(); ++f) {
            // conjugate on the first channel so a lag of the second channel peaks at +lag
            const std::complex<double> c = b[f] * std::conj(a[f]);
            cross[f] = c / (std::abs(c) + kSpectralFloor);
        }
        fft.inverse(cross, corr);
        double* row = out.values.data() + static_cast<std::size_t>(t) * out.lags();
        for (int lag = -max_lag; lag <= max_lag; ++lag) {
            row[lag + max_lag] = corr[static_cast<std::size_t>((lag + n) % n)] / n;
        }
    }
    return out;
}

FeaturePlane gcc_phat_plane(const SpectroTensor& spec, MicPair pair, int max_lag) {
    const LagMatrix g = gcc_phat(spec, pair, max_lag);
    FeaturePlane out(spec.frames(), spec.bins(), PlaneKind::GCCPHAT);
    const int lags = g.lags();
    for (int t = 0; t < g.frames; ++t) {
        const double* row = g.values.data() + static_cast<std::size_t>(t) * lags;
        for (int f = 0; f < spec.bins(); ++f) {
            const double pos = spec.bins() > 1 ? static_cast<double>(f) * (lags - 1) / (spec.bins() - 1) : 0.0;
            const int lo = std::min(static_cast<int>(pos), lags - 1);
            const int hi = std::min(lo + 1, lags - 1);
            const double frac = pos - lo;
            out.at(t, f) = row[lo] * (1.0 - frac) + row[hi] * frac;
        }
    }
    return out;
}

}  // namespace regiontag
