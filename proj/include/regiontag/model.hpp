#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "regiontag/scene.hpp"
#include "regiontag/tensor.hpp"

namespace regiontag {

enum class EmbeddingKind : std::uint8_t { None = 0, Angle = 1, Distance = 2 };

struct ModelConfig {
    int input_planes = 1;                ///< k stacked feature planes (embedding channel excluded)
    EmbeddingKind embedding = EmbeddingKind::None;
    std::array<int, 3> widths{16, 32, 64};
    int num_classes = kNumClasses;
    int embed_dim = 16;
    double angle_resolution = 5.0;       ///< degrees per angle-table row

    int conv_input_channels() const { return input_planes + (embedding == EmbeddingKind::None ? 0 : 1); }
    int angle_rows() const;
    bool operator==(const ModelConfig&) const = default;
};

/// k x T x F input planes, plane-major.
template <typename T>
struct FeatureStack {
    int planes = 0;
    int frames = 0;
    int bins = 0;
    std::vector<T> values;

    FeatureStack() = default;
    FeatureStack(int planes_, int frames_, int bins_)
        : planes(planes_), frames(frames_), bins(bins_),
          values(static_cast<std::size_t>(planes_) * frames_ * bins_, T(0)) {}
    T* plane(int p) { return values.data() + static_cast<std::size_t>(p) * frames * bins; }
    const T* plane(int p) const { return values.data() + static_cast<std::size_t>(p) * frames * bins; }
};

/// Query side input for the learned embeddings.
struct Conditioning {
    std::optional<double> azimuth;   ///< middle azimuth of the angular query, degrees
    std::optional<double> distance;  ///< queried distance, meters
};

/// Input standardization stored alongside the weights.
struct Normalization {
    std::vector<double> plane_mean;  ///< per stacked plane
    std::vector<double> plane_std;
    double distance_mean = 0.0;
    double distance_std = 1.0;
    bool operator==(const Normalization&) const = default;
};

inline constexpr double kProbClamp = 1e-7;

/// Mean over classes of binary cross-entropy with probabilities clamped to [1e-7, 1 - 1e-7].
double bce_loss(std::span<const double> probs, std::span<const double> targets);

/// Three (3x3 conv, bias, ReLU, 2x2 average pool) blocks, global mean pooling and an
/// affine head to per-class sigmoids. An optional learned angle or distance embedding
/// is tiled along frequency, repeated along time, and stacked as one extra channel.
template <typename T>
class CompactCnn {
public:
    CompactCnn() = default;
    /// All parameters zero.
    explicit CompactCnn(const ModelConfig& config);
    /// He-normal conv/affine weights, zero biases, N(0, 0.1) embedding rows.
    static CompactCnn initialized(const ModelConfig& config, std::uint64_t seed);

    const ModelConfig& config() const { return config_; }
    NamedTensors<T>& parameters() { return params_; }
    const NamedTensors<T>& parameters() const { return params_; }
    Normalization& normalization() { return norm_; }
    const Normalization& normalization() const { return norm_; }

    /// Per-class logits / probabilities. Throws Error(Usage) on shape or conditioning mismatch.
    std::vector<T> logits(const FeatureStack<T>& input, const Conditioning& cond) const;
    std::vector<T> forward(const FeatureStack<T>& input, const Conditioning& cond) const;

    /// Loss (as bce_loss) for one example; adds d(loss)/d(param) into `grads`, which must
    /// have the layout of parameters().
    T backward(const FeatureStack<T>& input, const Conditioning& cond, std::span<const T> targets,
               NamedTensors<T>& grads) const;

    /// Row of the angle table used for an azimuth.
    int angle_row(double azimuth_deg) const;

    /// Converts parameters to another scalar type (e.g. float weights to double for checks).
    template <typename U>
    CompactCnn<U> cast() const {
        CompactCnn<U> out(config_);
        for (std::size_t i = 0; i < params_.size(); ++i) {
            const auto& src = params_[i].second.data;
            auto& dst = out.parameters()[i].second.data;
            for (std::size_t j = 0; j < src.size(); ++j) dst[j] = static_cast<U>(src[j]);
        }
        out.normalization() = norm_;
        return out;
    }

private:
    struct Trace;
    std::vector<T> run(const FeatureStack<T>& input, const Conditioning& cond, Trace* trace) const;

    ModelConfig config_;
    NamedTensors<T> params_;
    Normalization norm_;
};

extern template class CompactCnn<float>;
extern template class CompactCnn<double>;

template <typename T>
struct AdamState {
    NamedTensors<T> first_moment;
    NamedTensors<T> second_moment;
    long step = 0;

    static AdamState for_parameters(const NamedTensors<T>& params) {
        return {params.zeros_like(), params.zeros_like(), 0};
    }
};

struct AdamConfig {
    double learning_rate = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Bias-corrected Adam update of every tensor in `params`.
template <typename T>
void adam_step(NamedTensors<T>& params, const NamedTensors<T>& grads, AdamState<T>& state, const AdamConfig& config);

/// Checkpoint: "RTCK" | u32 version | u32 meta_len | meta (JSON text) | u32 n |
/// n x (u16 name_len | name | u8 ndim | u32 dims[ndim] | f32 payload). Model config and
/// normalization travel in the metadata; `extra_metadata` is stored verbatim under "extra".
void save_checkpoint(const std::string& path, const CompactCnn<float>& model, const std::string& extra_metadata);

struct Checkpoint {
    CompactCnn<float> model;
    std::string extra_metadata;
};
Checkpoint load_checkpoint(const std::string& path);

}  // namespace regiontag
