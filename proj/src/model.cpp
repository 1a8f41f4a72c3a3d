#include "regiontag/model.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "regiontag/error.hpp"
#include "regiontag/geometry.hpp"
#include "regiontag/nn_kernels.hpp"

namespace regiontag {

using kernels::Shape3;

int ModelConfig::angle_rows() const {
    const long rows = std::lround(360.0 / angle_resolution);
    if (rows < 1 || std::abs(rows * angle_resolution - 360.0) > 1e-9) usage_error("angle resolution must divide 360");
    return static_cast<int>(rows);
}

double bce_loss(std::span<const double> probs, std::span<const double> targets) {
    if (probs.size() != targets.size() || probs.empty()) usage_error("bce_loss: size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kProbClamp, 1.0 - kProbClamp);
        sum -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
    }
    return sum / static_cast<double>(probs.size());
}

template <typename T>
struct CompactCnn<T>::Trace {
    std::array<Shape3, 3> in_shapes;
    std::array<std::vector<T>, 3> cols;
    std::array<std::vector<T>, 3> pre_activation;
    std::vector<T> pooled_mean;
    std::vector<T> logits;
    int angle_row = -1;
    T distance_z = T(0);
    std::vector<T> hidden_pre;
    std::vector<T> hidden;
};

template <typename T>
CompactCnn<T>::CompactCnn(const ModelConfig& config) : config_(config) {
    if (config.input_planes < 1) usage_error("model needs at least one input plane");
    int cin = config.conv_input_channels();
    for (int l = 0; l < 3; ++l) {
        const int cout = config.widths[static_cast<std::size_t>(l)];
        const std::string prefix = "conv" + std::to_string(l + 1);
        params_.add(prefix + ".weight", Tensor<T>({cout, cin, 3, 3}));
        params_.add(prefix + ".bias", Tensor<T>({cout}));
        cin = cout;
    }
    params_.add("head.weight", Tensor<T>({config.num_classes, cin}));
    params_.add("head.bias", Tensor<T>({config.num_classes}));
    const int h = config.embed_dim;
    if (config.embedding == EmbeddingKind::Angle) {
        params_.add("angle.table", Tensor<T>({config.angle_rows(), h}));
    } else if (config.embedding == EmbeddingKind::Distance) {
        params_.add("distance.fc1.weight", Tensor<T>({h, 1}));
        params_.add("distance.fc1.bias", Tensor<T>({h}));
        params_.add("distance.fc2.weight", Tensor<T>({h, h}));
        params_.add("distance.fc2.bias", Tensor<T>({h}));
    }
    norm_.plane_mean.assign(static_cast<std::size_t>(config.input_planes), 0.0);
    norm_.plane_std.assign(static_cast<std::size_t>(config.input_planes), 1.0);
}

template <typename T>
CompactCnn<T> CompactCnn<T>::initialized(const ModelConfig& config, std::uint64_t seed) {
    CompactCnn model(config);
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    for (auto& [name, t] : model.params_) {
        double stddev = 0.0;
        if (name.starts_with("conv") && name.ends_with(".weight")) {
            stddev = std::sqrt(2.0 / (t.shape[1] * 9.0));
        } else if (name.starts_with("distance.") && name.ends_with(".weight")) {
            stddev = std::sqrt(2.0 / t.shape[1]);
        } else if (name == "angle.table") {
            stddev = 0.1;
        }
        // head and biases start at zero so a fresh model outputs 0.5 everywhere
        for (auto& v : t.data) v = static_cast<T>(stddev * gauss(rng));
    }
    return model;
}

template <typename T>
int CompactCnn<T>::angle_row(double azimuth_deg) const {
    const int rows = config_.angle_rows();
    const double shifted = wrap_azimuth(azimuth_deg) + 180.0;
    return std::clamp(static_cast<int>(std::floor(shifted / config_.angle_resolution)), 0, rows - 1);
}

template <typename T>
std::vector<T> CompactCnn<T>::run(const FeatureStack<T>& input, const Conditioning& cond, Trace* trace) const {
    const ModelConfig& cfg = config_;
    if (input.planes != cfg.input_planes) {
        usage_error("model expects " + std::to_string(cfg.input_planes) + " feature planes, got " +
                    std::to_string(input.planes));
    }
    if (input.frames < 8 || input.bins < 8) usage_error("feature planes must be at least 8 x 8");
    if (input.values.size() != static_cast<std::size_t>(input.planes) * input.frames * input.bins) {
        usage_error("feature stack size mismatch");
    }
    Trace local;
    Trace& tr = trace ? *trace : local;

    // embedding vector
    const int h = cfg.embed_dim;
    std::vector<T> embed;
    if (cfg.embedding == EmbeddingKind::Angle) {
        if (!cond.azimuth) usage_error("model requires an angular query");
        tr.angle_row = angle_row(*cond.azimuth);
        const auto& table = params_.at("angle.table").data;
        embed.assign(table.begin() + static_cast<std::ptrdiff_t>(tr.angle_row) * h,
                     table.begin() + static_cast<std::ptrdiff_t>(tr.angle_row + 1) * h);
    } else if (cfg.embedding == EmbeddingKind::Distance) {
        if (!cond.distance) usage_error("model requires a distance query");
        tr.distance_z = static_cast<T>((*cond.distance - norm_.distance_mean) / norm_.distance_std);
        const auto& w1 = params_.at("distance.fc1.weight").data;
        const auto& b1 = params_.at("distance.fc1.bias").data;
        const auto& w2 = params_.at("distance.fc2.weight").data;
        const auto& b2 = params_.at("distance.fc2.bias").data;
        tr.hidden_pre.resize(static_cast<std::size_t>(h));
        tr.hidden.resize(static_cast<std::size_t>(h));
        for (int i = 0; i < h; ++i) {
            tr.hidden_pre[i] = w1[i] * tr.distance_z + b1[i];
            tr.hidden[i] = std::max(T(0), tr.hidden_pre[i]);
        }
        embed.assign(static_cast<std::size_t>(h), T(0));
        for (int i = 0; i < h; ++i) {
            T acc = b2[i];
            for (int j = 0; j < h; ++j) acc += w2[static_cast<std::size_t>(i) * h + j] * tr.hidden[j];
            embed[i] = acc;
        }
    }

    // stacked input
    Shape3 shape{cfg.conv_input_channels(), input.frames, input.bins};
    std::vector<T> x(shape.size());
    const std::size_t plane = shape.plane();
    for (int p = 0; p < input.planes; ++p) {
        const T mean = static_cast<T>(norm_.plane_mean[static_cast<std::size_t>(p)]);
        const T inv_std = static_cast<T>(1.0 / norm_.plane_std[static_cast<std::size_t>(p)]);
        const T* src = input.plane(p);
        T* dst = x.data() + p * plane;
        for (std::size_t i = 0; i < plane; ++i) dst[i] = (src[i] - mean) * inv_std;
    }
    if (!embed.empty()) {
        T* dst = x.data() + static_cast<std::size_t>(input.planes) * plane;
        for (int t = 0; t < input.frames; ++t) {
            for (int f = 0; f < input.bins; ++f) dst[static_cast<std::size_t>(t) * input.bins + f] = embed[f % h];
        }
    }

    for (int l = 0; l < 3; ++l) {
        const int cout = cfg.widths[static_cast<std::size_t>(l)];
        const std::string prefix = "conv" + std::to_string(l + 1);
        tr.in_shapes[l] = shape;
        auto& z = tr.pre_activation[l];
        z.resize(static_cast<std::size_t>(cout) * shape.plane());
        kernels::conv3x3_forward<T>(x, shape, params_.at(prefix + ".weight").data, params_.at(prefix + ".bias").data,
                                    cout, z, tr.cols[l]);
        std::vector<T> act(z.size());
        for (std::size_t i = 0; i < z.size(); ++i) act[i] = std::max(T(0), z[i]);
        const Shape3 out_shape{cout, shape.height, shape.width};
        shape = kernels::pooled(out_shape);
        x.assign(shape.size(), T(0));
        kernels::avgpool2_forward<T>(act, out_shape, x);
        if (shape.height == 0 || shape.width == 0) usage_error("feature planes too small for three pooling stages");
    }

    tr.pooled_mean.assign(static_cast<std::size_t>(shape.channels), T(0));
    const std::size_t final_plane = shape.plane();
    for (int c = 0; c < shape.channels; ++c) {
        T acc = 0;
        for (std::size_t i = 0; i < final_plane; ++i) acc += x[c * final_plane + i];
        tr.pooled_mean[c] = acc / static_cast<T>(final_plane);
    }
    const auto& hw = params_.at("head.weight").data;
    const auto& hb = params_.at("head.bias").data;
    tr.logits.assign(static_cast<std::size_t>(cfg.num_classes), T(0));
    for (int k = 0; k < cfg.num_classes; ++k) {
        T acc = hb[k];
        for (int c = 0; c < shape.channels; ++c) acc += hw[static_cast<std::size_t>(k) * shape.channels + c] * tr.pooled_mean[c];
        tr.logits[k] = acc;
    }
    return tr.logits;
}

template <typename T>
std::vector<T> CompactCnn<T>::logits(const FeatureStack<T>& input, const Conditioning& cond) const {
    return run(input, cond, nullptr);
}

template <typename T>
std::vector<T> CompactCnn<T>::forward(const FeatureStack<T>& input, const Conditioning& cond) const {
    std::vector<T> out = run(input, cond, nullptr);
    for (auto& v : out) v = T(1) / (T(1) + std::exp(-v));
    return out;
}

template <typename T>
T CompactCnn<T>::backward(const FeatureStack<T>& input, const Conditioning& cond, std::span<const T> targets,
                          NamedTensors<T>& grads) const {
    const ModelConfig& cfg = config_;
    if (targets.size() != static_cast<std::size_t>(cfg.num_classes)) usage_error("target vector size mismatch");
    Trace tr;
    const std::vector<T> logit = run(input, cond, &tr);

    // d loss / d logit for the clamped BCE
    const int classes = cfg.num_classes;
    std::vector<T> d_logit(static_cast<std::size_t>(classes));
    double loss = 0.0;
    for (int k = 0; k < classes; ++k) {
        const double p = 1.0 / (1.0 + std::exp(-static_cast<double>(logit[k])));
        const double t = static_cast<double>(targets[k]);
        const double pc = std::clamp(p, kProbClamp, 1.0 - kProbClamp);
        loss -= t * std::log(pc) + (1.0 - t) * std::log(1.0 - pc);
        const bool clamped = p < kProbClamp || p > 1.0 - kProbClamp;
        d_logit[k] = clamped ? T(0) : static_cast<T>((p - t) / classes);
    }
    loss /= classes;

    const int c_last = cfg.widths[2];
    const auto& hw = params_.at("head.weight").data;
    auto& g_hw = grads.at("head.weight").data;
    auto& g_hb = grads.at("head.bias").data;
    std::vector<T> d_mean(static_cast<std::size_t>(c_last), T(0));
    for (int k = 0; k < classes; ++k) {
        g_hb[k] += d_logit[k];
        for (int c = 0; c < c_last; ++c) {
            g_hw[static_cast<std::size_t>(k) * c_last + c] += d_logit[k] * tr.pooled_mean[c];
            d_mean[c] += hw[static_cast<std::size_t>(k) * c_last + c] * d_logit[k];
        }
    }

    // gradient w.r.t. the last pooled map
    Shape3 last_conv_out{c_last, tr.in_shapes[2].height, tr.in_shapes[2].width};
    Shape3 final_shape = kernels::pooled(last_conv_out);
    std::vector<T> d_x(final_shape.size());
    const T scale = T(1) / static_cast<T>(final_shape.plane());
    for (int c = 0; c < c_last; ++c) {
        std::fill_n(d_x.begin() + static_cast<std::ptrdiff_t>(c * final_shape.plane()), final_shape.plane(),
                    d_mean[c] * scale);
    }

    const bool need_input_grad = cfg.embedding != EmbeddingKind::None;
    for (int l = 2; l >= 0; --l) {
        const int cout = cfg.widths[static_cast<std::size_t>(l)];
        const Shape3 in_shape = tr.in_shapes[l];
        const Shape3 out_shape{cout, in_shape.height, in_shape.width};
        std::vector<T> d_z(out_shape.size());
        kernels::avgpool2_backward<T>(d_x, out_shape, d_z);
        const auto& z = tr.pre_activation[l];
        for (std::size_t i = 0; i < d_z.size(); ++i) {
            if (!(z[i] > T(0))) d_z[i] = T(0);
        }
        const std::string prefix = "conv" + std::to_string(l + 1);
        std::vector<T> d_in;
        if (l > 0 || need_input_grad) d_in.resize(in_shape.size());
        kernels::conv3x3_backward<T>(tr.cols[l], in_shape, params_.at(prefix + ".weight").data, cout, d_z,
                                     grads.at(prefix + ".weight").data, grads.at(prefix + ".bias").data, d_in);
        d_x = std::move(d_in);
    }

    if (need_input_grad) {
        const int h = cfg.embed_dim;
        std::vector<T> d_embed(static_cast<std::size_t>(h), T(0));
        const Shape3 in_shape = tr.in_shapes[0];
        const T* d_plane = d_x.data() + static_cast<std::size_t>(cfg.input_planes) * in_shape.plane();
        for (int t = 0; t < in_shape.height; ++t) {
            for (int f = 0; f < in_shape.width; ++f) d_embed[f % h] += d_plane[static_cast<std::size_t>(t) * in_shape.width + f];
        }
        if (cfg.embedding == EmbeddingKind::Angle) {
            auto& table = grads.at("angle.table").data;
            for (int j = 0; j < h; ++j) table[static_cast<std::size_t>(tr.angle_row) * h + j] += d_embed[j];
        } else {
            const auto& w2 = params_.at("distance.fc2.weight").data;
            auto& g_w1 = grads.at("distance.fc1.weight").data;
            auto& g_b1 = grads.at("distance.fc1.bias").data;
            auto& g_w2 = grads.at("distance.fc2.weight").data;
            auto& g_b2 = grads.at("distance.fc2.bias").data;
            std::vector<T> d_hidden(static_cast<std::size_t>(h), T(0));
            for (int i = 0; i < h; ++i) {
                g_b2[i] += d_embed[i];
                for (int j = 0; j < h; ++j) {
                    g_w2[static_cast<std::size_t>(i) * h + j] += d_embed[i] * tr.hidden[j];
                    d_hidden[j] += w2[static_cast<std::size_t>(i) * h + j] * d_embed[i];
                }
            }
            for (int j = 0; j < h; ++j) {
                const T d_pre = tr.hidden_pre[j] > T(0) ? d_hidden[j] : T(0);
                g_w1[j] += d_pre * tr.distance_z;
                g_b1[j] += d_pre;
            }
        }
    }
    return static_cast<T>(loss);
}

template class CompactCnn<float>;
template class CompactCnn<double>;

template <typename T>
void adam_step(NamedTensors<T>& params, const NamedTensors<T>& grads, AdamState<T>& state, const AdamConfig& config) {
    if (params.size() != grads.size() || params.size() != state.first_moment.size()) {
        usage_error("adam_step: parameter/gradient layout mismatch");
    }
    ++state.step;
    const double c1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double c2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto& p = params[i].second.data;
        const auto& g = grads[i].second.data;
        auto& m = state.first_moment[i].second.data;
        auto& v = state.second_moment[i].second.data;
        if (p.size() != g.size()) usage_error("adam_step: tensor size mismatch for " + params[i].first);
        for (std::size_t j = 0; j < p.size(); ++j) {
            const double gj = static_cast<double>(g[j]);
            const double mj = config.beta1 * static_cast<double>(m[j]) + (1.0 - config.beta1) * gj;
            const double vj = config.beta2 * static_cast<double>(v[j]) + (1.0 - config.beta2) * gj * gj;
            m[j] = static_cast<T>(mj);
            v[j] = static_cast<T>(vj);
            const double update = config.learning_rate * (mj / c1) / (std::sqrt(vj / c2) + config.epsilon);
            p[j] = static_cast<T>(static_cast<double>(p[j]) - update);
        }
    }
}

template void adam_step<float>(NamedTensors<float>&, const NamedTensors<float>&, AdamState<float>&, const AdamConfig&);
template void adam_step<double>(NamedTensors<double>&, const NamedTensors<double>&, AdamState<double>&,
                                const AdamConfig&);

}  // namespace regiontag
