#pragma once

#include <span>
#include <vector>

namespace regiontag::kernels {

/// Activation layout: channel-major, row-major within a channel ([C][H][W]).
struct Shape3 {
    int channels = 0;
    int height = 0;
    int width = 0;
    std::size_t size() const { return static_cast<std::size_t>(channels) * height * width; }
    std::size_t plane() const { return static_cast<std::size_t>(height) * width; }
};

/// 3x3, stride 1, zero padding 1 convolution via im2col + GEMM. Writes the
/// im2col matrix ((Cin*9) x (H*W)) into `cols` for reuse by the backward pass.
/// weight: [Cout][Cin][3][3], bias: [Cout], out: [Cout][H][W].
template <typename T>
void conv3x3_forward(std::span<const T> in, Shape3 shape, std::span<const T> weight, std::span<const T> bias,
                     int out_channels, std::span<T> out, std::vector<T>& cols);

/// Gradients of the convolution given d(out). Accumulates into d_weight and d_bias;
/// writes d_in when it is non-empty.
template <typename T>
void conv3x3_backward(std::span<const T> cols, Shape3 shape, std::span<const T> weight, int out_channels,
                      std::span<const T> d_out, std::span<T> d_weight, std::span<T> d_bias, std::span<T> d_in);

/// Naive seven-loop convolution kept as the reference for conv3x3_forward.
template <typename T>
void conv3x3_forward_reference(std::span<const T> in, Shape3 shape, std::span<const T> weight,
                               std::span<const T> bias, int out_channels, std::span<T> out);

/// 2x2 average pooling, floor semantics (an odd trailing row/column is dropped).
template <typename T>
void avgpool2_forward(std::span<const T> in, Shape3 shape, std::span<T> out);
template <typename T>
void avgpool2_backward(std::span<const T> d_out, Shape3 in_shape, std::span<T> d_in);

inline Shape3 pooled(Shape3 s) { return {s.channels, s.height / 2, s.width / 2}; }

}  // namespace regiontag::kernels
