#include "regiontag/nn_kernels.hpp"

#include <Eigen/Dense>

#include <algorithm>

#include "regiontag/error.hpp"

namespace regiontag::kernels {

namespace {

template <typename T>
using RowMat = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
template <typename T>
using MapMat = Eigen::Map<RowMat<T>>;
template <typename T>
using ConstMapMat = Eigen::Map<const RowMat<T>>;

template <typename T>
void im2col(std::span<const T> in, Shape3 s, std::vector<T>& cols) {
    const int h = s.height;
    const int w = s.width;
    const std::size_t hw = s.plane();
    cols.assign(static_cast<std::size_t>(s.channels) * 9 * hw, T(0));
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < s.channels; ++ci) {
        const T* src = in.data() + ci * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                T* dst = cols.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                const int dy = ky - 1;
                const int dx = kx - 1;
                const int x0 = std::max(0, -dx);
                const int x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    const T* row = src + static_cast<std::size_t>(y + dy) * w + dx;
                    T* out = dst + static_cast<std::size_t>(y) * w;
                    std::copy(row + x0, row + x1, out + x0);
                }
            }
        }
    }
}

template <typename T>
void col2im(const RowMat<T>& d_cols, Shape3 s, std::span<T> d_in) {
    const int h = s.height;
    const int w = s.width;
    const std::size_t hw = s.plane();
    std::fill(d_in.begin(), d_in.end(), T(0));
#pragma omp parallel for schedule(static)
    for (int ci = 0; ci < s.channels; ++ci) {
        T* dst = d_in.data() + ci * hw;
        for (int ky = 0; ky < 3; ++ky) {
            for (int kx = 0; kx < 3; ++kx) {
                const T* src = d_cols.data() + (static_cast<std::size_t>(ci) * 9 + ky * 3 + kx) * hw;
                const int dy = ky - 1;
                const int dx = kx - 1;
                const int x0 = std::max(0, -dx);
                const int x1 = std::min(w, w - dx);
                for (int y = std::max(0, -dy); y < std::min(h, h - dy); ++y) {
                    T* row = dst + static_cast<std::size_t>(y + dy) * w + dx;
                    const T* g = src + static_cast<std::size_t>(y) * w;
                    for (int x = x0; x < x1; ++x) row[x] += g[x];
                }
            }
        }
    }
}

}  // namespace

template <typename T>
void conv3x3_forward(std::span<const T> in, Shape3 shape, std::span<const T> weight, std::span<const T> bias,
                     int out_channels, std::span<T> out, std::vector<T>& cols) {
    const auto k = static_cast<Eigen::Index>(shape.channels) * 9;
    const auto hw = static_cast<Eigen::Index>(shape.plane());
    if (in.size() != shape.size() || weight.size() != static_cast<std::size_t>(out_channels * k) ||
        bias.size() != static_cast<std::size_t>(out_channels) || out.size() != static_cast<std::size_t>(out_channels * hw)) {
        internal_error("conv3x3_forward: shape mismatch");
    }
    im2col(in, shape, cols);
    ConstMapMat<T> w(weight.data(), out_channels, k);
    ConstMapMat<T> c(cols.data(), k, hw);
    MapMat<T> o(out.data(), out_channels, hw);
    o.noalias() = w * c;
    for (int co = 0; co < out_channels; ++co) o.row(co).array() += bias[static_cast<std::size_t>(co)];
}

template <typename T>
void conv3x3_backward(std::span<const T> cols, Shape3 shape, std::span<const T> weight, int out_channels,
                      std::span<const T> d_out, std::span<T> d_weight, std::span<T> d_bias, std::span<T> d_in) {
    const auto k = static_cast<Eigen::Index>(shape.channels) * 9;
    const auto hw = static_cast<Eigen::Index>(shape.plane());
    ConstMapMat<T> c(cols.data(), k, hw);
    ConstMapMat<T> dout(d_out.data(), out_channels, hw);
    MapMat<T> dw(d_weight.data(), out_channels, k);
    dw.noalias() += dout * c.transpose();
    // plain loop: Eigen's vectorised sum peels by pointer alignment, which breaks run-to-run equality
    for (int co = 0; co < out_channels; ++co) {
        T acc = 0;
        const T* row = d_out.data() + co * hw;
        for (Eigen::Index i = 0; i < hw; ++i) acc += row[i];
        d_bias[static_cast<std::size_t>(co)] += acc;
    }
    if (!d_in.empty()) {
        ConstMapMat<T> w(weight.data(), out_channels, k);
        const RowMat<T> d_cols = w.transpose() * dout;
        col2im<T>(d_cols, shape, d_in);
    }
}

template <typename T>
void conv3x3_forward_reference(std::span<const T> in, Shape3 s, std::span<const T> weight, std::span<const T> bias,
                               int out_channels, std::span<T> out) {
    for (int co = 0; co < out_channels; ++co) {
        for (int y = 0; y < s.height; ++y) {
            for (int x = 0; x < s.width; ++x) {
                T acc = bias[static_cast<std::size_t>(co)];
                for (int ci = 0; ci < s.channels; ++ci) {
                    for (int ky = 0; ky < 3; ++ky) {
                        for (int kx = 0; kx < 3; ++kx) {
                            const int yy = y + ky - 1;
                            const int xx = x + kx - 1;
                            if (yy < 0 || yy >= s.height || xx < 0 || xx >= s.width) continue;
                            acc += weight[((static_cast<std::size_t>(co) * s.channels + ci) * 3 + ky) * 3 + kx] *
                                   in[(static_cast<std::size_t>(ci) * s.height + yy) * s.width + xx];
                        }
                    }
                }
                out[(static_cast<std::size_t>(co) * s.height + y) * s.width + x] = acc;
            }
        }
    }
}

template <typename T>
void avgpool2_forward(std::span<const T> in, Shape3 s, std::span<T> out) {
    const Shape3 p = pooled(s);
    for (int c = 0; c < s.channels; ++c) {
        const T* src = in.data() + c * s.plane();
        T* dst = out.data() + c * p.plane();
        for (int y = 0; y < p.height; ++y) {
            const T* r0 = src + static_cast<std::size_t>(2 * y) * s.width;
            const T* r1 = r0 + s.width;
            for (int x = 0; x < p.width; ++x) {
                dst[static_cast<std::size_t>(y) * p.width + x] =
                    T(0.25) * (r0[2 * x] + r0[2 * x + 1] + r1[2 * x] + r1[2 * x + 1]);
            }
        }
    }
}

template <typename T>
void avgpool2_backward(std::span<const T> d_out, Shape3 s, std::span<T> d_in) {
    const Shape3 p = pooled(s);
    std::fill(d_in.begin(), d_in.end(), T(0));
    for (int c = 0; c < s.channels; ++c) {
        const T* src = d_out.data() + c * p.plane();
        T* dst = d_in.data() + c * s.plane();
        for (int y = 0; y < p.height; ++y) {
            T* r0 = dst + static_cast<std::size_t>(2 * y) * s.width;
            T* r1 = r0 + s.width;
            for (int x = 0; x < p.width; ++x) {
                const T g = T(0.25) * src[static_cast<std::size_t>(y) * p.width + x];
                r0[2 * x] = g;
                r0[2 * x + 1] = g;
                r1[2 * x] = g;
                r1[2 * x + 1] = g;
            }
        }
    }
}

#define REGIONTAG_INSTANTIATE(T)                                                                                   \
    template void conv3x3_forward<T>(std::span<const T>, Shape3, std::span<const T>, std::span<const T>, int,      \
                                     std::span<T>, std::vector<T>&);                                              \
    template void conv3x3_backward<T>(std::span<const T>, Shape3, std::span<const T>, int, std::span<const T>,     \
                                      std::span<T>, std::span<T>, std::span<T>);                                  \
    template void conv3x3_forward_reference<T>(std::span<const T>, Shape3, std::span<const T>, std::span<const T>, \
                                               int, std::span<T>);                                                \
    template void avgpool2_forward<T>(std::span<const T>, Shape3, std::span<T>);                                   \
    template void avgpool2_backward<T>(std::span<const T>, Shape3, std::span<T>);

REGIONTAG_INSTANTIATE(float)
REGIONTAG_INSTANTIATE(double)

#undef REGIONTAG_INSTANTIATE

}  // namespace regiontag::kernels
