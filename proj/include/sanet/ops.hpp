#pragma once

#include "sanet/tensor.hpp"

namespace sanet {

/// 2D cross-correlation of a C_in x H x W input with C_out x C_in x kh x kw
/// weights and an optional bias of shape {C_out}. Output extents
/// (H + 2*padding - kh)/stride + 1 must be integral and positive,
/// otherwise ConfigError. Differentiable w.r.t. input, weights and bias.
Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int stride = 1, int padding = 0);

/// Elementwise max(x, 0). Backward passes the gradient where x > 0.
Tensor relu(const Tensor& x);

/// Bilinear upsampling of C x H x W by an integer factor >= 1
/// (align-corners = false: sample centers at (o + 0.5)/factor - 0.5,
/// clamped to the input range).
Tensor upsample_bilinear(const Tensor& x, int factor);

Tensor add(const Tensor& a, const Tensor& b);
/// Elementwise product of same-shape tensors.
Tensor mul(const Tensor& a, const Tensor& b);
Tensor scale(const Tensor& x, double factor);
/// Sum of all entries as a one-element tensor.
Tensor sum_all(const Tensor& x);

/// C x H x W -> C x W x H.
Tensor transpose_hw(const Tensor& x);

/// Zero-pads rows at the bottom and columns at the right.
Tensor pad_bottom_right(const Tensor& x, int pad_h, int pad_w);

/// Keeps the top-left out_h x out_w window of each channel.
Tensor crop_top_left(const Tensor& x, int out_h, int out_w);

namespace detail {

/// conv2d with floor output-size semantics: out = floor((H+2p-k)/s) + 1.
/// Equivalent to a stride-1 convolution followed by stride-fold decimation;
/// used by the backbone's downsampling stages where strict divisibility
/// cannot hold for even extents.
Tensor conv2d_floor(const Tensor& input, const Tensor& weights,
                    const Tensor& bias, int stride, int padding);

}  // namespace detail

}  // namespace sanet
