#pragma once

#include <array>
#include <string>
#include <vector>

#include "sanet/mask.hpp"
#include "sanet/slice_conv.hpp"
#include "sanet/tensor.hpp"

namespace sanet {

/// Small feature extractor: six 3x3 convolutions with ReLU, two of them
/// downsampling by stride 2 (output stride 4).
struct BackboneConfig {
  std::array<int, 3> stage_channels = {16, 32, 64};
};

struct SanetConfig {
  BackboneConfig backbone{};
  int n_classes = 5;
  int msc_kernel_size = 9;
  /// Ordered list of active directional passes; both membership and the
  /// serial order are taken from it. Empty = no slice-convolution module.
  std::vector<Direction> msc_directions{kCanonicalDirections.begin(),
                                        kCanonicalDirections.end()};
};

struct ConvLayer {
  Parameter weight;  // C_out x C_in x 3 x 3
  Parameter bias;    // C_out
  int stride = 1;
};

/// All trainable state of one network.
struct SanetParams {
  SanetConfig config;
  std::vector<ConvLayer> backbone;
  MscParams msc;
  Parameter head_weight;  // n_classes x C x 1 x 1
  Parameter head_bias;    // n_classes

  /// Stable enumeration (backbone, msc stages, head); names are unique.
  std::vector<Parameter> parameters() const;
  /// Deep copy (cloned tensors).
  SanetParams clone() const;
};

/// Fan-in scaled uniform init (bound = sqrt(1/fan_in)); biases zero; slice
/// kernels scaled down by 1e-2 so the early recurrence stays near identity.
SanetParams init_sanet(const SanetConfig& config, uint64_t seed);

/// image (1 x H x W, H,W >= 8) -> features (C x ceil(H/4) x ceil(W/4)).
/// Inputs are zero-padded at the bottom/right to a multiple of 4 first.
Tensor backbone_forward(const Tensor& image, const SanetParams& params);

/// Full pipeline: backbone -> slice-convolution module -> 1x1 head ->
/// 4x bilinear upsampling, cropped back to H x W. Returns unnormalized
/// logits of shape n_classes x H x W.
Tensor sanet_forward(const Tensor& image, const SanetParams& params);

/// Per-pixel argmax; ties break toward the smaller class index.
ClassMask predict_mask(const Tensor& logits);

}  // namespace sanet
