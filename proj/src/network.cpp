#include "sanet/network.hpp"

#include <cmath>

#include "sanet/ops.hpp"

namespace sanet {
namespace {

Tensor uniform_fan_in(std::vector<int> shape, long long fan_in, Rng& rng,
                      double scale = 1.0) {
  const double bound = scale / std::sqrt(static_cast<double>(fan_in));
  return Tensor::uniform(std::move(shape), -bound, bound, rng,
                         /*requires_grad=*/true);
}

}  // namespace

std::vector<Parameter> SanetParams::parameters() const {
  std::vector<Parameter> all;
  for (size_t i = 0; i < backbone.size(); ++i) {
    all.push_back(backbone[i].weight);
    all.push_back(backbone[i].bias);
  }
  for (const auto& [dir, kernel] : msc.stages)
    all.push_back(Parameter{
        "msc." + std::string(direction_token(dir)) + ".weight", kernel.weights});
  all.push_back(head_weight);
  all.push_back(head_bias);
  return all;
}

SanetParams SanetParams::clone() const {
  SanetParams copy;
  copy.config = config;
  for (const auto& layer : backbone)
    copy.backbone.push_back(
        ConvLayer{Parameter{layer.weight.name, layer.weight.value.clone(true)},
                  Parameter{layer.bias.name, layer.bias.value.clone(true)},
                  layer.stride});
  for (const auto& [dir, kernel] : msc.stages)
    copy.msc.stages.emplace_back(
        dir, SliceKernel{kernel.family, kernel.weights.clone(true)});
  copy.head_weight = Parameter{head_weight.name, head_weight.value.clone(true)};
  copy.head_bias = Parameter{head_bias.name, head_bias.value.clone(true)};
  return copy;
}

SanetParams init_sanet(const SanetConfig& config, uint64_t seed) {
  if (config.n_classes < 2)
    throw ConfigError("init_sanet: need at least two classes");
  Rng rng = Rng(seed).split(0);

  SanetParams params;
  params.config = config;
  const auto& stages = config.backbone.stage_channels;
  // (in, out, stride) per conv; two stride-2 stages give output stride 4.
  const std::array<std::array<int, 3>, 6> plan = {{
      {1, stages[0], 1},
      {stages[0], stages[0], 1},
      {stages[0], stages[1], 2},
      {stages[1], stages[1], 1},
      {stages[1], stages[2], 2},
      {stages[2], stages[2], 1},
  }};
  for (size_t i = 0; i < plan.size(); ++i) {
    const int c_in = plan[i][0], c_out = plan[i][1], stride = plan[i][2];
    const std::string base = "backbone.conv" + std::to_string(i);
    ConvLayer layer;
    layer.weight = Parameter{
        base + ".weight",
        uniform_fan_in({c_out, c_in, 3, 3}, static_cast<long long>(c_in) * 9, rng)};
    layer.bias = Parameter{base + ".bias",
                           Tensor::zeros({c_out}, /*requires_grad=*/true)};
    layer.stride = stride;
    params.backbone.push_back(std::move(layer));
  }

  params.msc = init_msc(stages[2], config.msc_kernel_size,
                        config.msc_directions, rng, /*init_scale=*/0.01);

  params.head_weight =
      Parameter{"head.weight", uniform_fan_in({config.n_classes, stages[2], 1, 1},
                                              stages[2], rng)};
  params.head_bias = Parameter{
      "head.bias", Tensor::zeros({config.n_classes}, /*requires_grad=*/true)};
  return params;
}

Tensor backbone_forward(const Tensor& image, const SanetParams& params) {
  if (!image.defined() || image.rank() != 3 || image.dim(0) != 1)
    throw DimensionError("backbone_forward: image must be 1xHxW");
  const int h = image.dim(1), w = image.dim(2);
  if (h < 8 || w < 8)
    throw DimensionError("backbone_forward: input extents must be >= 8");

  Tensor x = image;
  const int pad_h = (4 - h % 4) % 4;
  const int pad_w = (4 - w % 4) % 4;
  if (pad_h || pad_w) x = pad_bottom_right(x, pad_h, pad_w);

  for (const auto& layer : params.backbone) {
    x = layer.stride == 1
            ? conv2d(x, layer.weight.value, layer.bias.value, 1, 1)
            : detail::conv2d_floor(x, layer.weight.value, layer.bias.value,
                                   layer.stride, 1);
    x = relu(x);
  }
  return x;
}

Tensor sanet_forward(const Tensor& image, const SanetParams& params) {
  const int h = image.dim(1), w = image.dim(2);
  Tensor features = backbone_forward(image, params);
  features = msc_forward(features, params.msc);
  Tensor logits =
      conv2d(features, params.head_weight.value, params.head_bias.value, 1, 0);
  logits = upsample_bilinear(logits, 4);
  if (logits.dim(1) != h || logits.dim(2) != w)
    logits = crop_top_left(logits, h, w);
  return logits;
}

ClassMask predict_mask(const Tensor& logits) {
  if (!logits.defined() || logits.rank() != 3)
    throw DimensionError("predict_mask: logits must be CxHxW");
  const int c = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  ClassMask mask(h, w);
  const long long hw = static_cast<long long>(h) * w;
  for (long long i = 0; i < hw; ++i) {
    int best = 0;
    double best_v = logits.data()[i];
    for (int cls = 1; cls < c; ++cls) {
      const double v = logits.data()[cls * hw + i];
      if (v > best_v) {
        best_v = v;
        best = cls;
      }
    }
    mask.values[static_cast<size_t>(i)] = static_cast<uint8_t>(best);
  }
  return mask;
}

}  // namespace sanet
