#pragma once

#include <string>
#include <vector>

#include "sanet/image_io.hpp"
#include "sanet/mask.hpp"
#include "sanet/tensor.hpp"

namespace sanet {

struct Sample {
  std::string name;
  Tensor image;  // 1 x H x W, values in [0, 1]
  ClassMask mask;
};

using Dataset = std::vector<Sample>;

/// Converts an 8-bit image to a 1xHxW tensor scaled to [0, 1].
Tensor image_to_tensor(const GrayImage& image);

/// Loads `dir`/images/*.png|*.pgm with matching masks from `dir`/masks/,
/// ordered by file name. Mask values must be < n_classes.
Dataset load_dataset(const std::string& dir, int n_classes = 5);

}  // namespace sanet
