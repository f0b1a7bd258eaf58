#pragma once

#include <cstdint>
#include <vector>

#include "sanet/errors.hpp"

namespace sanet {

/// Per-pixel class labels: 0 = background, 1..4 = lanes.
struct ClassMask {
  int height = 0;
  int width = 0;
  std::vector<uint8_t> values;  // row-major, height * width

  ClassMask() = default;
  ClassMask(int h, int w) : height(h), width(w) {
    if (h <= 0 || w <= 0) throw DimensionError("ClassMask: extents must be positive");
    values.assign(static_cast<size_t>(h) * w, 0);
  }

  uint8_t at(int y, int x) const {
    return values[static_cast<size_t>(y) * width + x];
  }
  uint8_t& at(int y, int x) {
    return values[static_cast<size_t>(y) * width + x];
  }
  long long numel() const { return static_cast<long long>(height) * width; }

  bool operator==(const ClassMask& other) const = default;
};

}  // namespace sanet
