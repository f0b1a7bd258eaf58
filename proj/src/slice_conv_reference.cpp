#include "sanet/slice_conv.hpp"

#include <vector>

namespace sanet {
namespace {

// A slice is C x E: row i of the tensor for the vertical family (E = W),
// column j for the horizontal family (E = H).
std::vector<double> read_slice(const Tensor& t, SliceFamily family, int idx) {
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  const int extent = family == SliceFamily::kVertical ? w : h;
  std::vector<double> slice(static_cast<size_t>(c) * extent);
  for (int ch = 0; ch < c; ++ch)
    for (int e = 0; e < extent; ++e)
      slice[static_cast<size_t>(ch) * extent + e] =
          family == SliceFamily::kVertical ? t.at(ch, idx, e) : t.at(ch, e, idx);
  return slice;
}

void write_slice(Tensor& t, SliceFamily family, int idx,
                 const std::vector<double>& slice) {
  const int c = t.dim(0), h = t.dim(1), w = t.dim(2);
  const int extent = family == SliceFamily::kVertical ? w : h;
  for (int ch = 0; ch < c; ++ch)
    for (int e = 0; e < extent; ++e) {
      if (family == SliceFamily::kVertical)
        t.at(ch, idx, e) = slice[static_cast<size_t>(ch) * extent + e];
      else
        t.at(ch, e, idx) = slice[static_cast<size_t>(ch) * extent + e];
    }
}

// Within-slice C -> C convolution with zero padding, then ReLU.
std::vector<double> convolve_relu(const std::vector<double>& slice,
                                  const Tensor& weights, int extent) {
  const int c = weights.dim(0);
  const int k = weights.dim(2);
  const int pad = (k - 1) / 2;
  std::vector<double> msg(static_cast<size_t>(c) * extent, 0.0);
  for (int oc = 0; oc < c; ++oc)
    for (int e = 0; e < extent; ++e) {
      double acc = 0.0;
      for (int ic = 0; ic < c; ++ic)
        for (int dk = 0; dk < k; ++dk) {
          const int src = e + dk - pad;
          if (src < 0 || src >= extent) continue;
          acc += weights.at(oc, ic, dk) *
                 slice[static_cast<size_t>(ic) * extent + src];
        }
      msg[static_cast<size_t>(oc) * extent + e] = acc > 0.0 ? acc : 0.0;
    }
  return msg;
}

// One-pixel lateral shift of the message along the within-slice axis;
// the overflow entry is dropped and the vacated end zero-filled.
std::vector<double> shift(const std::vector<double>& msg, int extent,
                          int delta) {
  if (delta == 0) return msg;
  const int c = static_cast<int>(msg.size()) / extent;
  std::vector<double> shifted(msg.size(), 0.0);
  for (int ch = 0; ch < c; ++ch)
    for (int e = 0; e < extent; ++e) {
      const int from = e - delta;
      if (from < 0 || from >= extent) continue;
      shifted[static_cast<size_t>(ch) * extent + e] =
          msg[static_cast<size_t>(ch) * extent + from];
    }
  return shifted;
}

}  // namespace

Tensor slice_conv_reference(const Tensor& x, const SliceKernel& kernel,
                            Direction dir) {
  if (!x.defined() || x.rank() != 3)
    throw DimensionError("slice_conv_reference: input must be CxHxW");
  if (family_of(dir) != kernel.family)
    throw ConfigError("slice_conv_reference: kernel family does not match direction");
  if (kernel.weights.dim(0) != x.dim(0))
    throw DimensionError("slice_conv_reference: channel mismatch");

  const SliceFamily family = kernel.family;
  const int h = x.dim(1), w = x.dim(2);
  const int slices = family == SliceFamily::kVertical ? h : w;
  const int extent = family == SliceFamily::kVertical ? w : h;

  std::vector<int> order(static_cast<size_t>(slices));
  bool forward_order = true;
  int delta = 0;
  switch (dir) {
    case Direction::kVerticalDown: break;
    case Direction::kVerticalUp: forward_order = false; break;
    case Direction::kMainDiagDown: delta = 1; break;
    case Direction::kMainDiagUp: forward_order = false; delta = -1; break;
    case Direction::kHorizontalRight: break;
    case Direction::kHorizontalLeft: forward_order = false; break;
    case Direction::kCounterDiagDown: forward_order = false; delta = 1; break;
    case Direction::kCounterDiagUp: delta = -1; break;
  }
  for (int i = 0; i < slices; ++i)
    order[static_cast<size_t>(i)] = forward_order ? i : slices - 1 - i;

  Tensor out = x.clone();
  for (int step = 1; step < slices; ++step) {
    const auto prev = read_slice(out, family, order[static_cast<size_t>(step - 1)]);
    auto msg = convolve_relu(prev, kernel.weights, extent);
    msg = shift(msg, extent, delta);
    auto cur = read_slice(x, family, order[static_cast<size_t>(step)]);
    for (size_t i = 0; i < cur.size(); ++i) cur[i] += msg[i];
    write_slice(out, family, order[static_cast<size_t>(step)], cur);
  }
  return out;
}

}  // namespace sanet
