#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "sanet/tensor.hpp"

namespace sanet {

/// Propagation directions of the eight slice-convolution passes. The token
/// letters name the direction of travel: d = down, u = up, l = left,
/// r = right.
enum class Direction {
  kVerticalDown,      // vd: top -> bottom
  kVerticalUp,        // vu: bottom -> top
  kHorizontalRight,   // hr: left -> right
  kHorizontalLeft,    // hl: right -> left
  kMainDiagDown,      // mdd: upper-left -> lower-right
  kMainDiagUp,        // mdu: lower-right -> upper-left
  kCounterDiagDown,   // cdd: upper-right -> lower-left
  kCounterDiagUp,     // cdu: lower-left -> upper-right
};

/// Serial order the full module applies its passes in.
constexpr std::array<Direction, 8> kCanonicalDirections = {
    Direction::kVerticalDown,    Direction::kVerticalUp,
    Direction::kHorizontalRight, Direction::kHorizontalLeft,
    Direction::kMainDiagDown,    Direction::kMainDiagUp,
    Direction::kCounterDiagDown, Direction::kCounterDiagUp,
};

/// Vertical-family passes slice along H (slices of shape C x 1 x W);
/// horizontal-family passes slice along W (slices of shape C x H x 1).
enum class SliceFamily { kVertical, kHorizontal };

SliceFamily family_of(Direction dir);
std::string_view direction_token(Direction dir);
Direction parse_direction(std::string_view token);
/// Parses a comma-separated token list, e.g. "vd,vu,mdd". Duplicates are
/// rejected.
std::vector<Direction> parse_direction_list(std::string_view csv);

/// Weights of one directional pass: a C x C x k within-slice convolution
/// shared across all slices, k odd, no bias. The spatial extent runs along
/// W for the vertical family and along H for the horizontal family.
struct SliceKernel {
  SliceFamily family = SliceFamily::kVertical;
  Tensor weights;  // C_out x C_in x k
};

/// Validates shape and family; throws ConfigError/DimensionError.
SliceKernel make_slice_kernel(SliceFamily family, Tensor weights);

/// The multidirectional module: independent kernels applied in series in
/// `stages` order.
struct MscParams {
  std::vector<std::pair<Direction, SliceKernel>> stages;

  int channels() const;
};

/// Kernels drawn uniform in [-bound, bound] with
/// bound = init_scale / sqrt(C*k), one per direction in `order`.
MscParams init_msc(int channels, int kernel_size,
                   const std::vector<Direction>& order, Rng& rng,
                   double init_scale);

/// One directional pass over x (C x H x W): slices are visited in the
/// direction's travel order; each slice receives the ReLU-gated within-slice
/// convolution of the previously updated slice (shifted one pixel sideways
/// for the diagonal directions) added on top of its input values. The first
/// visited slice passes through unchanged. Output shape equals input shape.
Tensor directional_slice_conv(const Tensor& x, const SliceKernel& kernel,
                              Direction dir);

/// Message shift applied between consecutive slices. Identity for the
/// vertical/horizontal directions; the diagonal directions shift by one
/// pixel along the within-slice axis, dropping the overflow value and
/// zero-filling the vacated end. Differentiable.
Tensor shift_message(const Tensor& message, Direction dir);

/// Applies every stage of `params` in series.
Tensor msc_forward(const Tensor& x, const MscParams& params);

/// Independent oracle: a deliberately naive per-direction transcription of
/// the slice recurrence, sharing no code with directional_slice_conv.
Tensor slice_conv_reference(const Tensor& x, const SliceKernel& kernel,
                            Direction dir);

}  // namespace sanet
