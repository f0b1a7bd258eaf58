#include "sanet/slice_conv.hpp"

#include <algorithm>
#include <cmath>
#include <iostream>
#include <vector>

#include "sanet/gemm.hpp"
#include "sanet/ops.hpp"

namespace sanet {

SliceFamily family_of(Direction dir) {
  switch (dir) {
    case Direction::kVerticalDown:
    case Direction::kVerticalUp:
    case Direction::kMainDiagDown:
    case Direction::kMainDiagUp:
      return SliceFamily::kVertical;
    default:
      return SliceFamily::kHorizontal;
  }
}

std::string_view direction_token(Direction dir) {
  switch (dir) {
    case Direction::kVerticalDown: return "vd";
    case Direction::kVerticalUp: return "vu";
    case Direction::kHorizontalRight: return "hr";
    case Direction::kHorizontalLeft: return "hl";
    case Direction::kMainDiagDown: return "mdd";
    case Direction::kMainDiagUp: return "mdu";
    case Direction::kCounterDiagDown: return "cdd";
    case Direction::kCounterDiagUp: return "cdu";
  }
  throw ContractError("direction_token: invalid direction");
}

Direction parse_direction(std::string_view token) {
  for (Direction dir : kCanonicalDirections)
    if (direction_token(dir) == token) return dir;
  throw ConfigError("unknown direction token: " + std::string(token));
}

std::vector<Direction> parse_direction_list(std::string_view csv) {
  std::vector<Direction> dirs;
  size_t pos = 0;
  while (pos <= csv.size()) {
    size_t comma = csv.find(',', pos);
    if (comma == std::string_view::npos) comma = csv.size();
    std::string_view token = csv.substr(pos, comma - pos);
    if (!token.empty()) {
      Direction dir = parse_direction(token);
      if (std::find(dirs.begin(), dirs.end(), dir) != dirs.end())
        throw ConfigError("duplicate direction token: " + std::string(token));
      dirs.push_back(dir);
    }
    pos = comma + 1;
  }
  return dirs;
}

SliceKernel make_slice_kernel(SliceFamily family, Tensor weights) {
  if (!weights.defined() || weights.rank() != 3)
    throw DimensionError("slice kernel weights must be C x C x k");
  if (weights.dim(0) != weights.dim(1))
    throw DimensionError("slice kernel must map C channels to C channels");
  if (weights.dim(2) % 2 == 0)
    throw ConfigError("slice kernel extent must be odd");
  return SliceKernel{family, std::move(weights)};
}

int MscParams::channels() const {
  return stages.empty() ? 0 : stages.front().second.weights.dim(0);
}

MscParams init_msc(int channels, int kernel_size,
                   const std::vector<Direction>& order, Rng& rng,
                   double init_scale) {
  if (channels < 1) throw ConfigError("init_msc: channels must be positive");
  if (kernel_size < 1 || kernel_size % 2 == 0)
    throw ConfigError("init_msc: kernel size must be odd and positive");
  MscParams params;
  const double bound =
      init_scale / std::sqrt(static_cast<double>(channels) * kernel_size);
  for (Direction dir : order) {
    Tensor w = Tensor::uniform({channels, channels, kernel_size}, -bound,
                               bound, rng, /*requires_grad=*/true);
    params.stages.emplace_back(dir, make_slice_kernel(family_of(dir), std::move(w)));
  }
  return params;
}

namespace {

struct ScanSpec {
  bool transpose;  // run in C x W x H space (horizontal family)
  bool reverse;    // visit rows last-to-first
  int shift;       // message shift along the within-slice axis
};

ScanSpec scan_spec(Direction dir) {
  switch (dir) {
    case Direction::kVerticalDown: return {false, false, 0};
    case Direction::kVerticalUp: return {false, true, 0};
    case Direction::kMainDiagDown: return {false, false, 1};
    case Direction::kMainDiagUp: return {false, true, -1};
    case Direction::kHorizontalRight: return {true, false, 0};
    case Direction::kHorizontalLeft: return {true, true, 0};
    case Direction::kCounterDiagDown: return {true, true, 1};
    case Direction::kCounterDiagUp: return {true, false, -1};
  }
  throw ContractError("scan_spec: invalid direction");
}

// Patch matrix of one updated row: patches[(ic*k + dk)][x] =
// row[ic][x + dk - pad], zero outside. Row pointers stride h*w per channel.
void gather_patches(const double* base, int c, long chan_stride, int w, int k,
                    int pad, double* patches) {
  for (int ic = 0; ic < c; ++ic) {
    const double* row = base + ic * chan_stride;
    for (int dk = 0; dk < k; ++dk) {
      double* dst = patches + (static_cast<long>(ic) * k + dk) * w;
      const int off = dk - pad;
      const int lo = std::max(0, -off);
      const int hi = std::min(w, w - off);
      for (int x = 0; x < lo; ++x) dst[x] = 0.0;
      for (int x = lo; x < hi; ++x) dst[x] = row[x + off];
      for (int x = hi; x < w; ++x) dst[x] = 0.0;
    }
  }
}

// Sequential slice recurrence over rows. out receives the stacked updated
// slices; msgs stores the post-ReLU message added to each visited row
// (undefined for the first row).
void scan_forward(const double* x, int c, int h, int w, const double* kernel,
                  int k, bool reverse, int shift, double* out, double* msgs) {
  const long cs = static_cast<long>(h) * w;
  const int pad = (k - 1) / 2;
  auto row_at = [&](int step) { return reverse ? h - 1 - step : step; };

  const int first = row_at(0);
  for (int ic = 0; ic < c; ++ic)
    std::copy(x + ic * cs + static_cast<long>(first) * w,
              x + ic * cs + static_cast<long>(first) * w + w,
              out + ic * cs + static_cast<long>(first) * w);

  thread_local std::vector<double> patches, z;
  patches.resize(static_cast<size_t>(c) * k * w);
  z.resize(static_cast<size_t>(c) * w);

  for (int step = 1; step < h; ++step) {
    const int prev = row_at(step - 1);
    const int cur = row_at(step);
    gather_patches(out + static_cast<long>(prev) * w, c, cs, w, k, pad,
                   patches.data());
    detail::gemm(false, false, c, w, c * k, kernel, c * k, patches.data(), w,
                 z.data(), w, false);
    for (int ic = 0; ic < c; ++ic) {
      double* zr = z.data() + static_cast<long>(ic) * w;
      double* mr = msgs + ic * cs + static_cast<long>(cur) * w;
      for (int xx = 0; xx < w; ++xx) mr[xx] = zr[xx] > 0.0 ? zr[xx] : 0.0;
    }
    for (int ic = 0; ic < c; ++ic) {
      const double* xr = x + ic * cs + static_cast<long>(cur) * w;
      const double* mr = msgs + ic * cs + static_cast<long>(cur) * w;
      double* orow = out + ic * cs + static_cast<long>(cur) * w;
      if (shift == 0) {
        for (int xx = 0; xx < w; ++xx) orow[xx] = xr[xx] + mr[xx];
      } else if (shift == 1) {
        orow[0] = xr[0];
        for (int xx = 1; xx < w; ++xx) orow[xx] = xr[xx] + mr[xx - 1];
      } else {
        for (int xx = 0; xx + 1 < w; ++xx) orow[xx] = xr[xx] + mr[xx + 1];
        orow[w - 1] = xr[w - 1];
      }
    }
  }
}

// Reverse sweep of the recurrence. gx/gkernel may be null when that
// gradient is not needed; both accumulate.
void scan_backward(const double* out, const double* msgs, int c, int h, int w,
                   const double* kernel, int k, bool reverse, int shift,
                   const double* gout, double* gx, double* gkernel) {
  const long cs = static_cast<long>(h) * w;
  const int pad = (k - 1) / 2;
  auto row_at = [&](int step) { return reverse ? h - 1 - step : step; };

  thread_local std::vector<double> u, unext, dm, patches, dpatches;
  u.resize(static_cast<size_t>(c) * w);
  unext.resize(static_cast<size_t>(c) * w);
  dm.resize(static_cast<size_t>(c) * w);
  patches.resize(static_cast<size_t>(c) * k * w);
  dpatches.resize(static_cast<size_t>(c) * k * w);

  const int last = row_at(h - 1);
  for (int ic = 0; ic < c; ++ic)
    std::copy(gout + ic * cs + static_cast<long>(last) * w,
              gout + ic * cs + static_cast<long>(last) * w + w,
              u.data() + static_cast<long>(ic) * w);

  for (int step = h - 1; step >= 1; --step) {
    const int cur = row_at(step);
    const int prev = row_at(step - 1);

    if (gx) {
      for (int ic = 0; ic < c; ++ic) {
        double* dst = gx + ic * cs + static_cast<long>(cur) * w;
        const double* src = u.data() + static_cast<long>(ic) * w;
        for (int xx = 0; xx < w; ++xx) dst[xx] += src[xx];
      }
    }

    // Undo the message shift, then the ReLU gate: dz lands in dm.
    for (int ic = 0; ic < c; ++ic) {
      const double* ur = u.data() + static_cast<long>(ic) * w;
      const double* mr = msgs + ic * cs + static_cast<long>(cur) * w;
      double* dr = dm.data() + static_cast<long>(ic) * w;
      if (shift == 0) {
        for (int xx = 0; xx < w; ++xx) dr[xx] = mr[xx] > 0.0 ? ur[xx] : 0.0;
      } else if (shift == 1) {
        for (int xx = 0; xx + 1 < w; ++xx)
          dr[xx] = mr[xx] > 0.0 ? ur[xx + 1] : 0.0;
        dr[w - 1] = 0.0;
      } else {
        dr[0] = 0.0;
        for (int xx = 1; xx < w; ++xx)
          dr[xx] = mr[xx] > 0.0 ? ur[xx - 1] : 0.0;
      }
    }

    gather_patches(out + static_cast<long>(prev) * w, c, cs, w, k, pad,
                   patches.data());
    if (gkernel) {
      detail::gemm(false, true, c, c * k, w, dm.data(), w, patches.data(), w,
                   gkernel, c * k, true);
    }
    detail::gemm(true, false, c * k, w, c, kernel, c * k, dm.data(), w,
                 dpatches.data(), w, false);

    for (int ic = 0; ic < c; ++ic)
      std::copy(gout + ic * cs + static_cast<long>(prev) * w,
                gout + ic * cs + static_cast<long>(prev) * w + w,
                unext.data() + static_cast<long>(ic) * w);
    for (int ic = 0; ic < c; ++ic) {
      double* un = unext.data() + static_cast<long>(ic) * w;
      for (int dk = 0; dk < k; ++dk) {
        const double* dp = dpatches.data() + (static_cast<long>(ic) * k + dk) * w;
        const int off = dk - pad;
        const int lo = std::max(0, -off);
        const int hi = std::min(w, w - off);
        for (int xx = lo; xx < hi; ++xx) un[xx + off] += dp[xx];
      }
    }
    u.swap(unext);
  }

  if (gx) {
    const int first = row_at(0);
    for (int ic = 0; ic < c; ++ic) {
      double* dst = gx + ic * cs + static_cast<long>(first) * w;
      const double* src = u.data() + static_cast<long>(ic) * w;
      for (int xx = 0; xx < w; ++xx) dst[xx] += src[xx];
    }
  }
}

// The row-space slice scan as a taped operation.
Tensor scan_rows_op(const Tensor& x, const Tensor& kernel, bool reverse,
                    int shift) {
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int k = kernel.dim(2);
  if (k > w)
    std::cerr << "sanet: warning: slice kernel extent " << k
              << " exceeds slice width " << w << "\n";

  Tensor out = Tensor::zeros(x.shape());
  auto msgs = std::make_shared<std::vector<double>>(
      static_cast<size_t>(x.numel()), 0.0);
  scan_forward(x.data(), c, h, w, kernel.data(), k, reverse, shift, out.data(),
               msgs->data());

  Tape* tape = Tape::active();
  if (tape && (x.requires_grad() || kernel.requires_grad())) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto k_i = kernel.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      double* gx = x_i->requires_grad ? detail::grad_buffer(*x_i) : nullptr;
      double* gk = k_i->requires_grad ? detail::grad_buffer(*k_i) : nullptr;
      if (!gx && !gk) return;
      scan_backward(out_i->data.data(), msgs->data(), c, h, w,
                    k_i->data.data(), k, reverse, shift, out_i->grad.data(),
                    gx, gk);
    });
  }
  return out;
}

}  // namespace

Tensor directional_slice_conv(const Tensor& x, const SliceKernel& kernel,
                              Direction dir) {
  if (!x.defined() || x.rank() != 3)
    throw DimensionError("directional_slice_conv: input must be CxHxW");
  if (family_of(dir) != kernel.family)
    throw ConfigError("directional_slice_conv: kernel family does not match direction");
  if (kernel.weights.dim(0) != x.dim(0))
    throw DimensionError("directional_slice_conv: channel mismatch");

  const ScanSpec spec = scan_spec(dir);
  if (!spec.transpose)
    return scan_rows_op(x, kernel.weights, spec.reverse, spec.shift);
  Tensor t = transpose_hw(x);
  Tensor s = scan_rows_op(t, kernel.weights, spec.reverse, spec.shift);
  return transpose_hw(s);
}

Tensor shift_message(const Tensor& message, Direction dir) {
  if (!message.defined() || message.rank() != 3)
    throw DimensionError("shift_message: message must be rank 3");
  const ScanSpec spec = scan_spec(dir);
  if (spec.shift == 0) return message;

  const int c = message.dim(0), h = message.dim(1), w = message.dim(2);
  // Diagonal shift axis: W for the main-diagonal pair, H for the
  // counter-diagonal pair.
  const bool along_w = !spec.transpose;
  const int extent = along_w ? w : h;
  const int delta = spec.shift;

  Tensor out = Tensor::zeros(message.shape());
  auto apply_shift = [&](const double* src, double* dst, int d) {
    for (int ch = 0; ch < c; ++ch)
      for (int y = 0; y < h; ++y)
        for (int xx = 0; xx < w; ++xx) {
          const int pos = along_w ? xx : y;
          const int from = pos - d;
          if (from < 0 || from >= extent) continue;
          const long src_idx =
              along_w ? ((static_cast<long>(ch) * h + y) * w + from)
                      : ((static_cast<long>(ch) * h + from) * w + xx);
          dst[(static_cast<long>(ch) * h + y) * w + xx] = src[src_idx];
        }
  };
  apply_shift(message.data(), out.data(), delta);

  Tape* tape = Tape::active();
  if (tape && message.requires_grad()) {
    out.set_requires_grad(true);
    auto m_i = message.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      double* gm = detail::grad_buffer(*m_i);
      const double* g = out_i->grad.data();
      // Opposite shift with the symmetric drop/fill.
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y)
          for (int xx = 0; xx < w; ++xx) {
            const int pos = along_w ? xx : y;
            const int from = pos + delta;
            if (from < 0 || from >= extent) continue;
            const long src_idx =
                along_w ? ((static_cast<long>(ch) * h + y) * w + from)
                        : ((static_cast<long>(ch) * h + from) * w + xx);
            gm[(static_cast<long>(ch) * h + y) * w + xx] += g[src_idx];
          }
    });
  }
  return out;
}

Tensor msc_forward(const Tensor& x, const MscParams& params) {
  Tensor y = x;
  for (const auto& [dir, kernel] : params.stages)
    y = directional_slice_conv(y, kernel, dir);
  return y;
}

}  // namespace sanet
