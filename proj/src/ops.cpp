#include "sanet/ops.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "sanet/gemm.hpp"

namespace sanet {
namespace {

void require(bool cond, const char* msg) {
  if (!cond) throw DimensionError(msg);
}

// Gathers convolution patches: out is (C_in*kh*kw) x (H_out*W_out),
// row (ic,ky,kx), column (oy,ox); zeros where the window leaves the input.
void im2col(const double* in, int c_in, int h, int w, int kh, int kw,
            int stride, int pad, int h_out, int w_out, double* out) {
  const long p = static_cast<long>(h_out) * w_out;
  long row = 0;
  for (int ic = 0; ic < c_in; ++ic) {
    const double* chan = in + static_cast<long>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++row) {
        double* dst = out + row * p;
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = oy * stride + ky - pad;
          double* drow = dst + static_cast<long>(oy) * w_out;
          if (iy < 0 || iy >= h) {
            std::fill(drow, drow + w_out, 0.0);
            continue;
          }
          const double* srow = chan + static_cast<long>(iy) * w;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = ox * stride + kx - pad;
            drow[ox] = (ix >= 0 && ix < w) ? srow[ix] : 0.0;
          }
        }
      }
    }
  }
}

// Scatter-add of patch gradients back onto the input gradient.
void col2im_add(const double* cols, int c_in, int h, int w, int kh, int kw,
                int stride, int pad, int h_out, int w_out, double* grad_in) {
  const long p = static_cast<long>(h_out) * w_out;
  long row = 0;
  for (int ic = 0; ic < c_in; ++ic) {
    double* chan = grad_in + static_cast<long>(ic) * h * w;
    for (int ky = 0; ky < kh; ++ky) {
      for (int kx = 0; kx < kw; ++kx, ++row) {
        const double* src = cols + row * p;
        for (int oy = 0; oy < h_out; ++oy) {
          const int iy = oy * stride + ky - pad;
          if (iy < 0 || iy >= h) continue;
          double* drow = chan + static_cast<long>(iy) * w;
          const double* srow = src + static_cast<long>(oy) * w_out;
          for (int ox = 0; ox < w_out; ++ox) {
            const int ix = ox * stride + kx - pad;
            if (ix >= 0 && ix < w) drow[ix] += srow[ox];
          }
        }
      }
    }
  }
}

Tensor conv2d_impl(const Tensor& input, const Tensor& weights,
                   const Tensor& bias, int stride, int padding,
                   bool floor_mode) {
  require(input.defined() && input.rank() == 3, "conv2d: input must be CxHxW");
  require(weights.defined() && weights.rank() == 4,
          "conv2d: weights must be C_out x C_in x kh x kw");
  const int c_in = input.dim(0), h = input.dim(1), w = input.dim(2);
  const int c_out = weights.dim(0), kh = weights.dim(2), kw = weights.dim(3);
  require(weights.dim(1) == c_in, "conv2d: input channel mismatch");
  if (bias.defined())
    require(bias.rank() == 1 && bias.dim(0) == c_out,
            "conv2d: bias must have shape {C_out}");
  if (stride < 1) throw ConfigError("conv2d: stride must be positive");
  if (padding < 0) throw ConfigError("conv2d: padding must be nonnegative");

  const int span_h = h + 2 * padding - kh;
  const int span_w = w + 2 * padding - kw;
  if (span_h < 0 || span_w < 0)
    throw ConfigError("conv2d: kernel larger than padded input");
  if (!floor_mode && (span_h % stride != 0 || span_w % stride != 0))
    throw ConfigError("conv2d: output extent is not integral");
  const int h_out = span_h / stride + 1;
  const int w_out = span_w / stride + 1;

  const long k = static_cast<long>(c_in) * kh * kw;
  const long p = static_cast<long>(h_out) * w_out;
  thread_local std::vector<double> cols;
  cols.resize(static_cast<size_t>(k) * p);
  im2col(input.data(), c_in, h, w, kh, kw, stride, padding, h_out, w_out,
         cols.data());

  Tensor out = Tensor::zeros({c_out, h_out, w_out});
  detail::gemm(false, false, c_out, static_cast<int>(p), static_cast<int>(k),
               weights.data(), static_cast<int>(k), cols.data(),
               static_cast<int>(p), out.data(), static_cast<int>(p), false);
  if (bias.defined()) {
    for (int oc = 0; oc < c_out; ++oc) {
      double* row = out.data() + static_cast<long>(oc) * p;
      const double bv = bias.data()[oc];
      for (long i = 0; i < p; ++i) row[i] += bv;
    }
  }

  Tape* tape = Tape::active();
  const bool needs_grad = input.requires_grad() || weights.requires_grad() ||
                          (bias.defined() && bias.requires_grad());
  if (tape && needs_grad) {
    out.set_requires_grad(true);
    auto in_i = input.shared();
    auto w_i = weights.shared();
    auto b_i = bias.defined() ? bias.shared() : nullptr;
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      const double* gout = out_i->grad.data();
      if (b_i && b_i->requires_grad) {
        double* gb = detail::grad_buffer(*b_i);
        for (int oc = 0; oc < c_out; ++oc) {
          double s = 0.0;
          const double* row = gout + static_cast<long>(oc) * p;
          for (long i = 0; i < p; ++i) s += row[i];
          gb[oc] += s;
        }
      }
      thread_local std::vector<double> cols_b;
      if (w_i->requires_grad) {
        cols_b.resize(static_cast<size_t>(k) * p);
        im2col(in_i->data.data(), c_in, h, w, kh, kw, stride, padding, h_out,
               w_out, cols_b.data());
        detail::gemm(false, true, c_out, static_cast<int>(k),
                     static_cast<int>(p), gout, static_cast<int>(p),
                     cols_b.data(), static_cast<int>(p),
                     detail::grad_buffer(*w_i), static_cast<int>(k), true);
      }
      if (in_i->requires_grad) {
        thread_local std::vector<double> dcols;
        dcols.resize(static_cast<size_t>(k) * p);
        detail::gemm(true, false, static_cast<int>(k), static_cast<int>(p),
                     c_out, w_i->data.data(), static_cast<int>(k), gout,
                     static_cast<int>(p), dcols.data(), static_cast<int>(p),
                     false);
        col2im_add(dcols.data(), c_in, h, w, kh, kw, stride, padding, h_out,
                   w_out, detail::grad_buffer(*in_i));
      }
    });
  }
  return out;
}

}  // namespace

Tensor conv2d(const Tensor& input, const Tensor& weights, const Tensor& bias,
              int stride, int padding) {
  return conv2d_impl(input, weights, bias, stride, padding, false);
}

Tensor detail::conv2d_floor(const Tensor& input, const Tensor& weights,
                            const Tensor& bias, int stride, int padding) {
  return conv2d_impl(input, weights, bias, stride, padding, true);
}

Tensor relu(const Tensor& x) {
  require(x.defined(), "relu: undefined tensor");
  Tensor out = Tensor::zeros(x.shape());
  const long n = x.numel();
  const double* in = x.data();
  double* o = out.data();
  for (long i = 0; i < n; ++i) o[i] = in[i] > 0.0 ? in[i] : 0.0;

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      double* gx = detail::grad_buffer(*x_i);
      const double* g = out_i->grad.data();
      const double* xv = x_i->data.data();
      for (long i = 0; i < n; ++i)
        if (xv[i] > 0.0) gx[i] += g[i];
    });
  }
  return out;
}

Tensor upsample_bilinear(const Tensor& x, int factor) {
  require(x.defined() && x.rank() == 3, "upsample_bilinear: input must be CxHxW");
  if (factor < 1) throw ConfigError("upsample_bilinear: factor must be >= 1");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ho = h * factor, wo = w * factor;

  // Per-axis source indices and weights (align-corners = false).
  auto make_axis = [factor](int in_extent, int out_extent) {
    std::vector<int> i0(out_extent), i1(out_extent);
    std::vector<double> t(out_extent);
    for (int o = 0; o < out_extent; ++o) {
      double src = (o + 0.5) / factor - 0.5;
      src = std::clamp(src, 0.0, static_cast<double>(in_extent - 1));
      int lo = static_cast<int>(std::floor(src));
      i0[o] = lo;
      i1[o] = std::min(lo + 1, in_extent - 1);
      t[o] = src - lo;
    }
    return std::tuple(i0, i1, t);
  };
  auto [y0, y1, ty] = make_axis(h, ho);
  auto [x0, x1, tx] = make_axis(w, wo);

  Tensor out = Tensor::zeros({c, ho, wo});
  for (int ch = 0; ch < c; ++ch) {
    const double* in = x.data() + static_cast<long>(ch) * h * w;
    double* o = out.data() + static_cast<long>(ch) * ho * wo;
    for (int oy = 0; oy < ho; ++oy) {
      const double* r0 = in + static_cast<long>(y0[oy]) * w;
      const double* r1 = in + static_cast<long>(y1[oy]) * w;
      const double wy = ty[oy];
      double* orow = o + static_cast<long>(oy) * wo;
      for (int ox = 0; ox < wo; ++ox) {
        const double wx = tx[ox];
        const double top = r0[x0[ox]] * (1 - wx) + r0[x1[ox]] * wx;
        const double bot = r1[x0[ox]] * (1 - wx) + r1[x1[ox]] * wx;
        orow[ox] = top * (1 - wy) + bot * wy;
      }
    }
  }

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=, y0 = y0, y1 = y1, ty = ty, x0 = x0, x1 = x1, tx = tx]() {
      if (out_i->grad.empty()) return;
      double* gx = detail::grad_buffer(*x_i);
      const double* g = out_i->grad.data();
      for (int ch = 0; ch < c; ++ch) {
        double* gin = gx + static_cast<long>(ch) * h * w;
        const double* go = g + static_cast<long>(ch) * ho * wo;
        for (int oy = 0; oy < ho; ++oy) {
          const double wy = ty[oy];
          double* g0 = gin + static_cast<long>(y0[oy]) * w;
          double* g1 = gin + static_cast<long>(y1[oy]) * w;
          const double* grow = go + static_cast<long>(oy) * wo;
          for (int ox = 0; ox < wo; ++ox) {
            const double wx = tx[ox];
            const double gv = grow[ox];
            g0[x0[ox]] += gv * (1 - wy) * (1 - wx);
            g0[x1[ox]] += gv * (1 - wy) * wx;
            g1[x0[ox]] += gv * wy * (1 - wx);
            g1[x1[ox]] += gv * wy * wx;
          }
        }
      }
    });
  }
  return out;
}

Tensor add(const Tensor& a, const Tensor& b) {
  require(a.defined() && b.defined(), "add: undefined tensor");
  require(a.shape() == b.shape(), "add: shape mismatch");
  Tensor out = Tensor::zeros(a.shape());
  const long n = a.numel();
  const double* pa = a.data();
  const double* pb = b.data();
  double* o = out.data();
  for (long i = 0; i < n; ++i) o[i] = pa[i] + pb[i];

  Tape* tape = Tape::active();
  if (tape && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    auto a_i = a.shared();
    auto b_i = b.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      const double* g = out_i->grad.data();
      if (a_i->requires_grad) {
        double* ga = detail::grad_buffer(*a_i);
        for (long i = 0; i < n; ++i) ga[i] += g[i];
      }
      if (b_i->requires_grad) {
        double* gb = detail::grad_buffer(*b_i);
        for (long i = 0; i < n; ++i) gb[i] += g[i];
      }
    });
  }
  return out;
}

Tensor mul(const Tensor& a, const Tensor& b) {
  require(a.defined() && b.defined(), "mul: undefined tensor");
  require(a.shape() == b.shape(), "mul: shape mismatch");
  Tensor out = Tensor::zeros(a.shape());
  const long n = a.numel();
  const double* pa = a.data();
  const double* pb = b.data();
  double* o = out.data();
  for (long i = 0; i < n; ++i) o[i] = pa[i] * pb[i];

  Tape* tape = Tape::active();
  if (tape && (a.requires_grad() || b.requires_grad())) {
    out.set_requires_grad(true);
    auto a_i = a.shared();
    auto b_i = b.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      const double* g = out_i->grad.data();
      if (a_i->requires_grad) {
        double* ga = detail::grad_buffer(*a_i);
        for (long i = 0; i < n; ++i) ga[i] += g[i] * b_i->data[i];
      }
      if (b_i->requires_grad) {
        double* gb = detail::grad_buffer(*b_i);
        for (long i = 0; i < n; ++i) gb[i] += g[i] * a_i->data[i];
      }
    });
  }
  return out;
}

Tensor scale(const Tensor& x, double factor) {
  require(x.defined(), "scale: undefined tensor");
  Tensor out = Tensor::zeros(x.shape());
  const long n = x.numel();
  const double* in = x.data();
  double* o = out.data();
  for (long i = 0; i < n; ++i) o[i] = in[i] * factor;

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      double* gx = detail::grad_buffer(*x_i);
      const double* g = out_i->grad.data();
      for (long i = 0; i < n; ++i) gx[i] += g[i] * factor;
    });
  }
  return out;
}

Tensor sum_all(const Tensor& x) {
  require(x.defined(), "sum_all: undefined tensor");
  double s = 0.0;
  const long n = x.numel();
  const double* in = x.data();
  for (long i = 0; i < n; ++i) s += in[i];
  Tensor out = Tensor::from_data({1}, {s});

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      const double g = out_i->grad[0];
      double* gx = detail::grad_buffer(*x_i);
      for (long i = 0; i < n; ++i) gx[i] += g;
    });
  }
  return out;
}

namespace {

void transpose_chw(const double* in, int c, int h, int w, double* out) {
  for (int ch = 0; ch < c; ++ch) {
    const double* src = in + static_cast<long>(ch) * h * w;
    double* dst = out + static_cast<long>(ch) * h * w;
    for (int y = 0; y < h; ++y)
      for (int x = 0; x < w; ++x)
        dst[static_cast<long>(x) * h + y] = src[static_cast<long>(y) * w + x];
  }
}

}  // namespace

Tensor transpose_hw(const Tensor& x) {
  require(x.defined() && x.rank() == 3, "transpose_hw: input must be CxHxW");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  Tensor out = Tensor::zeros({c, w, h});
  transpose_chw(x.data(), c, h, w, out.data());

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      std::vector<double> tmp(out_i->grad.size());
      transpose_chw(out_i->grad.data(), c, w, h, tmp.data());
      double* gx = detail::grad_buffer(*x_i);
      for (size_t i = 0; i < tmp.size(); ++i) gx[i] += tmp[i];
    });
  }
  return out;
}

Tensor pad_bottom_right(const Tensor& x, int pad_h, int pad_w) {
  require(x.defined() && x.rank() == 3, "pad_bottom_right: input must be CxHxW");
  if (pad_h < 0 || pad_w < 0) throw ConfigError("pad: negative padding");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  const int ho = h + pad_h, wo = w + pad_w;
  Tensor out = Tensor::zeros({c, ho, wo});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < h; ++y) {
      const double* src =
          x.data() + (static_cast<long>(ch) * h + y) * static_cast<long>(w);
      double* dst = out.data() +
                    (static_cast<long>(ch) * ho + y) * static_cast<long>(wo);
      std::copy(src, src + w, dst);
    }

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      double* gx = detail::grad_buffer(*x_i);
      const double* g = out_i->grad.data();
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < h; ++y) {
          const double* srow =
              g + (static_cast<long>(ch) * ho + y) * static_cast<long>(wo);
          double* drow =
              gx + (static_cast<long>(ch) * h + y) * static_cast<long>(w);
          for (int xx = 0; xx < w; ++xx) drow[xx] += srow[xx];
        }
    });
  }
  return out;
}

Tensor crop_top_left(const Tensor& x, int out_h, int out_w) {
  require(x.defined() && x.rank() == 3, "crop_top_left: input must be CxHxW");
  const int c = x.dim(0), h = x.dim(1), w = x.dim(2);
  require(out_h >= 1 && out_w >= 1 && out_h <= h && out_w <= w,
          "crop_top_left: window exceeds input");
  Tensor out = Tensor::zeros({c, out_h, out_w});
  for (int ch = 0; ch < c; ++ch)
    for (int y = 0; y < out_h; ++y) {
      const double* src =
          x.data() + (static_cast<long>(ch) * h + y) * static_cast<long>(w);
      double* dst =
          out.data() +
          (static_cast<long>(ch) * out_h + y) * static_cast<long>(out_w);
      std::copy(src, src + out_w, dst);
    }

  Tape* tape = Tape::active();
  if (tape && x.requires_grad()) {
    out.set_requires_grad(true);
    auto x_i = x.shared();
    auto out_i = out.shared();
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      double* gx = detail::grad_buffer(*x_i);
      const double* g = out_i->grad.data();
      for (int ch = 0; ch < c; ++ch)
        for (int y = 0; y < out_h; ++y) {
          const double* srow =
              g + (static_cast<long>(ch) * out_h + y) * static_cast<long>(out_w);
          double* drow =
              gx + (static_cast<long>(ch) * h + y) * static_cast<long>(w);
          for (int xx = 0; xx < out_w; ++xx) drow[xx] += srow[xx];
        }
    });
  }
  return out;
}

}  // namespace sanet
