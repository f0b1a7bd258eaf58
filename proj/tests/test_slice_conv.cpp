#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sanet/grad_check.hpp"
#include "sanet/ops.hpp"
#include "sanet/slice_conv.hpp"
#include "test_util.hpp"

using namespace sanet;
using namespace sanet::test;

namespace {

SliceKernel kernel_for(Direction dir, const Tensor& weights) {
  return make_slice_kernel(family_of(dir), weights);
}

SliceKernel unit_kernel(Direction dir) {
  return kernel_for(dir, Tensor::from_data({1, 1, 1}, {1.0}));
}

Tensor impulse5(int y, int x) {
  Tensor t = Tensor::zeros({1, 5, 5});
  t.at(0, y, x) = 1.0;
  return t;
}

}  // namespace

TEST_CASE("direction tokens and families") {
  CHECK(parse_direction("vd") == Direction::kVerticalDown);
  CHECK(parse_direction("cdu") == Direction::kCounterDiagUp);
  CHECK_THROWS_AS(parse_direction("xx"), ConfigError);
  CHECK(parse_direction_list("vd,mdd").size() == 2);
  CHECK_THROWS_AS(parse_direction_list("vd,vd"), ConfigError);
  for (Direction dir : kCanonicalDirections)
    CHECK(parse_direction(direction_token(dir)) == dir);
  CHECK(family_of(Direction::kMainDiagDown) == SliceFamily::kVertical);
  CHECK(family_of(Direction::kCounterDiagDown) == SliceFamily::kHorizontal);
}

TEST_CASE("kernel construction contracts") {
  CHECK_THROWS_AS(
      make_slice_kernel(SliceFamily::kVertical, Tensor::zeros({2, 2, 4})),
      ConfigError);  // even extent
  CHECK_THROWS_AS(
      make_slice_kernel(SliceFamily::kVertical, Tensor::zeros({2, 3, 3})),
      DimensionError);  // not C -> C
  Rng rng(1);
  Tensor x = random_tensor({2, 4, 4}, rng);
  SliceKernel vertical = kernel_for(Direction::kVerticalDown,
                                    Tensor::zeros({2, 2, 3}));
  CHECK_THROWS_AS(
      directional_slice_conv(x, vertical, Direction::kHorizontalLeft),
      ConfigError);
  Tensor x3 = random_tensor({3, 4, 4}, rng);
  CHECK_THROWS_AS(directional_slice_conv(x3, vertical, Direction::kVerticalDown),
                  DimensionError);
}

TEST_CASE("zero kernel is the bitwise identity in all directions") {
  Rng rng(2);
  Tensor x = random_tensor({3, 5, 4}, rng);
  for (Direction dir : kCanonicalDirections) {
    SliceKernel zero = kernel_for(dir, Tensor::zeros({3, 3, 3}));
    CHECK(bitwise_equal(directional_slice_conv(x, zero, dir), x));
    CHECK(bitwise_equal(slice_conv_reference(x, zero, dir), x));
  }
}

TEST_CASE("top-down recurrence builds nonnegative prefix sums") {
  const double a = 0.3, b = 1.25, c = 0.0;
  Tensor col = Tensor::from_data({1, 3, 1}, {a, b, c});
  Tensor out =
      directional_slice_conv(col, unit_kernel(Direction::kVerticalDown),
                             Direction::kVerticalDown);
  CHECK(out.at(0, 0, 0) == doctest::Approx(a).epsilon(1e-15));
  CHECK(out.at(0, 1, 0) == doctest::Approx(b + a).epsilon(1e-15));
  CHECK(out.at(0, 2, 0) == doctest::Approx(c + b + a).epsilon(1e-15));
}

TEST_CASE("main-diagonal impulse walks the identity matrix") {
  Tensor x = Tensor::zeros({1, 3, 3});
  x.at(0, 0, 0) = 1.0;
  Tensor out = directional_slice_conv(
      x, unit_kernel(Direction::kMainDiagDown), Direction::kMainDiagDown);
  for (int y = 0; y < 3; ++y)
    for (int xx = 0; xx < 3; ++xx)
      CHECK(out.at(0, y, xx) == (y == xx ? 1.0 : 0.0));
}

TEST_CASE("diagonal impulse rays on 5x5 inputs") {
  struct Case {
    Direction dir;
    int dy, dx;
  };
  const Case cases[] = {
      {Direction::kMainDiagDown, 1, 1},
      {Direction::kMainDiagUp, -1, -1},
      {Direction::kCounterDiagDown, 1, -1},
      {Direction::kCounterDiagUp, -1, 1},
  };
  for (const auto& c : cases) {
    CAPTURE(direction_token(c.dir));
    Tensor out = directional_slice_conv(impulse5(2, 2), unit_kernel(c.dir), c.dir);
    for (int y = 0; y < 5; ++y)
      for (int x = 0; x < 5; ++x) {
        const int sy = y - 2, sx = x - 2;
        const bool on_ray =
            (c.dy > 0 ? sy >= 0 : sy <= 0) && sy * c.dx == sx * c.dy &&
            (c.dx > 0 ? sx >= 0 : sx <= 0);
        CHECK(out.at(0, y, x) == (on_ray ? 1.0 : 0.0));
      }
  }
}

TEST_CASE("shift_message drop and fill rules") {
  Tensor row = Tensor::from_data({1, 1, 3}, {0.5, 1.5, 2.5});  // [p, q, r]
  Tensor down = shift_message(row, Direction::kMainDiagDown);
  CHECK(down.at(0, 0, 0) == 0.0);
  CHECK(down.at(0, 0, 1) == 0.5);
  CHECK(down.at(0, 0, 2) == 1.5);

  Tensor up = shift_message(row, Direction::kMainDiagUp);
  CHECK(up.at(0, 0, 0) == 1.5);
  CHECK(up.at(0, 0, 1) == 2.5);
  CHECK(up.at(0, 0, 2) == 0.0);

  CHECK(bitwise_equal(shift_message(row, Direction::kVerticalDown), row));
  CHECK(bitwise_equal(shift_message(row, Direction::kHorizontalLeft), row));

  Tensor col = Tensor::from_data({1, 3, 1}, {0.5, 1.5, 2.5});
  Tensor cd = shift_message(col, Direction::kCounterDiagDown);
  CHECK(cd.at(0, 0, 0) == 0.0);
  CHECK(cd.at(0, 1, 0) == 0.5);
  CHECK(cd.at(0, 2, 0) == 1.5);
  Tensor cu = shift_message(col, Direction::kCounterDiagUp);
  CHECK(cu.at(0, 0, 0) == 1.5);
  CHECK(cu.at(0, 2, 0) == 0.0);
}

TEST_CASE("msc_forward composes the eight passes in order") {
  Rng rng(4);
  Tensor x = random_tensor({2, 4, 5}, rng);
  MscParams params = init_msc(
      2, 3,
      std::vector<Direction>(kCanonicalDirections.begin(),
                             kCanonicalDirections.end()),
      rng, 1.0);
  Tensor composed = msc_forward(x, params);
  Tensor manual = x;
  for (const auto& [dir, kernel] : params.stages)
    manual = directional_slice_conv(manual, kernel, dir);
  CHECK(bitwise_equal(composed, manual));

  Tensor zeros = Tensor::zeros({2, 4, 5});
  Tensor out = msc_forward(zeros, params);
  for (long long i = 0; i < out.numel(); ++i) CHECK(out.data()[i] == 0.0);
}

TEST_CASE("optimized scan matches the naive reference") {
  Rng rng(6);
  for (int k : {1, 3, 5}) {
    for (Direction dir : kCanonicalDirections) {
      CAPTURE(k);
      CAPTURE(direction_token(dir));
      for (int trial = 0; trial < 3; ++trial) {
        Tensor x = random_tensor({4, 6, 5}, rng);
        Tensor w = random_tensor({4, 4, k}, rng);
        SliceKernel kernel = kernel_for(dir, w);
        CHECK(max_abs_diff(directional_slice_conv(x, kernel, dir),
                           slice_conv_reference(x, kernel, dir)) <= 1e-12);
      }
    }
  }
}

TEST_CASE("shape preservation and first-slice passthrough") {
  Rng rng(8);
  for (Direction dir : kCanonicalDirections) {
    Tensor x = random_tensor({2, 6, 3}, rng);
    Tensor w = random_tensor({2, 2, 5}, rng);
    Tensor out = directional_slice_conv(x, kernel_for(dir, w), dir);
    CHECK(out.shape() == x.shape());

    // first visited slice is passed through bitwise
    const int h = x.dim(1), wd = x.dim(2);
    auto check_row = [&](int y) {
      for (int c = 0; c < 2; ++c)
        for (int xx = 0; xx < wd; ++xx) CHECK(out.at(c, y, xx) == x.at(c, y, xx));
    };
    auto check_col = [&](int xx) {
      for (int c = 0; c < 2; ++c)
        for (int y = 0; y < h; ++y) CHECK(out.at(c, y, xx) == x.at(c, y, xx));
    };
    switch (dir) {
      case Direction::kVerticalDown:
      case Direction::kMainDiagDown: check_row(0); break;
      case Direction::kVerticalUp:
      case Direction::kMainDiagUp: check_row(h - 1); break;
      case Direction::kHorizontalRight:
      case Direction::kCounterDiagUp: check_col(0); break;
      case Direction::kHorizontalLeft:
      case Direction::kCounterDiagDown: check_col(wd - 1); break;
    }
  }
}

TEST_CASE("monotone growth for nonnegative kernels and inputs") {
  Rng rng(9);
  for (Direction dir : kCanonicalDirections) {
    Tensor x = Tensor::zeros({2, 5, 5});
    for (long long i = 0; i < x.numel(); ++i) x.data()[i] = rng.uniform();
    Tensor w = Tensor::zeros({2, 2, 3});
    for (long long i = 0; i < w.numel(); ++i) w.data()[i] = rng.uniform();
    Tensor out = directional_slice_conv(x, kernel_for(dir, w), dir);
    for (long long i = 0; i < x.numel(); ++i)
      CHECK(out.data()[i] >= x.data()[i]);
  }
}

TEST_CASE("flip equivariance of the direction pairs") {
  Rng rng(10);
  Tensor x = random_tensor({3, 6, 7}, rng);
  Tensor w = random_tensor({3, 3, 3}, rng);

  SliceKernel kv = kernel_for(Direction::kVerticalDown, w);
  Tensor down = directional_slice_conv(x, kv, Direction::kVerticalDown);
  Tensor up_flipped = flip_h(
      directional_slice_conv(flip_h(x), kv, Direction::kVerticalUp));
  CHECK(max_abs_diff(down, up_flipped) <= 1e-12);

  SliceKernel kh = kernel_for(Direction::kHorizontalRight, w);
  Tensor right = directional_slice_conv(x, kh, Direction::kHorizontalRight);
  Tensor left_flipped = flip_w(
      directional_slice_conv(flip_w(x), kh, Direction::kHorizontalLeft));
  CHECK(max_abs_diff(right, left_flipped) <= 1e-12);
}

TEST_CASE("slice convolution gradients against finite differences") {
  for (uint64_t seed : {21ULL, 22ULL, 23ULL}) {
    Rng rng(seed);
    CAPTURE(seed);
    for (Direction dir : kCanonicalDirections) {
      CAPTURE(direction_token(dir));
      Tensor x = random_tensor({2, 4, 5}, rng);
      Tensor w = random_tensor({2, 2, 3}, rng);
      Rng probe_rng = rng.split(3);

      auto f_x = [&](const Tensor& t) {
        Rng local = probe_rng;
        return probe_loss(directional_slice_conv(t, kernel_for(dir, w), dir),
                          local);
      };
      CHECK(grad_check(f_x, x, 1e-5).max_rel_error < 1e-5);

      auto f_w = [&](const Tensor& t) {
        Rng local = probe_rng;
        return probe_loss(directional_slice_conv(x, kernel_for(dir, t), dir),
                          local);
      };
      CHECK(grad_check(f_w, w, 1e-5).max_rel_error < 1e-5);
    }
    // msc end to end
    Rng rng2(seed + 100);
    Tensor x = random_tensor({2, 4, 4}, rng2);
    MscParams params = init_msc(
        2, 3,
        std::vector<Direction>(kCanonicalDirections.begin(),
                               kCanonicalDirections.end()),
        rng2, 1.0);
    Rng probe_rng = rng2.split(5);
    auto f = [&](const Tensor& t) {
      Rng local = probe_rng;
      return probe_loss(msc_forward(t, params), local);
    };
    CHECK(grad_check(f, x, 1e-5).max_rel_error < 1e-5);
    auto f_k = [&](const Tensor& t) {
      MscParams probe_params = params;
      probe_params.stages[4].second.weights = t;  // mdd stage
      Rng local = probe_rng;
      return probe_loss(msc_forward(x, probe_params), local);
    };
    CHECK(grad_check(f_k, params.stages[4].second.weights.clone(), 1e-5)
              .max_rel_error < 1e-5);
  }
}
