#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <filesystem>

#include "sanet/checkpoint.hpp"
#include "sanet/grad_check.hpp"
#include "sanet/network.hpp"
#include "sanet/ops.hpp"
#include "test_util.hpp"

using namespace sanet;
using namespace sanet::test;

namespace {

SanetConfig small_config(std::vector<Direction> dirs = {
                             kCanonicalDirections.begin(),
                             kCanonicalDirections.end()}) {
  SanetConfig config;
  config.backbone.stage_channels = {4, 6, 8};
  config.msc_kernel_size = 3;
  config.msc_directions = std::move(dirs);
  return config;
}

}  // namespace

TEST_CASE("backbone shape and padding rule") {
  const SanetParams params = init_sanet(small_config(), 1);
  for (auto [h, w] : std::initializer_list<std::pair<int, int>>{
           {16, 16}, {64, 64}, {17, 30}, {9, 8}}) {
    Tensor image = Tensor::zeros({1, h, w});
    const Tensor features = backbone_forward(image, params);
    CHECK(features.dim(0) == 8);
    CHECK(features.dim(1) == (h + 3) / 4);
    CHECK(features.dim(2) == (w + 3) / 4);
  }
  CHECK_THROWS_AS(backbone_forward(Tensor::zeros({1, 4, 16}), params),
                  DimensionError);
  CHECK_THROWS_AS(backbone_forward(Tensor::zeros({2, 16, 16}), params),
                  DimensionError);
}

TEST_CASE("zero image with zero bias gives zero features") {
  SanetParams params = init_sanet(small_config(), 2);
  const Tensor features = backbone_forward(Tensor::zeros({1, 16, 16}), params);
  for (long long i = 0; i < features.numel(); ++i)
    CHECK(features.data()[i] == 0.0);
}

TEST_CASE("deterministic initialization and forward") {
  const SanetParams a = init_sanet(small_config(), 77);
  const SanetParams b = init_sanet(small_config(), 77);
  const auto pa = a.parameters();
  const auto pb = b.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(bitwise_equal(pa[i].value, pb[i].value));
  }
  Rng rng(5);
  Tensor image = random_tensor({1, 24, 24}, rng);
  CHECK(bitwise_equal(sanet_forward(image, a), sanet_forward(image, b)));

  const SanetParams c = init_sanet(small_config(), 78);
  CHECK_FALSE(bitwise_equal(a.parameters()[0].value, c.parameters()[0].value));
}

TEST_CASE("parameter names are unique and follow the naming scheme") {
  const SanetParams params = init_sanet(small_config(), 3);
  const auto all = params.parameters();
  std::vector<std::string> names;
  for (const auto& p : all) names.push_back(p.name);
  std::sort(names.begin(), names.end());
  CHECK(std::adjacent_find(names.begin(), names.end()) == names.end());
  CHECK(std::find(names.begin(), names.end(), "msc.vd.weight") != names.end());
  CHECK(std::find(names.begin(), names.end(), "head.weight") != names.end());
  CHECK(all.size() == 6 * 2 + 8 + 2);
}

TEST_CASE("sanet logits shape contract") {
  const SanetParams params = init_sanet(small_config(), 4);
  Rng rng(6);
  for (auto [h, w] : std::initializer_list<std::pair<int, int>>{
           {64, 64}, {16, 16}, {18, 35}}) {
    Tensor image = random_tensor({1, h, w}, rng);
    const Tensor logits = sanet_forward(image, params);
    CHECK(logits.shape() == std::vector<int>{5, h, w});
  }
}

TEST_CASE("zeroed slice kernels reproduce the direction-free baseline") {
  SanetParams full = init_sanet(small_config(), 9);
  SanetParams baseline = init_sanet(small_config({}), 9);
  // same backbone/head weights: copy them over
  REQUIRE(baseline.backbone.size() == full.backbone.size());
  for (size_t i = 0; i < full.backbone.size(); ++i) {
    baseline.backbone[i].weight.value.values() =
        full.backbone[i].weight.value.values();
    baseline.backbone[i].bias.value.values() =
        full.backbone[i].bias.value.values();
  }
  baseline.head_weight.value.values() = full.head_weight.value.values();
  baseline.head_bias.value.values() = full.head_bias.value.values();

  for (auto& [dir, kernel] : full.msc.stages)
    std::fill(kernel.weights.values().begin(), kernel.weights.values().end(),
              0.0);

  Rng rng(10);
  Tensor image = random_tensor({1, 20, 20}, rng);
  CHECK(bitwise_equal(sanet_forward(image, full),
                      sanet_forward(image, baseline)));
}

TEST_CASE("predict_mask argmax and tie rule") {
  Tensor logits = Tensor::zeros({5, 2, 2});
  ClassMask all_zero = predict_mask(logits);
  for (uint8_t v : all_zero.values) CHECK(v == 0);  // ties -> smallest class

  for (int y = 0; y < 2; ++y)
    for (int x = 0; x < 2; ++x) logits.at(3, y, x) = 2.0;
  ClassMask all_three = predict_mask(logits);
  for (uint8_t v : all_three.values) CHECK(v == 3);

  Tensor hand = Tensor::zeros({3, 2, 2});
  hand.at(1, 0, 0) = 1.0;
  hand.at(2, 0, 1) = 0.5;
  hand.at(1, 1, 1) = 0.25;
  hand.at(2, 1, 1) = 0.25;
  const ClassMask mask = predict_mask(hand);
  CHECK(mask.at(0, 0) == 1);
  CHECK(mask.at(0, 1) == 2);
  CHECK(mask.at(1, 0) == 0);
  CHECK(mask.at(1, 1) == 1);  // tie between 1 and 2 -> smaller
}

TEST_CASE("full network gradient check on a 16x16 input") {
  SanetConfig config = small_config();
  const SanetParams params = init_sanet(config, 12);
  Rng rng(13);
  Tensor image = random_tensor({1, 16, 16}, rng);
  Rng probe_rng = rng.split(2);
  auto f = [&](const Tensor& t) {
    Rng local = probe_rng;
    return probe_loss(sanet_forward(t, params), local);
  };
  CHECK(grad_check(f, image, 1e-5).max_rel_error < 1e-5);
}

TEST_CASE("checkpoint container round trip") {
  namespace fs = std::filesystem;
  const fs::path path = fs::temp_directory_path() / "sanet_test.sanc";
  const SanetParams params = init_sanet(small_config(), 21);
  save_checkpoint(path.string(), params);
  const SanetParams loaded = load_checkpoint(path.string());

  CHECK(loaded.config.msc_kernel_size == params.config.msc_kernel_size);
  CHECK(loaded.config.backbone.stage_channels ==
        params.config.backbone.stage_channels);
  const auto pa = params.parameters();
  const auto pb = loaded.parameters();
  REQUIRE(pa.size() == pb.size());
  for (size_t i = 0; i < pa.size(); ++i) {
    CHECK(pa[i].name == pb[i].name);
    CHECK(bitwise_equal(pa[i].value, pb[i].value));
  }

  Rng rng(22);
  Tensor image = random_tensor({1, 16, 16}, rng);
  CHECK(bitwise_equal(sanet_forward(image, params),
                      sanet_forward(image, loaded)));

  // bad magic
  {
    std::ofstream out(path, std::ios::binary);
    out << "NOTASANC checkpoint";
  }
  CHECK_THROWS_AS(load_checkpoint(path.string()), FormatError);
  fs::remove(path);
}
