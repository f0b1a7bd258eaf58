#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "sanet/metrics.hpp"
#include "sanet/rng.hpp"

using namespace sanet;

namespace {

ClassMask mask_from(int h, int w, std::initializer_list<int> values) {
  ClassMask mask(h, w);
  size_t i = 0;
  for (int v : values) mask.values[i++] = static_cast<uint8_t>(v);
  return mask;
}

ClassMask random_mask(int h, int w, int n_classes, Rng& rng) {
  ClassMask mask(h, w);
  for (auto& v : mask.values)
    v = static_cast<uint8_t>(rng.uniform_int(0, n_classes - 1));
  return mask;
}

}  // namespace

TEST_CASE("confusion counts") {
  SUBCASE("perfect prediction has no errors") {
    Rng rng(1);
    ClassMask gt = random_mask(6, 6, 5, rng);
    auto counts = confusion_counts(gt, gt, 5);
    for (int c = 0; c < 5; ++c) {
      CHECK(counts.fp[c] == 0);
      CHECK(counts.fn[c] == 0);
    }
  }
  SUBCASE("hand count on a 2x2 disagreement") {
    ClassMask pred = mask_from(2, 2, {0, 0, 0, 0});
    ClassMask gt = mask_from(2, 2, {1, 1, 1, 1});
    auto counts = confusion_counts(pred, gt, 5);
    CHECK(counts.tp[0] == 0);
    CHECK(counts.fp[0] == 4);
    CHECK(counts.fn[1] == 4);
    CHECK(counts.tp[1] == 0);
  }
  SUBCASE("absent class has all-zero counts") {
    ClassMask pred = mask_from(1, 2, {0, 1});
    ClassMask gt = mask_from(1, 2, {0, 1});
    auto counts = confusion_counts(pred, gt, 5);
    CHECK(counts.absent(3));
    CHECK(counts.tp[3] + counts.fp[3] + counts.fn[3] == 0);
  }
  SUBCASE("shape mismatch raises a data error") {
    CHECK_THROWS_AS(
        confusion_counts(ClassMask(2, 2), ClassMask(2, 3), 5), DataError);
  }
  SUBCASE("out-of-range class raises a data error") {
    ClassMask bad = mask_from(1, 1, {7});
    CHECK_THROWS_AS(confusion_counts(bad, ClassMask(1, 1), 5), DataError);
  }
}

TEST_CASE("f1 and iou per class") {
  ConfusionCounts counts(3);
  counts.tp = {10, 0, 3};
  counts.fp = {0, 2, 1};
  counts.fn = {0, 3, 2};
  const auto f1 = f1_per_class(counts);
  CHECK(f1[0] == 1.0);
  CHECK(f1[1] == 0.0);  // zero-division rule
  CHECK(f1[2] == doctest::Approx(2.0 / 3.0).epsilon(1e-15));
  const auto iou = iou_per_class(counts);
  CHECK(iou[0] == 1.0);
  CHECK(iou[1] == 0.0);
  CHECK(iou[2] == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("disjoint nonempty sets score zero") {
  ClassMask pred = mask_from(1, 4, {1, 1, 0, 0});
  ClassMask gt = mask_from(1, 4, {0, 0, 1, 1});
  auto counts = confusion_counts(pred, gt, 2);
  CHECK(iou_per_class(counts)[1] == 0.0);
}

TEST_CASE("mean metrics over non-absent classes") {
  SUBCASE("perfect corpus") {
    Rng rng(2);
    ClassMask gt = random_mask(8, 8, 5, rng);
    auto counts = confusion_counts(gt, gt, 5);
    const auto [mean_f1, mean_iou] = mean_metrics(counts);
    CHECK(mean_f1 == 1.0);
    CHECK(mean_iou == 1.0);
  }
  SUBCASE("absent classes are excluded from the mean") {
    ConfusionCounts counts(4);
    counts.tp = {1, 0, 0, 0};   // class 0: IoU 0.5
    counts.fp = {1, 0, 0, 0};
    counts.fn = {0, 0, 0, 0};
    counts.tp[1] = 5;           // class 1: IoU 1.0
    const auto [mean_f1, mean_iou] = mean_metrics(counts);
    CHECK(mean_iou == doctest::Approx(0.75).epsilon(1e-15));
    CHECK(mean_f1 == doctest::Approx((2.0 / 3.0 + 1.0) / 2).epsilon(1e-15));
  }
  SUBCASE("all classes absent is an error") {
    ConfusionCounts counts(3);
    CHECK_THROWS_AS(mean_metrics(counts), NumericError);
  }
}

TEST_CASE("dice-jaccard identity") {
  Rng rng(3);
  for (int trial = 0; trial < 10; ++trial) {
    ClassMask pred = random_mask(9, 7, 5, rng);
    ClassMask gt = random_mask(9, 7, 5, rng);
    auto counts = confusion_counts(pred, gt, 5);
    const auto f1 = f1_per_class(counts);
    const auto iou = iou_per_class(counts);
    for (int c = 0; c < 5; ++c) {
      if (counts.absent(c)) continue;
      CHECK(f1[c] == doctest::Approx(2.0 * iou[c] / (1.0 + iou[c])).epsilon(1e-14));
    }
  }
}

TEST_CASE("adding a correct pixel never hurts") {
  Rng rng(4);
  for (int trial = 0; trial < 20; ++trial) {
    ConfusionCounts counts(3);
    for (int c = 0; c < 3; ++c) {
      counts.tp[c] = static_cast<long long>(rng.below(20));
      counts.fp[c] = static_cast<long long>(rng.below(20));
      counts.fn[c] = static_cast<long long>(rng.below(20));
    }
    const int c = static_cast<int>(rng.below(3));
    const auto f1_before = f1_per_class(counts)[c];
    const auto iou_before = iou_per_class(counts)[c];
    ConfusionCounts grown = counts;
    grown.tp[c] += 1;
    CHECK(f1_per_class(grown)[c] >= f1_before);
    CHECK(iou_per_class(grown)[c] >= iou_before);
  }
}

TEST_CASE("corpus aggregation is merge of per-image counts") {
  Rng rng(5);
  ClassMask pred_a = random_mask(4, 4, 5, rng);
  ClassMask gt_a = random_mask(4, 4, 5, rng);
  ClassMask pred_b = random_mask(4, 4, 5, rng);
  ClassMask gt_b = random_mask(4, 4, 5, rng);

  auto merged = confusion_counts(pred_a, gt_a, 5);
  merged.merge(confusion_counts(pred_b, gt_b, 5));

  // concatenate both images side by side
  ClassMask pred_cat(4, 8), gt_cat(4, 8);
  for (int y = 0; y < 4; ++y)
    for (int x = 0; x < 4; ++x) {
      pred_cat.at(y, x) = pred_a.at(y, x);
      pred_cat.at(y, x + 4) = pred_b.at(y, x);
      gt_cat.at(y, x) = gt_a.at(y, x);
      gt_cat.at(y, x + 4) = gt_b.at(y, x);
    }
  auto corpus = confusion_counts(pred_cat, gt_cat, 5);
  for (int c = 0; c < 5; ++c) {
    CHECK(corpus.tp[c] == merged.tp[c]);
    CHECK(corpus.fp[c] == merged.fp[c]);
    CHECK(corpus.fn[c] == merged.fn[c]);
  }
}

TEST_CASE("evaluation report layout") {
  Rng rng(6);
  ClassMask gt = random_mask(5, 5, 5, rng);
  auto report = evaluation_report(confusion_counts(gt, gt, 5), 1);
  CHECK(report["mean_f1"] == 1.0);
  CHECK(report["mean_iou"] == 1.0);
  CHECK(report["n_images"] == 1);
  CHECK(report["per_class"].size() == 5);
  CHECK(report["per_class"]["0"].contains("absent"));
}
