#pragma once

#include <utility>
#include <vector>

#include "sanet/mask.hpp"

#include "json.hpp"

namespace sanet {

/// One-vs-rest pixel counts per class. Counts are additive across images,
/// so corpus-level metrics come from summing per-image counts first.
struct ConfusionCounts {
  int n_classes = 0;
  std::vector<long long> tp, fp, fn;

  ConfusionCounts() = default;
  explicit ConfusionCounts(int classes)
      : n_classes(classes), tp(classes, 0), fp(classes, 0), fn(classes, 0) {}

  void merge(const ConfusionCounts& other);
  /// TP + FP + FN == 0: the class appears in neither prediction nor truth.
  bool absent(int cls) const {
    return tp[cls] + fp[cls] + fn[cls] == 0;
  }
};

ConfusionCounts confusion_counts(const ClassMask& pred, const ClassMask& gt,
                                 int n_classes);

/// F1 per class; any 0/0 is defined as 0.
std::vector<double> f1_per_class(const ConfusionCounts& counts);

/// IoU per class; 0/0 (absent class) is defined as 1 and flagged via
/// ConfusionCounts::absent so means can exclude it.
std::vector<double> iou_per_class(const ConfusionCounts& counts);

/// Unweighted means of F1 and IoU over the non-absent classes.
/// Throws NumericError when every class is absent.
std::pair<double, double> mean_metrics(const ConfusionCounts& counts);

/// Evaluation report: {per_class: {"<c>": {f1, iou, absent}},
///  mean_f1, mean_iou, n_images}.
nlohmann::json evaluation_report(const ConfusionCounts& counts, int n_images);

}  // namespace sanet
