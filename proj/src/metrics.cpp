#include "sanet/metrics.hpp"

#include <string>

namespace sanet {

void ConfusionCounts::merge(const ConfusionCounts& other) {
  if (n_classes != other.n_classes)
    throw DimensionError("ConfusionCounts::merge: class count mismatch");
  for (int c = 0; c < n_classes; ++c) {
    tp[c] += other.tp[c];
    fp[c] += other.fp[c];
    fn[c] += other.fn[c];
  }
}

ConfusionCounts confusion_counts(const ClassMask& pred, const ClassMask& gt,
                                 int n_classes) {
  if (pred.height != gt.height || pred.width != gt.width)
    throw DataError("confusion_counts: mask shape mismatch");
  ConfusionCounts counts(n_classes);
  const long long n = pred.numel();
  for (long long i = 0; i < n; ++i) {
    const uint8_t p = pred.values[static_cast<size_t>(i)];
    const uint8_t g = gt.values[static_cast<size_t>(i)];
    if (p >= n_classes || g >= n_classes)
      throw DataError("confusion_counts: class value out of range");
    if (p == g) {
      ++counts.tp[p];
    } else {
      ++counts.fp[p];
      ++counts.fn[g];
    }
  }
  return counts;
}

std::vector<double> f1_per_class(const ConfusionCounts& counts) {
  std::vector<double> f1(static_cast<size_t>(counts.n_classes), 0.0);
  for (int c = 0; c < counts.n_classes; ++c) {
    const double tp = static_cast<double>(counts.tp[c]);
    const double precision_den = tp + static_cast<double>(counts.fp[c]);
    const double recall_den = tp + static_cast<double>(counts.fn[c]);
    const double precision = precision_den > 0 ? tp / precision_den : 0.0;
    const double recall = recall_den > 0 ? tp / recall_den : 0.0;
    f1[c] = (precision + recall) > 0
                ? 2.0 * precision * recall / (precision + recall)
                : 0.0;
  }
  return f1;
}

std::vector<double> iou_per_class(const ConfusionCounts& counts) {
  std::vector<double> iou(static_cast<size_t>(counts.n_classes), 0.0);
  for (int c = 0; c < counts.n_classes; ++c) {
    const long long denom = counts.tp[c] + counts.fp[c] + counts.fn[c];
    iou[c] = denom > 0 ? static_cast<double>(counts.tp[c]) / denom : 1.0;
  }
  return iou;
}

std::pair<double, double> mean_metrics(const ConfusionCounts& counts) {
  const auto f1 = f1_per_class(counts);
  const auto iou = iou_per_class(counts);
  double sum_f1 = 0.0, sum_iou = 0.0;
  int present = 0;
  for (int c = 0; c < counts.n_classes; ++c) {
    if (counts.absent(c)) continue;
    sum_f1 += f1[c];
    sum_iou += iou[c];
    ++present;
  }
  if (present == 0)
    throw NumericError("mean_metrics: all classes absent, metrics undefined");
  return {sum_f1 / present, sum_iou / present};
}

nlohmann::json evaluation_report(const ConfusionCounts& counts, int n_images) {
  const auto f1 = f1_per_class(counts);
  const auto iou = iou_per_class(counts);
  nlohmann::json per_class = nlohmann::json::object();
  for (int c = 0; c < counts.n_classes; ++c) {
    per_class[std::to_string(c)] = {
        {"f1", f1[c]}, {"iou", iou[c]}, {"absent", counts.absent(c)}};
  }
  const auto [mean_f1, mean_iou] = mean_metrics(counts);
  return {{"per_class", per_class},
          {"mean_f1", mean_f1},
          {"mean_iou", mean_iou},
          {"n_images", n_images}};
}

}  // namespace sanet
