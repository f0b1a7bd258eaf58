#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "sanet/dataset.hpp"
#include "sanet/metrics.hpp"
#include "sanet/network.hpp"

namespace sanet {

/// How the two loss terms are normalized: each term averaged over its own
/// pixel set, or both summed and divided by the total pixel count.
enum class LossNormalization { kPerTermMean, kTotalPixelMean };

struct TrainConfig {
  int batch_size = 4;
  double initial_lr = 0.01;
  double power = 0.9;
  int max_iter = 2000;
  double momentum = 0.9;
  double lambda_bg = 0.4;
  double lambda_lane = 1.0;
  uint64_t seed = 0;
  int kernel_size = 9;
  std::vector<Direction> directions{kCanonicalDirections.begin(),
                                    kCanonicalDirections.end()};
  std::array<int, 3> channels = {16, 32, 64};
  int n_classes = 5;
  int eval_interval = 100;
  LossNormalization loss_normalization = LossNormalization::kPerTermMean;
  bool hflip = false;

  SanetConfig network_config() const {
    SanetConfig cfg;
    cfg.backbone.stage_channels = channels;
    cfg.n_classes = n_classes;
    cfg.msc_kernel_size = kernel_size;
    cfg.msc_directions = directions;
    return cfg;
  }
};

/// Per-parameter velocity buffers for SGD with momentum.
struct OptimState {
  std::vector<Tensor> velocity;
};

/// lr = initial_lr * (1 - current_iter/max_iter)^power,
/// 0 <= current_iter <= max_iter.
double poly_lr(double initial_lr, int current_iter, int max_iter, double power);

/// L = lambda_bg * L_b + lambda_lane * L_l over the background pixel set
/// (class 0) and the pooled lane pixel set (classes >= 1); a term with no
/// pixels contributes 0. Differentiable w.r.t. the logits.
Tensor weighted_cross_entropy(
    const Tensor& logits, const ClassMask& target, double lambda_bg,
    double lambda_lane,
    LossNormalization normalization = LossNormalization::kPerTermMean);

/// Classical momentum: v <- momentum*v + grad; p <- p - lr*v.
/// Parameters without an accumulated gradient raise ContractError.
void sgd_momentum_step(std::vector<Parameter>& params, OptimState& state,
                       double lr, double momentum);

struct TrainRecord {
  int iter = 0;
  double lr = 0.0;
  double loss = 0.0;
  std::optional<double> mean_f1;
  std::optional<double> mean_iou;
};

struct TrainResult {
  SanetParams params;       // after the last iteration
  SanetParams best_params;  // best eval mean IoU
  double best_mean_iou = 0.0;
  int best_iter = 0;
  std::vector<TrainRecord> log;
};

/// Evaluates corpus-level confusion counts of `params` over `dataset`.
ConfusionCounts evaluate_dataset(const SanetParams& params,
                                 const Dataset& dataset);

/// Runs the full optimization loop: seeded epoch shuffles, poly learning
/// rate, SGD with momentum, eval every `eval_interval` iterations (and at
/// the end), best checkpoint by mean IoU. A non-finite loss aborts with
/// NumericError naming the iteration. `on_record` (when set) sees every
/// log record as it is produced.
TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& eval_set,
                  const std::function<void(const TrainRecord&)>& on_record = {});

}  // namespace sanet
