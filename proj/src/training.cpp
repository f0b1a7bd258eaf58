#include "sanet/training.hpp"

#include <algorithm>
#include <cmath>

#include "sanet/ops.hpp"

namespace sanet {

double poly_lr(double initial_lr, int current_iter, int max_iter,
               double power) {
  if (max_iter < 1) throw ConfigError("poly_lr: max_iter must be >= 1");
  if (current_iter < 0 || current_iter > max_iter)
    throw ContractError("poly_lr: current_iter outside [0, max_iter]");
  const double base = 1.0 - static_cast<double>(current_iter) / max_iter;
  return initial_lr * std::pow(base, power);
}

Tensor weighted_cross_entropy(const Tensor& logits, const ClassMask& target,
                              double lambda_bg, double lambda_lane,
                              LossNormalization normalization) {
  if (!logits.defined() || logits.rank() != 3)
    throw DimensionError("weighted_cross_entropy: logits must be CxHxW");
  const int c = logits.dim(0), h = logits.dim(1), w = logits.dim(2);
  if (target.height != h || target.width != w)
    throw DimensionError("weighted_cross_entropy: target shape mismatch");
  if (lambda_bg < 0 || lambda_lane < 0)
    throw ConfigError("weighted_cross_entropy: negative loss weight");
  const long long hw = static_cast<long long>(h) * w;
  for (long long i = 0; i < hw; ++i)
    if (target.values[static_cast<size_t>(i)] >= c)
      throw DataError("weighted_cross_entropy: target class out of range");

  long long n_bg = 0;
  for (long long i = 0; i < hw; ++i)
    if (target.values[static_cast<size_t>(i)] == 0) ++n_bg;
  const long long n_lane = hw - n_bg;

  // Per-pixel coefficient of the pooled loss terms.
  double coeff_bg = 0.0, coeff_lane = 0.0;
  if (normalization == LossNormalization::kPerTermMean) {
    coeff_bg = n_bg > 0 ? lambda_bg / static_cast<double>(n_bg) : 0.0;
    coeff_lane = n_lane > 0 ? lambda_lane / static_cast<double>(n_lane) : 0.0;
  } else {
    coeff_bg = lambda_bg / static_cast<double>(hw);
    coeff_lane = lambda_lane / static_cast<double>(hw);
  }

  const double* in = logits.data();
  double loss = 0.0;
  for (long long i = 0; i < hw; ++i) {
    const uint8_t cls = target.values[static_cast<size_t>(i)];
    const double coeff = cls == 0 ? coeff_bg : coeff_lane;
    if (coeff == 0.0) continue;
    double max_logit = in[i];
    for (int ch = 1; ch < c; ++ch)
      max_logit = std::max(max_logit, in[ch * hw + i]);
    double sum_exp = 0.0;
    for (int ch = 0; ch < c; ++ch) sum_exp += std::exp(in[ch * hw + i] - max_logit);
    const double log_sum = max_logit + std::log(sum_exp);
    loss += coeff * (log_sum - in[cls * hw + i]);
  }
  Tensor out = Tensor::from_data({1}, {loss});

  Tape* tape = Tape::active();
  if (tape && logits.requires_grad()) {
    out.set_requires_grad(true);
    auto l_i = logits.shared();
    auto out_i = out.shared();
    auto tgt = std::make_shared<ClassMask>(target);
    tape->record([=]() {
      if (out_i->grad.empty()) return;
      const double g = out_i->grad[0];
      double* gl = detail::grad_buffer(*l_i);
      const double* lv = l_i->data.data();
      for (long long i = 0; i < hw; ++i) {
        const uint8_t cls = tgt->values[static_cast<size_t>(i)];
        const double coeff = (cls == 0 ? coeff_bg : coeff_lane) * g;
        if (coeff == 0.0) continue;
        double max_logit = lv[i];
        for (int ch = 1; ch < c; ++ch)
          max_logit = std::max(max_logit, lv[ch * hw + i]);
        double sum_exp = 0.0;
        for (int ch = 0; ch < c; ++ch)
          sum_exp += std::exp(lv[ch * hw + i] - max_logit);
        for (int ch = 0; ch < c; ++ch) {
          const double softmax = std::exp(lv[ch * hw + i] - max_logit) / sum_exp;
          gl[ch * hw + i] += coeff * (softmax - (ch == cls ? 1.0 : 0.0));
        }
      }
    });
  }
  return out;
}

void sgd_momentum_step(std::vector<Parameter>& params, OptimState& state,
                       double lr, double momentum) {
  if (state.velocity.empty()) {
    state.velocity.reserve(params.size());
    for (const auto& p : params)
      state.velocity.push_back(Tensor::zeros(p.value.shape()));
  }
  if (state.velocity.size() != params.size())
    throw ContractError("sgd_momentum_step: optimizer state size mismatch");
  for (size_t i = 0; i < params.size(); ++i) {
    Tensor& value = params[i].value;
    if (!value.has_grad())
      throw ContractError("sgd_momentum_step: missing gradient for " +
                          params[i].name);
    if (state.velocity[i].shape() != value.shape())
      throw ContractError("sgd_momentum_step: state shape mismatch for " +
                          params[i].name);
    double* v = state.velocity[i].data();
    double* p = value.data();
    const double* g = value.grad().data();
    const long long n = value.numel();
    for (long long j = 0; j < n; ++j) {
      v[j] = momentum * v[j] + g[j];
      p[j] -= lr * v[j];
    }
  }
}

ConfusionCounts evaluate_dataset(const SanetParams& params,
                                 const Dataset& dataset) {
  ConfusionCounts counts(params.config.n_classes);
  for (const auto& sample : dataset) {
    const Tensor logits = sanet_forward(sample.image, params);
    counts.merge(confusion_counts(predict_mask(logits), sample.mask,
                                  params.config.n_classes));
  }
  return counts;
}

namespace {

/// Mirrors the sample left-right; lane identities swap sides (1<->4, 2<->3).
Sample hflip_sample(const Sample& sample) {
  const int h = sample.image.dim(1), w = sample.image.dim(2);
  Sample flipped;
  flipped.name = sample.name;
  flipped.image = Tensor::zeros({1, h, w});
  flipped.mask = ClassMask(h, w);
  static constexpr uint8_t remap[5] = {0, 4, 3, 2, 1};
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      flipped.image.data()[static_cast<long>(y) * w + x] =
          sample.image.data()[static_cast<long>(y) * w + (w - 1 - x)];
      const uint8_t v = sample.mask.at(y, w - 1 - x);
      flipped.mask.at(y, x) = v < 5 ? remap[v] : v;
    }
  return flipped;
}

}  // namespace

TrainResult train(const TrainConfig& config, const Dataset& train_set,
                  const Dataset& eval_set,
                  const std::function<void(const TrainRecord&)>& on_record) {
  if (train_set.empty() || eval_set.empty())
    throw DataError("train: datasets must be nonempty");
  if (config.max_iter < 1) throw ConfigError("train: max_iter must be >= 1");
  if (config.batch_size < 1) throw ConfigError("train: batch_size must be >= 1");
  if (config.initial_lr <= 0 || config.momentum < 0)
    throw ConfigError("train: rates must be positive");

  TrainResult result;
  result.params = init_sanet(config.network_config(), config.seed);
  auto live = result.params.parameters();
  OptimState opt;
  Rng shuffle_rng = Rng(config.seed).split(1);
  Rng flip_rng = Rng(config.seed).split(2);

  std::vector<size_t> perm(train_set.size());
  for (size_t i = 0; i < perm.size(); ++i) perm[i] = i;
  size_t cursor = perm.size();  // trigger an initial shuffle

  result.best_mean_iou = -1.0;
  for (int iter = 1; iter <= config.max_iter; ++iter) {
    const double lr =
        poly_lr(config.initial_lr, iter - 1, config.max_iter, config.power);

    for (auto& p : live) p.value.zero_grad();
    Tape tape;
    Tensor batch_loss;
    {
      TapeScope scope(tape);
      for (int b = 0; b < config.batch_size; ++b) {
        if (cursor >= perm.size()) {
          shuffle_rng.shuffle(perm);
          cursor = 0;
        }
        const Sample* sample = &train_set[perm[cursor++]];
        Sample flipped;
        if (config.hflip && flip_rng.bernoulli(0.5)) {
          flipped = hflip_sample(*sample);
          sample = &flipped;
        }
        Tensor logits = sanet_forward(sample->image, result.params);
        Tensor loss = weighted_cross_entropy(logits, sample->mask,
                                             config.lambda_bg,
                                             config.lambda_lane,
                                             config.loss_normalization);
        batch_loss = batch_loss.defined() ? add(batch_loss, loss) : loss;
      }
      batch_loss = scale(batch_loss, 1.0 / config.batch_size);
      const double loss_value = batch_loss.item();
      if (!std::isfinite(loss_value))
        throw NumericError("train: non-finite loss at iteration " +
                           std::to_string(iter));
      backward(tape, batch_loss);
    }
    sgd_momentum_step(live, opt, lr, config.momentum);

    TrainRecord record;
    record.iter = iter;
    record.lr = lr;
    record.loss = batch_loss.item();
    if (iter % config.eval_interval == 0 || iter == config.max_iter) {
      const auto counts = evaluate_dataset(result.params, eval_set);
      const auto [mean_f1, mean_iou] = mean_metrics(counts);
      record.mean_f1 = mean_f1;
      record.mean_iou = mean_iou;
      if (mean_iou > result.best_mean_iou) {
        result.best_mean_iou = mean_iou;
        result.best_iter = iter;
        result.best_params = result.params.clone();
      }
    }
    if (on_record) on_record(record);
    result.log.push_back(record);
  }
  if (result.best_iter == 0) {
    result.best_params = result.params.clone();
    result.best_iter = config.max_iter;
  }
  return result;
}

}  // namespace sanet
