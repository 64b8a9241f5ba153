#include "dsf/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <numbers>
#include <numeric>
#include <ostream>

#include "dsf/checkpoint.hpp"
#include "dsf/errors.hpp"
#include "dsf/fusion.hpp"
#include "dsf/rng.hpp"

namespace dsf {
namespace {

constexpr std::uint64_t kShuffleStream = 0x5348554646ULL;
constexpr std::uint64_t kAugmentStream = 0x4155474dULL;

}  // namespace

void TrainConfig::validate() const {
  if (!(lr0 > lr_min && lr_min >= 0.0)) throw ConfigError("train: require lr0 > lr_min >= 0");
  if (!(weight_decay >= 0.0)) throw ConfigError("train.weight_decay must be non-negative");
  if (batch_size < 1) throw ConfigError("train.batch_size must be >= 1");
  if (epochs < 1) throw ConfigError("train.epochs must be >= 1");
}

void adam_step(ParamStore& params, AdamState& state, double lr, const AdamConfig& cfg) {
  for (const auto& [name, p] : params) {
    if (!p.grad.all_finite()) throw NumericError("non-finite gradient in parameter '" + name + "'");
  }
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double bias1 = 1.0 - std::pow(cfg.beta1, t);
  const double bias2 = 1.0 - std::pow(cfg.beta2, t);
  for (auto& [name, p] : params) {
    auto it = state.moments.find(name);
    if (it == state.moments.end()) {
      it = state.moments.emplace(name, AdamMoments{Tensor(p.value.shape()), Tensor(p.value.shape())}).first;
    }
    Tensor& m = it->second.m;
    Tensor& v = it->second.v;
    for (std::size_t i = 0; i < p.value.size(); ++i) {
      const double g = p.grad[i] + cfg.weight_decay * p.value[i];
      m[i] = cfg.beta1 * m[i] + (1.0 - cfg.beta1) * g;
      v[i] = cfg.beta2 * v[i] + (1.0 - cfg.beta2) * g * g;
      const double m_hat = m[i] / bias1;
      const double v_hat = v[i] / bias2;
      p.value[i] -= lr * m_hat / (std::sqrt(v_hat) + cfg.eps);
    }
  }
}

double cosine_lr(std::size_t epoch, const TrainConfig& cfg) {
  if (cfg.epochs <= 1) return cfg.lr0;
  const double phase = std::numbers::pi * static_cast<double>(epoch) / static_cast<double>(cfg.epochs - 1);
  return cfg.lr_min + 0.5 * (cfg.lr0 - cfg.lr_min) * (1.0 + std::cos(phase));
}

void write_train_log(std::ostream& os, const std::vector<EpochLog>& log) {
  os << "epoch,lr,train_loss,val_iou\n";
  char buf[160];
  for (const EpochLog& e : log) {
    std::snprintf(buf, sizeof buf, "%zu,%.17g,%.17g,%.17g\n", e.epoch, e.lr, e.train_loss, e.val_iou);
    os << buf;
  }
}

EvalResult evaluate_samples(const SegFusionModel& model, const ParamStore& params, const std::vector<Sample>& samples,
                            double threshold, bool with_roc) {
  if (samples.empty()) throw DataError("evaluate: no samples");
  EvalResult r;
  std::vector<double> scores;
  std::vector<double> labels;
  for (const Sample& s : samples) {
    const Tensor prob = model.forward(s.image, params);
    r.counts += confusion(binarize(prob, threshold), s.mask);
    if (with_roc) {
      scores.insert(scores.end(), prob.values().begin(), prob.values().end());
      labels.insert(labels.end(), s.mask.values().begin(), s.mask.values().end());
    }
  }
  r.report = metrics(r.counts);
  const bool both_classes = r.counts.tp + r.counts.fn > 0 && r.counts.tn + r.counts.fp > 0;
  if (with_roc && both_classes) {
    r.roc = roc_curve(scores, labels);
    r.report.roc_auc = r.roc.auc;
  }
  return r;
}

TrainResult train(const SegFusionModel& model, const LossConfig& loss, const TrainConfig& cfg,
                  const AugmentationConfig& aug, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& opt) {
  cfg.validate();
  loss.validate();
  aug.validate();
  if (train_set.empty()) throw DataError("train: training split is empty");
  if (val_set.empty()) throw DataError("train: validation split is empty");

  TrainResult result;
  result.params = model.init_params(cfg.seed);
  AdamState adam;
  const AdamConfig adam_cfg{0.9, 0.999, 1e-8, cfg.weight_decay};
  const double threshold = model.config().fusion.threshold;

  std::vector<std::size_t> order(train_set.size());
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cosine_lr(epoch, cfg);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng shuffle(derive_seed(cfg.seed, kShuffleStream, epoch));
    for (std::size_t i = order.size() - 1; i > 0; --i) std::swap(order[i], order[shuffle.below(i + 1)]);

    double loss_sum = 0.0;
    std::size_t batch_index = 0;
    for (std::size_t start = 0; start < order.size(); start += cfg.batch_size, ++batch_index) {
      const std::size_t end = std::min(order.size(), start + cfg.batch_size);
      std::vector<Tensor> images;
      std::vector<Tensor> masks;
      for (std::size_t k = start; k < end; ++k) {
        Rng aug_rng(derive_seed(derive_seed(cfg.seed, kAugmentStream, epoch), 0, k));
        auto [img, m] = augment(train_set[order[k]].image, train_set[order[k]].mask, aug, aug_rng);
        images.push_back(std::move(img));
        masks.push_back(std::move(m));
      }
      const Tensor x = stack_batch(images);
      const Tensor g = stack_batch(masks);

      ModelTrace trace;
      const Tensor prob = model.forward(x, result.params, &trace);
      const double value = total_loss(prob, g, loss);
      if (!std::isfinite(value)) {
        throw NumericError("non-finite loss at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
      loss_sum += value * static_cast<double>(end - start);
      result.params.zero_grad();
      model.backward(trace, total_loss_grad(prob, g, loss), result.params);
      try {
        adam_step(result.params, adam, lr, adam_cfg);
      } catch (const NumericError& ex) {
        throw NumericError(std::string(ex.what()) + " at epoch " + std::to_string(epoch) + ", batch " +
                           std::to_string(batch_index));
      }
    }

    // Validate the weights exactly as a checkpoint stores them.
    const ParamStore stored = round_to_float32(result.params);
    const double val_iou = evaluate_samples(model, stored, val_set, threshold, false).report.iou;
    EpochLog entry{epoch, lr, loss_sum / static_cast<double>(order.size()), val_iou};
    result.log.push_back(entry);
    if (val_iou > result.best_val_iou) {
      result.best_val_iou = val_iou;
      result.best_epoch = epoch;
      if (!opt.checkpoint_dir.empty()) {
        save_checkpoint(opt.checkpoint_dir, result.params, CheckpointMeta{epoch, val_iou, cfg.seed}, opt.config);
      }
    }
    if (opt.on_epoch) opt.on_epoch(entry);
  }
  return result;
}

}  // namespace dsf
