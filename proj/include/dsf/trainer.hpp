#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "dsf/augment.hpp"
#include "dsf/dataset.hpp"
#include "dsf/loss.hpp"
#include "dsf/metrics.hpp"
#include "dsf/model.hpp"
#include "dsf/param_store.hpp"

namespace dsf {

struct TrainConfig {
  double lr0 = 1e-4;
  double lr_min = 0.0;
  double weight_decay = 1e-5;
  std::size_t batch_size = 16;
  std::size_t epochs = 50;
  std::uint64_t seed = 0;

  void validate() const;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;  // coupled L2: added to the gradient before the moment update
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

struct AdamState {
  std::uint64_t step = 0;
  std::map<std::string, AdamMoments> moments;
};

/// One bias-corrected Adam update of every parameter from its gradient buffer.
/// Throws NumericError naming the first parameter with a non-finite gradient;
/// nothing is updated in that case.
void adam_step(ParamStore& params, AdamState& state, double lr, const AdamConfig& cfg);

/// Single-cycle cosine annealing from lr0 (epoch 0) to lr_min (last epoch).
double cosine_lr(std::size_t epoch, const TrainConfig& cfg);

struct EpochLog {
  std::size_t epoch = 0;
  double lr = 0.0;
  double train_loss = 0.0;
  double val_iou = 0.0;
};

void write_train_log(std::ostream& os, const std::vector<EpochLog>& log);

struct EvalResult {
  ConfusionCounts counts;
  MetricsReport report;  // roc_auc filled when both classes occur in the masks
  RocResult roc;
};

/// Thresholded metrics plus ROC over the model's probabilities on `samples`.
EvalResult evaluate_samples(const SegFusionModel& model, const ParamStore& params, const std::vector<Sample>& samples,
                            double threshold, bool with_roc = true);

struct TrainOptions {
  /// Directory receiving manifest.json + weights.bin for each new best epoch.
  std::filesystem::path checkpoint_dir;
  /// Resolved run configuration stored in the checkpoint manifest.
  nlohmann::json config;
  std::function<void(const EpochLog&)> on_epoch;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::size_t best_epoch = 0;
  double best_val_iou = -1.0;
  ParamStore params;  // parameters after the final epoch
};

/// Seeded shuffle -> augment -> forward -> hybrid loss -> backward -> Adam at
/// cosine_lr(epoch); validation IoU (on 32-bit rounded weights) after each epoch,
/// checkpointing whenever it strictly improves.
TrainResult train(const SegFusionModel& model, const LossConfig& loss, const TrainConfig& cfg,
                  const AugmentationConfig& aug, const std::vector<Sample>& train_set,
                  const std::vector<Sample>& val_set, const TrainOptions& opt);

}  // namespace dsf
