#pragma once

#include "dsf/tensor.hpp"

namespace dsf {

struct LossConfig {
  double alpha = 0.5;       // weight of BCE; Dice gets 1 - alpha
  double dice_smooth = 1.0;
  double prob_clamp = 1e-7;  // probabilities clamped to [c, 1 - c] before logs

  void validate() const;
};

/// Mean binary cross-entropy over all pixels.
double bce_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg);
Tensor bce_loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg);

/// 1 - (2 sum(p g) + eps) / (sum p + sum g + eps) per batch item, averaged over the batch.
double dice_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg);
Tensor dice_loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg);

/// alpha * BCE + (1 - alpha) * Dice.
double total_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg);
Tensor total_loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg);

}  // namespace dsf
