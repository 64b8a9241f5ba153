#include "dsf/loss.hpp"

#include <algorithm>
#include <cmath>

#include "dsf/errors.hpp"

namespace dsf {
namespace {

void require_match(const Tensor& p, const Tensor& g, const char* what) {
  if (p.shape() != g.shape()) {
    throw ShapeError(std::string(what) + ": prediction " + p.shape().str() + " vs target " + g.shape().str());
  }
  if (p.size() == 0) throw ShapeError(std::string(what) + ": empty tensors");
}

struct DiceSums {
  double inter = 0.0;
  double sum_p = 0.0;
  double sum_g = 0.0;
};

DiceSums dice_sums(const Tensor& p, const Tensor& g, std::size_t item) {
  const std::size_t len = p.c() * p.h() * p.w();
  const double* pp = p.data() + item * len;
  const double* gg = g.data() + item * len;
  DiceSums s;
  for (std::size_t i = 0; i < len; ++i) {
    s.inter += pp[i] * gg[i];
    s.sum_p += pp[i];
    s.sum_g += gg[i];
  }
  return s;
}

}  // namespace

void LossConfig::validate() const {
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("loss.alpha must lie in [0, 1]");
  if (!(dice_smooth > 0.0)) throw ConfigError("loss.dice_smooth must be positive");
  if (!(prob_clamp > 0.0 && prob_clamp < 0.5)) throw ConfigError("loss.prob_clamp must lie in (0, 0.5)");
}

double bce_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
  require_match(p, g, "bce_loss");
  const double lo = cfg.prob_clamp;
  const double hi = 1.0 - cfg.prob_clamp;
  double sum = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(p[i], lo, hi);
    sum -= g[i] * std::log(q) + (1.0 - g[i]) * std::log(1.0 - q);
  }
  return sum / static_cast<double>(p.size());
}

Tensor bce_loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
  require_match(p, g, "bce_loss");
  const double lo = cfg.prob_clamp;
  const double hi = 1.0 - cfg.prob_clamp;
  const double inv_n = 1.0 / static_cast<double>(p.size());
  Tensor grad(p.shape());
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] < lo || p[i] > hi) continue;  // clamp is flat here
    grad[i] = (-g[i] / p[i] + (1.0 - g[i]) / (1.0 - p[i])) * inv_n;
  }
  return grad;
}

double dice_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
  require_match(p, g, "dice_loss");
  const double eps = cfg.dice_smooth;
  double total = 0.0;
  for (std::size_t b = 0; b < p.n(); ++b) {
    const DiceSums s = dice_sums(p, g, b);
    total += 1.0 - (2.0 * s.inter + eps) / (s.sum_p + s.sum_g + eps);
  }
  return total / static_cast<double>(p.n());
}

Tensor dice_loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
  require_match(p, g, "dice_loss");
  const double eps = cfg.dice_smooth;
  const double inv_b = 1.0 / static_cast<double>(p.n());
  const std::size_t len = p.c() * p.h() * p.w();
  Tensor grad(p.shape());
  for (std::size_t b = 0; b < p.n(); ++b) {
    const DiceSums s = dice_sums(p, g, b);
    const double num = 2.0 * s.inter + eps;
    const double den = s.sum_p + s.sum_g + eps;
    const double* gg = g.data() + b * len;
    double* out = grad.data() + b * len;
    for (std::size_t i = 0; i < len; ++i) {
      // d/dp_i of -(num/den)
      out[i] = -(2.0 * gg[i] * den - num) / (den * den) * inv_b;
    }
  }
  return grad;
}

double total_loss(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
  return cfg.alpha * bce_loss(p, g, cfg) + (1.0 - cfg.alpha) * dice_loss(p, g, cfg);
}

Tensor total_loss_grad(const Tensor& p, const Tensor& g, const LossConfig& cfg) {
  Tensor grad = bce_loss_grad(p, g, cfg);
  grad *= cfg.alpha;
  Tensor dice = dice_loss_grad(p, g, cfg);
  dice *= 1.0 - cfg.alpha;
  grad += dice;
  return grad;
}

}  // namespace dsf
