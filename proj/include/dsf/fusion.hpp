#pragma once

#include <utility>

#include "dsf/param_store.hpp"
#include "dsf/rng.hpp"
#include "dsf/tensor.hpp"

namespace dsf {

struct FusionConfig {
  double threshold = 0.5;
  std::size_t reduction = 4;  // r: attention bottleneck is C / r wide

  void validate() const;
};

inline constexpr const char* kAttentionW1 = "fusion.attention.w1";
inline constexpr const char* kAttentionW2 = "fusion.attention.w2";

/// Squeeze-style channel attention weights: W1 is (C/r, C), W2 is (C, C/r),
/// both stored as 1x1 convolution kernels.
struct AttentionParams {
  Tensor w1;
  Tensor w2;

  std::size_t channels() const { return w1.c(); }
  std::size_t hidden() const { return w1.n(); }
  void validate() const;
};

struct AttentionTrace {
  Tensor pooled;      // F_gap(X), (n, C, 1, 1)
  Tensor hidden_pre;  // W1 F_gap(X) before relu
  Tensor hidden;      // relu(...)
  Tensor weights;     // Mc, (n, C, 1, 1)
};

/// Mc(X) = sigmoid(W2 relu(W1 gap(X))), one gate per (batch item, channel).
Tensor channel_attention(const Tensor& x, const AttentionParams& p, AttentionTrace* trace = nullptr);

struct AttentionGrads {
  Tensor dx;
  Tensor dw1;
  Tensor dw2;
};
AttentionGrads channel_attention_backward(const Tensor& x, const AttentionParams& p, const AttentionTrace& trace,
                                          const Tensor& gmc);

struct FusionTrace {
  std::size_t seg_channels = 0;
  Tensor fused;     // concat(f_seg, f_dl)
  AttentionTrace attention;
  Tensor weighted;  // fused re-weighted by Mc
  Tensor prob;
};

/// Total fused channel count C = seg + deeplab branch outputs.
void fusion_init(ParamStore& params, std::size_t channels, const FusionConfig& cfg, Rng& rng);

AttentionParams attention_params(const ParamStore& params);

/// concat -> channel attention re-weighting -> 1x1 conv to one channel -> sigmoid.
Tensor fuse(const Tensor& f_seg, const Tensor& f_dl, const ParamStore& params, const FusionConfig& cfg,
            FusionTrace* trace = nullptr);

/// Returns gradients for (f_seg, f_dl); accumulates fusion parameter grads.
std::pair<Tensor, Tensor> fuse_backward(const FusionTrace& trace, const Tensor& gprob, ParamStore& params);

/// 1 where prob >= threshold, else 0.
Tensor binarize(const Tensor& prob, double threshold);

}  // namespace dsf
