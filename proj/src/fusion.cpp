#include "dsf/fusion.hpp"

#include <string>

#include "dsf/errors.hpp"
#include "dsf/layers.hpp"
#include "dsf/ops.hpp"

namespace dsf {
namespace {

const ConvLayer kHead{"fusion.head", Conv2dOptions{}};
const Tensor kNoBias;

}  // namespace

void FusionConfig::validate() const {
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("fusion.threshold must lie strictly in (0, 1)");
  if (reduction == 0) throw ConfigError("fusion.reduction must be positive");
}

void AttentionParams::validate() const {
  const Shape& s1 = w1.shape();
  const Shape& s2 = w2.shape();
  if (s1.h != 1 || s1.w != 1 || s2.h != 1 || s2.w != 1) throw ShapeError("attention weights must be 1x1 kernels");
  if (s2.n != s1.c || s2.c != s1.n) {
    throw ShapeError("attention: W1 " + s1.str() + " and W2 " + s2.str() + " are inconsistent");
  }
}

Tensor channel_attention(const Tensor& x, const AttentionParams& p, AttentionTrace* trace) {
  p.validate();
  if (x.c() != p.channels()) {
    throw ShapeError("channel_attention: input has " + std::to_string(x.c()) + " channels, weights expect " +
                     std::to_string(p.channels()));
  }
  Tensor pooled = global_avg_pool(x);
  Tensor hidden_pre = conv2d(pooled, p.w1, kNoBias, Conv2dOptions{});
  Tensor hidden = relu(hidden_pre);
  Tensor mc = sigmoid(conv2d(hidden, p.w2, kNoBias, Conv2dOptions{}));
  if (trace) {
    trace->pooled = std::move(pooled);
    trace->hidden_pre = std::move(hidden_pre);
    trace->hidden = std::move(hidden);
    trace->weights = mc;
  }
  return mc;
}

AttentionGrads channel_attention_backward(const Tensor& x, const AttentionParams& p, const AttentionTrace& trace,
                                          const Tensor& gmc) {
  AttentionGrads out;
  Tensor g = sigmoid_backward(trace.weights, gmc);
  Conv2dGrads g2 = conv2d_backward(trace.hidden, p.w2, kNoBias, g, Conv2dOptions{});
  out.dw2 = std::move(g2.dw);
  g = relu_backward(trace.hidden_pre, g2.dx);
  Conv2dGrads g1 = conv2d_backward(trace.pooled, p.w1, kNoBias, g, Conv2dOptions{});
  out.dw1 = std::move(g1.dw);
  out.dx = global_avg_pool_backward(g1.dx, x.shape());
  return out;
}

void fusion_init(ParamStore& params, std::size_t channels, const FusionConfig& cfg, Rng& rng) {
  cfg.validate();
  if (channels % cfg.reduction != 0) {
    throw ConfigError("fused channel count " + std::to_string(channels) + " is not divisible by reduction " +
                      std::to_string(cfg.reduction));
  }
  const std::size_t hidden = channels / cfg.reduction;
  params.add(kAttentionW1, he_normal(Shape{hidden, channels, 1, 1}, channels, rng));
  params.add(kAttentionW2, he_normal(Shape{channels, hidden, 1, 1}, hidden, rng, 1.0));
  kHead.init(params, channels, 1, 1, rng, 1.0);
}

AttentionParams attention_params(const ParamStore& params) {
  return {params.value(kAttentionW1), params.value(kAttentionW2)};
}

Tensor fuse(const Tensor& f_seg, const Tensor& f_dl, const ParamStore& params, const FusionConfig& cfg,
            FusionTrace* trace) {
  (void)cfg;
  const Shape& a = f_seg.shape();
  const Shape& b = f_dl.shape();
  if (a.n != b.n || a.h != b.h || a.w != b.w) {
    throw ShapeError("fuse: branch feature maps disagree, " + a.str() + " vs " + b.str());
  }
  Tensor fused = concat_channels(f_seg, f_dl);
  AttentionTrace at;
  Tensor mc = channel_attention(fused, attention_params(params), &at);
  Tensor weighted = scale_channels(fused, mc);
  Tensor prob = sigmoid(kHead.forward(weighted, params));
  if (trace) {
    trace->seg_channels = a.c;
    trace->fused = std::move(fused);
    trace->attention = std::move(at);
    trace->weighted = std::move(weighted);
    trace->prob = prob;
  }
  return prob;
}

std::pair<Tensor, Tensor> fuse_backward(const FusionTrace& trace, const Tensor& gprob, ParamStore& params) {
  Tensor g = sigmoid_backward(trace.prob, gprob);
  g = kHead.backward(trace.weighted, g, params);
  ScaleChannelsGrads gs = scale_channels_backward(trace.fused, trace.attention.weights, g);
  AttentionGrads ga = channel_attention_backward(trace.fused, attention_params(params), trace.attention, gs.ds);
  params.grad(kAttentionW1) += ga.dw1;
  params.grad(kAttentionW2) += ga.dw2;
  gs.dx += ga.dx;
  return split_channels(gs.dx, trace.seg_channels);
}

Tensor binarize(const Tensor& prob, double threshold) {
  Tensor mask(prob.shape());
  for (std::size_t i = 0; i < prob.size(); ++i) mask[i] = prob[i] >= threshold ? 1.0 : 0.0;
  return mask;
}

}  // namespace dsf
