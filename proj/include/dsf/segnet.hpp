#pragma once

#include <span>
#include <vector>

#include "dsf/ops.hpp"
#include "dsf/param_store.hpp"
#include "dsf/rng.hpp"

namespace dsf {

struct SegNetConfig {
  std::vector<std::size_t> stage_channels{16, 32, 64};
  std::size_t kernel_size = 3;
  std::size_t out_channels = 16;

  void validate() const;
  std::size_t stages() const { return stage_channels.size(); }
};

/// Intermediate values kept for the backward pass.
struct SegNetTrace {
  std::vector<Tensor> enc_in;    // stage input (x, then pooled maps)
  std::vector<Tensor> enc_pre;   // conv output before relu, per stage
  std::vector<Tensor> enc_act;   // relu output (pooled next), per stage
  std::vector<Tensor> dec_in;    // unpooled tensor fed to the decoder conv, per stage
  std::vector<Tensor> dec_pre;   // decoder conv output before relu, per stage
};

struct SegNetEncoding {
  Tensor bottleneck;
  std::vector<PoolIndexMap> indices;  // encoding order
};

void segnet_init(ParamStore& params, const SegNetConfig& cfg, std::size_t in_channels, Rng& rng);

/// Per stage: conv -> relu -> maxpool2x2, recording pooling indices.
SegNetEncoding segnet_encode(const Tensor& x, const ParamStore& params, const SegNetConfig& cfg,
                             SegNetTrace* trace = nullptr);

/// Per stage in reverse: maxunpool2x2 with the paired indices -> conv -> relu.
/// The last decoder conv emits cfg.out_channels at input resolution.
Tensor segnet_decode(const Tensor& bottleneck, std::span<const PoolIndexMap> indices, const ParamStore& params,
                     const SegNetConfig& cfg, SegNetTrace* trace = nullptr);

Tensor segnet_forward(const Tensor& x, const ParamStore& params, const SegNetConfig& cfg,
                      SegNetTrace* trace = nullptr, std::vector<PoolIndexMap>* indices = nullptr);

/// Backward through a traced forward; accumulates parameter grads, returns dL/dx
/// (empty when !need_dx).
Tensor segnet_backward(const SegNetTrace& trace, std::span<const PoolIndexMap> indices, const Tensor& gy,
                       ParamStore& params, const SegNetConfig& cfg, bool need_dx = true);

}  // namespace dsf
