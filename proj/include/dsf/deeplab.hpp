#pragma once

#include <vector>

#include "dsf/param_store.hpp"
#include "dsf/rng.hpp"
#include "dsf/tensor.hpp"

namespace dsf {

struct ASPPConfig {
  std::vector<std::size_t> dilation_rates{1, 2, 4};
  std::size_t branch_channels = 16;
  std::size_t entry_channels = 32;
  std::size_t output_stride = 4;
  std::size_t out_channels = 16;

  void validate() const;
  /// log2(output_stride): number of stride-2 entry convolutions.
  std::size_t entry_layers() const;
  /// Channel count after entry layer i; the last one is entry_channels.
  std::size_t entry_width(std::size_t layer) const;
};

struct ASPPTrace {
  Tensor input;
  std::vector<Tensor> rate_pre;  // per dilation rate, before relu
  Tensor pooled;                 // global average of the input, (n, c, 1, 1)
  Tensor image_pre;              // 1x1 conv of the pooled vector, before relu
  Tensor concat;                 // all activated paths, rates first then image path
};

struct DeepLabTrace {
  std::vector<Tensor> entry_in;
  std::vector<Tensor> entry_pre;
  ASPPTrace aspp;
  Shape aspp_out;
};

void deeplab_init(ParamStore& params, const ASPPConfig& cfg, std::size_t in_channels, Rng& rng);

/// Stride-2 conv+relu layers down to 1/output_stride resolution.
Tensor deeplab_encode(const Tensor& x, const ParamStore& params, const ASPPConfig& cfg,
                      DeepLabTrace* trace = nullptr);
Tensor deeplab_encode_backward(const DeepLabTrace& trace, const Tensor& gy, ParamStore& params,
                               const ASPPConfig& cfg, bool need_dx = true);

/// Parallel dilated 3x3 paths plus an image-level pooling path, concatenated
/// and projected by a 1x1 conv.
Tensor aspp(const Tensor& x, const ParamStore& params, const ASPPConfig& cfg, ASPPTrace* trace = nullptr);
Tensor aspp_backward(const ASPPTrace& trace, const Tensor& gy, ParamStore& params, const ASPPConfig& cfg);

/// deeplab_encode -> aspp -> bilinear upsample back to input resolution.
Tensor deeplab_forward(const Tensor& x, const ParamStore& params, const ASPPConfig& cfg,
                       DeepLabTrace* trace = nullptr);
Tensor deeplab_backward(const DeepLabTrace& trace, const Tensor& gy, ParamStore& params, const ASPPConfig& cfg,
                        bool need_dx = true);

}  // namespace dsf
