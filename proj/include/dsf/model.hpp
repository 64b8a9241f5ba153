#pragma once

#include <cstdint>
#include <vector>

#include "dsf/deeplab.hpp"
#include "dsf/fusion.hpp"
#include "dsf/param_store.hpp"
#include "dsf/segnet.hpp"

namespace dsf {

/// Grayscale SAR input.
inline constexpr std::size_t kInputChannels = 1;

struct ModelConfig {
  SegNetConfig segnet;
  ASPPConfig deeplab;
  FusionConfig fusion;

  void validate() const;
  std::size_t fused_channels() const { return segnet.out_channels + deeplab.out_channels; }
  /// Spatial sizes must be multiples of this.
  std::size_t spatial_multiple() const;
};

struct ModelTrace {
  SegNetTrace segnet;
  std::vector<PoolIndexMap> indices;
  DeepLabTrace deeplab;
  FusionTrace fusion;
};

/// The two-branch segmentation network: SegNet-style and ASPP branches run
/// independently on the same input, then attention fusion yields probabilities.
class SegFusionModel {
 public:
  explicit SegFusionModel(ModelConfig cfg);

  const ModelConfig& config() const { return cfg_; }

  /// Fresh parameter set; deterministic in `seed`.
  ParamStore init_params(std::uint64_t seed) const;

  /// (n, 1, h, w) input -> (n, 1, h, w) spill probabilities.
  Tensor forward(const Tensor& x, const ParamStore& params, ModelTrace* trace = nullptr) const;

  /// Accumulates parameter gradients for dL/dprob; returns dL/dx when requested.
  Tensor backward(const ModelTrace& trace, const Tensor& gprob, ParamStore& params, bool need_dx = false) const;

 private:
  ModelConfig cfg_;
};

}  // namespace dsf
