#include "dsf/model.hpp"

#include <numeric>

#include "dsf/errors.hpp"
#include "dsf/rng.hpp"

namespace dsf {

void ModelConfig::validate() const {
  segnet.validate();
  deeplab.validate();
  fusion.validate();
  if (fused_channels() % fusion.reduction != 0) {
    throw ConfigError("fused channel count " + std::to_string(fused_channels()) +
                      " must be divisible by fusion.reduction " + std::to_string(fusion.reduction));
  }
}

std::size_t ModelConfig::spatial_multiple() const {
  return std::lcm(std::size_t{1} << segnet.stages(), deeplab.output_stride);
}

SegFusionModel::SegFusionModel(ModelConfig cfg) : cfg_(std::move(cfg)) { cfg_.validate(); }

ParamStore SegFusionModel::init_params(std::uint64_t seed) const {
  ParamStore params;
  Rng seg_rng(derive_seed(seed, 1, 0));
  Rng dl_rng(derive_seed(seed, 2, 0));
  Rng fusion_rng(derive_seed(seed, 3, 0));
  segnet_init(params, cfg_.segnet, kInputChannels, seg_rng);
  deeplab_init(params, cfg_.deeplab, kInputChannels, dl_rng);
  fusion_init(params, cfg_.fused_channels(), cfg_.fusion, fusion_rng);
  return params;
}

Tensor SegFusionModel::forward(const Tensor& x, const ParamStore& params, ModelTrace* trace) const {
  if (x.c() != kInputChannels) {
    throw ShapeError("model: expected " + std::to_string(kInputChannels) + " input channel, got " +
                     std::to_string(x.c()));
  }
  std::vector<PoolIndexMap> indices;
  Tensor f_seg = segnet_forward(x, params, cfg_.segnet, trace ? &trace->segnet : nullptr, &indices);
  Tensor f_dl = deeplab_forward(x, params, cfg_.deeplab, trace ? &trace->deeplab : nullptr);
  Tensor prob = fuse(f_seg, f_dl, params, cfg_.fusion, trace ? &trace->fusion : nullptr);
  if (trace) trace->indices = std::move(indices);
  return prob;
}

Tensor SegFusionModel::backward(const ModelTrace& trace, const Tensor& gprob, ParamStore& params,
                                bool need_dx) const {
  auto [g_seg, g_dl] = fuse_backward(trace.fusion, gprob, params);
  Tensor dx_seg = segnet_backward(trace.segnet, trace.indices, g_seg, params, cfg_.segnet, need_dx);
  Tensor dx_dl = deeplab_backward(trace.deeplab, g_dl, params, cfg_.deeplab, need_dx);
  if (!need_dx) return {};
  dx_seg += dx_dl;
  return dx_seg;
}

}  // namespace dsf
