#include "dsf/segnet.hpp"

#include <string>

#include "dsf/errors.hpp"
#include "dsf/layers.hpp"

namespace dsf {
namespace {

ConvLayer encoder_conv(const SegNetConfig& cfg, std::size_t stage) {
  return {"segnet.enc" + std::to_string(stage), Conv2dOptions{1, 1, (cfg.kernel_size - 1) / 2}};
}

ConvLayer decoder_conv(const SegNetConfig& cfg, std::size_t stage) {
  return {"segnet.dec" + std::to_string(stage), Conv2dOptions{1, 1, (cfg.kernel_size - 1) / 2}};
}

void check_divisible(const Tensor& x, const SegNetConfig& cfg) {
  const std::size_t div = std::size_t{1} << cfg.stages();
  if (x.h() % div != 0 || x.w() % div != 0) {
    throw ShapeError("segnet: input " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " not divisible by 2^" + std::to_string(cfg.stages()));
  }
}

}  // namespace

void SegNetConfig::validate() const {
  if (stage_channels.empty()) throw ConfigError("segnet.stage_channels must have at least one stage");
  for (std::size_t c : stage_channels) {
    if (c == 0) throw ConfigError("segnet.stage_channels entries must be positive");
  }
  if (kernel_size % 2 == 0) throw ConfigError("segnet.kernel_size must be odd");
  if (out_channels == 0) throw ConfigError("segnet.out_channels must be positive");
}

void segnet_init(ParamStore& params, const SegNetConfig& cfg, std::size_t in_channels, Rng& rng) {
  cfg.validate();
  std::size_t cin = in_channels;
  for (std::size_t s = 0; s < cfg.stages(); ++s) {
    encoder_conv(cfg, s).init(params, cin, cfg.stage_channels[s], cfg.kernel_size, rng);
    cin = cfg.stage_channels[s];
  }
  for (std::size_t s = 0; s < cfg.stages(); ++s) {
    const std::size_t cout = s == 0 ? cfg.out_channels : cfg.stage_channels[s - 1];
    decoder_conv(cfg, s).init(params, cfg.stage_channels[s], cout, cfg.kernel_size, rng);
  }
}

SegNetEncoding segnet_encode(const Tensor& x, const ParamStore& params, const SegNetConfig& cfg,
                             SegNetTrace* trace) {
  check_divisible(x, cfg);
  if (trace) {
    trace->enc_in.clear();
    trace->enc_pre.clear();
    trace->enc_act.clear();
  }
  SegNetEncoding enc;
  Tensor h = x;
  for (std::size_t s = 0; s < cfg.stages(); ++s) {
    Tensor pre = encoder_conv(cfg, s).forward(h, params);
    Tensor act = relu(pre);
    PoolResult pooled = maxpool2x2(act);
    if (trace) {
      trace->enc_in.push_back(std::move(h));
      trace->enc_pre.push_back(std::move(pre));
      trace->enc_act.push_back(std::move(act));
    }
    enc.indices.push_back(std::move(pooled.idx));
    h = std::move(pooled.y);
  }
  enc.bottleneck = std::move(h);
  return enc;
}

Tensor segnet_decode(const Tensor& bottleneck, std::span<const PoolIndexMap> indices, const ParamStore& params,
                     const SegNetConfig& cfg, SegNetTrace* trace) {
  if (indices.size() != cfg.stages()) {
    throw ShapeError("segnet_decode: index stack depth " + std::to_string(indices.size()) +
                     " does not match stage count " + std::to_string(cfg.stages()));
  }
  if (trace) {
    trace->dec_in.assign(cfg.stages(), Tensor());
    trace->dec_pre.assign(cfg.stages(), Tensor());
  }
  Tensor h = bottleneck;
  for (std::size_t s = cfg.stages(); s-- > 0;) {
    Tensor up = maxunpool2x2(h, indices[s]);
    Tensor pre = decoder_conv(cfg, s).forward(up, params);
    h = relu(pre);
    if (trace) {
      trace->dec_in[s] = std::move(up);
      trace->dec_pre[s] = std::move(pre);
    }
  }
  return h;
}

Tensor segnet_forward(const Tensor& x, const ParamStore& params, const SegNetConfig& cfg, SegNetTrace* trace,
                      std::vector<PoolIndexMap>* indices) {
  SegNetEncoding enc = segnet_encode(x, params, cfg, trace);
  Tensor out = segnet_decode(enc.bottleneck, enc.indices, params, cfg, trace);
  if (indices) *indices = std::move(enc.indices);
  return out;
}

Tensor segnet_backward(const SegNetTrace& trace, std::span<const PoolIndexMap> indices, const Tensor& gy,
                       ParamStore& params, const SegNetConfig& cfg, bool need_dx) {
  Tensor g = gy;
  for (std::size_t s = 0; s < cfg.stages(); ++s) {
    g = relu_backward(trace.dec_pre[s], g);
    g = decoder_conv(cfg, s).backward(trace.dec_in[s], g, params);
    g = maxunpool2x2_backward(g, indices[s]);
  }
  for (std::size_t s = cfg.stages(); s-- > 0;) {
    g = maxpool2x2_backward(g, indices[s]);
    g = relu_backward(trace.enc_pre[s], g);
    g = encoder_conv(cfg, s).backward(trace.enc_in[s], g, params, s > 0 || need_dx);
  }
  return g;
}

}  // namespace dsf
