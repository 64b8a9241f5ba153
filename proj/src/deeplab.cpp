#include "dsf/deeplab.hpp"

#include <algorithm>
#include <set>
#include <string>

#include "dsf/errors.hpp"
#include "dsf/layers.hpp"
#include "dsf/ops.hpp"

namespace dsf {
namespace {

ConvLayer entry_conv(std::size_t layer) {
  return {"deeplab.entry" + std::to_string(layer), Conv2dOptions{2, 1, 1}};
}

ConvLayer rate_conv(const ASPPConfig& cfg, std::size_t path) {
  const std::size_t rate = cfg.dilation_rates[path];
  return {"deeplab.aspp.rate" + std::to_string(path), Conv2dOptions{1, rate, rate}};
}

const ConvLayer kImageConv{"deeplab.aspp.image", Conv2dOptions{}};
const ConvLayer kProjection{"deeplab.aspp.proj", Conv2dOptions{}};

Tensor slice_channels(const Tensor& t, std::size_t start, std::size_t count) {
  const Shape& s = t.shape();
  Tensor out(Shape{s.n, count, s.h, s.w});
  for (std::size_t b = 0; b < s.n; ++b) {
    std::copy_n(t.plane(b, start), count * s.plane(), out.plane(b, 0));
  }
  return out;
}

}  // namespace

void ASPPConfig::validate() const {
  if (dilation_rates.empty()) throw ConfigError("deeplab.dilation_rates must not be empty");
  std::set<std::size_t> seen;
  for (std::size_t r : dilation_rates) {
    if (r < 1) throw ConfigError("deeplab.dilation_rates entries must be >= 1");
    if (!seen.insert(r).second) throw ConfigError("deeplab.dilation_rates must be distinct");
  }
  if (output_stride < 2 || (output_stride & (output_stride - 1)) != 0) {
    throw ConfigError("deeplab.output_stride must be a power of 2 and at least 2");
  }
  if (branch_channels == 0 || entry_channels == 0 || out_channels == 0) {
    throw ConfigError("deeplab channel counts must be positive");
  }
}

std::size_t ASPPConfig::entry_layers() const {
  std::size_t layers = 0;
  for (std::size_t s = output_stride; s > 1; s >>= 1) ++layers;
  return layers;
}

std::size_t ASPPConfig::entry_width(std::size_t layer) const {
  const std::size_t shift = entry_layers() - 1 - layer;
  return std::max<std::size_t>(1, entry_channels >> shift);
}

void deeplab_init(ParamStore& params, const ASPPConfig& cfg, std::size_t in_channels, Rng& rng) {
  cfg.validate();
  std::size_t cin = in_channels;
  for (std::size_t i = 0; i < cfg.entry_layers(); ++i) {
    entry_conv(i).init(params, cin, cfg.entry_width(i), 3, rng);
    cin = cfg.entry_width(i);
  }
  for (std::size_t j = 0; j < cfg.dilation_rates.size(); ++j) {
    rate_conv(cfg, j).init(params, cin, cfg.branch_channels, 3, rng);
  }
  kImageConv.init(params, cin, cfg.branch_channels, 1, rng);
  kProjection.init(params, (cfg.dilation_rates.size() + 1) * cfg.branch_channels, cfg.out_channels, 1, rng, 1.0);
}

Tensor deeplab_encode(const Tensor& x, const ParamStore& params, const ASPPConfig& cfg, DeepLabTrace* trace) {
  if (x.h() % cfg.output_stride != 0 || x.w() % cfg.output_stride != 0) {
    throw ShapeError("deeplab: input " + std::to_string(x.h()) + "x" + std::to_string(x.w()) +
                     " not divisible by output_stride " + std::to_string(cfg.output_stride));
  }
  if (trace) {
    trace->entry_in.clear();
    trace->entry_pre.clear();
  }
  Tensor h = x;
  for (std::size_t i = 0; i < cfg.entry_layers(); ++i) {
    Tensor pre = entry_conv(i).forward(h, params);
    Tensor act = relu(pre);
    if (trace) {
      trace->entry_in.push_back(std::move(h));
      trace->entry_pre.push_back(std::move(pre));
    }
    h = std::move(act);
  }
  return h;
}

Tensor deeplab_encode_backward(const DeepLabTrace& trace, const Tensor& gy, ParamStore& params,
                               const ASPPConfig& cfg, bool need_dx) {
  Tensor g = gy;
  for (std::size_t i = cfg.entry_layers(); i-- > 0;) {
    g = relu_backward(trace.entry_pre[i], g);
    g = entry_conv(i).backward(trace.entry_in[i], g, params, i > 0 || need_dx);
  }
  return g;
}

Tensor aspp(const Tensor& x, const ParamStore& params, const ASPPConfig& cfg, ASPPTrace* trace) {
  std::vector<Tensor> paths;
  std::vector<Tensor> rate_pre;
  for (std::size_t j = 0; j < cfg.dilation_rates.size(); ++j) {
    Tensor pre = rate_conv(cfg, j).forward(x, params);
    if (pre.h() != x.h() || pre.w() != x.w()) throw ShapeError("aspp: dilated path changed spatial size");
    paths.push_back(relu(pre));
    rate_pre.push_back(std::move(pre));
  }
  Tensor pooled = global_avg_pool(x);
  Tensor image_pre = kImageConv.forward(pooled, params);
  Tensor concat = paths.front();
  for (std::size_t j = 1; j < paths.size(); ++j) concat = concat_channels(concat, paths[j]);
  concat = concat_channels(concat, broadcast_spatial(relu(image_pre), x.h(), x.w()));
  Tensor out = kProjection.forward(concat, params);
  if (trace) {
    trace->input = x;
    trace->rate_pre = std::move(rate_pre);
    trace->pooled = std::move(pooled);
    trace->image_pre = std::move(image_pre);
    trace->concat = std::move(concat);
  }
  return out;
}

Tensor aspp_backward(const ASPPTrace& trace, const Tensor& gy, ParamStore& params, const ASPPConfig& cfg) {
  const Tensor gconcat = kProjection.backward(trace.concat, gy, params);
  const std::size_t bc = cfg.branch_channels;
  Tensor gx(trace.input.shape());
  for (std::size_t j = 0; j < cfg.dilation_rates.size(); ++j) {
    Tensor g = relu_backward(trace.rate_pre[j], slice_channels(gconcat, j * bc, bc));
    gx += rate_conv(cfg, j).backward(trace.input, g, params);
  }
  Tensor gimg = broadcast_spatial_backward(slice_channels(gconcat, cfg.dilation_rates.size() * bc, bc));
  gimg = relu_backward(trace.image_pre, gimg);
  gimg = kImageConv.backward(trace.pooled, gimg, params);
  gx += global_avg_pool_backward(gimg, trace.input.shape());
  return gx;
}

Tensor deeplab_forward(const Tensor& x, const ParamStore& params, const ASPPConfig& cfg, DeepLabTrace* trace) {
  Tensor features = deeplab_encode(x, params, cfg, trace);
  Tensor context = aspp(features, params, cfg, trace ? &trace->aspp : nullptr);
  if (trace) trace->aspp_out = context.shape();
  return bilinear_upsample(context, cfg.output_stride);
}

Tensor deeplab_backward(const DeepLabTrace& trace, const Tensor& gy, ParamStore& params, const ASPPConfig& cfg,
                        bool need_dx) {
  Tensor g = bilinear_upsample_backward(gy, trace.aspp_out, cfg.output_stride);
  g = aspp_backward(trace.aspp, g, params, cfg);
  return deeplab_encode_backward(trace, g, params, cfg, need_dx);
}

}  // namespace dsf
