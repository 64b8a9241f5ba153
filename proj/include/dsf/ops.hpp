#pragma once

// Differentiable operators on NCHW tensors. Each forward has a matching
// *_backward that maps the output gradient to input (and parameter) gradients.

#include <cstddef>
#include <cstdint>
#include <utility>
#include <vector>

#include "dsf/tensor.hpp"

namespace dsf {

struct Conv2dOptions {
  std::size_t stride = 1;
  std::size_t dilation = 1;
  std::size_t padding = 0;
};

/// floor((in + 2*padding - dilation*(k-1) - 1)/stride) + 1, or 0 when the kernel does not fit.
std::size_t conv_output_size(std::size_t in, std::size_t k, const Conv2dOptions& opt);

/// Cross-correlation with zero padding. w is (cout, cin, kh, kw); b holds cout
/// values (any shape) or is empty for no bias.
Tensor conv2d(const Tensor& x, const Tensor& w, const Tensor& b, const Conv2dOptions& opt);

struct Conv2dGrads {
  Tensor dx;  // empty when not requested
  Tensor dw;
  Tensor db;  // shape of the bias passed to conv2d_backward
};

Conv2dGrads conv2d_backward(const Tensor& x, const Tensor& w, const Tensor& b, const Tensor& gy,
                            const Conv2dOptions& opt, bool need_dx = true);

/// Argmax positions of a 2x2 max-pool; each entry is a flat row-major index
/// into the (src_h, src_w) plane of the same (batch, channel).
struct PoolIndexMap {
  Shape shape;  // pooled shape
  std::size_t src_h = 0;
  std::size_t src_w = 0;
  std::vector<std::uint32_t> index;

  bool operator==(const PoolIndexMap&) const = default;
};

struct PoolResult {
  Tensor y;
  PoolIndexMap idx;
};

/// 2x2 / stride 2 max-pool; ties resolve to the first maximum in row-major window order.
PoolResult maxpool2x2(const Tensor& x);
Tensor maxpool2x2_backward(const Tensor& gy, const PoolIndexMap& idx);

/// Places each y value at its recorded position; zeros elsewhere.
Tensor maxunpool2x2(const Tensor& y, const PoolIndexMap& idx);
Tensor maxunpool2x2_backward(const Tensor& gout, const PoolIndexMap& idx);

/// Mean over each spatial plane; result is (n, c, 1, 1).
Tensor global_avg_pool(const Tensor& x);
Tensor global_avg_pool_backward(const Tensor& gy, const Shape& in_shape);

/// Expands an (n, c, 1, 1) tensor to (n, c, h, w) by repetition.
Tensor broadcast_spatial(const Tensor& x, std::size_t h, std::size_t w);
Tensor broadcast_spatial_backward(const Tensor& gy);

/// Bilinear upsampling by an integer factor, half-pixel (align_corners=false) sampling.
Tensor bilinear_upsample(const Tensor& x, std::size_t factor);
Tensor bilinear_upsample_backward(const Tensor& gy, const Shape& in_shape, std::size_t factor);

/// Bilinear resampling to an arbitrary size with the same sampling rule.
Tensor resize_bilinear(const Tensor& x, std::size_t out_h, std::size_t out_w);
Tensor resize_bilinear_backward(const Tensor& gy, const Shape& in_shape);

Tensor relu(const Tensor& x);
Tensor relu_backward(const Tensor& x, const Tensor& gy);

Tensor sigmoid(const Tensor& x);
/// Takes the forward output y = sigmoid(x).
Tensor sigmoid_backward(const Tensor& y, const Tensor& gy);

Tensor concat_channels(const Tensor& a, const Tensor& b);
std::pair<Tensor, Tensor> split_channels(const Tensor& t, std::size_t first_channels);

/// y[b,c,:,:] = s[b,c] * x[b,c,:,:] with s of shape (n, c, 1, 1).
Tensor scale_channels(const Tensor& x, const Tensor& s);

struct ScaleChannelsGrads {
  Tensor dx;
  Tensor ds;
};
ScaleChannelsGrads scale_channels_backward(const Tensor& x, const Tensor& s, const Tensor& gy);

}  // namespace dsf
