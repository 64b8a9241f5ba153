#pragma once

#include <string>

#include "dsf/ops.hpp"
#include "dsf/param_store.hpp"
#include "dsf/rng.hpp"

namespace dsf {

/// A convolution whose weight and bias live in a ParamStore under
/// "<prefix>.weight" and "<prefix>.bias".
struct ConvLayer {
  std::string prefix;
  Conv2dOptions opt;

  std::string weight_name() const { return prefix + ".weight"; }
  std::string bias_name() const { return prefix + ".bias"; }

  /// He-normal weights, zero bias.
  void init(ParamStore& params, std::size_t cin, std::size_t cout, std::size_t k, Rng& rng,
            double gain = 2.0) const;

  Tensor forward(const Tensor& x, const ParamStore& params) const;
  /// Accumulates weight/bias gradients; returns dL/dx (empty if !need_dx).
  Tensor backward(const Tensor& x, const Tensor& gy, ParamStore& params, bool need_dx = true) const;
};

/// Normal(0, sqrt(gain / fan_in)) weights of the given shape.
Tensor he_normal(const Shape& shape, std::size_t fan_in, Rng& rng, double gain = 2.0);

}  // namespace dsf
