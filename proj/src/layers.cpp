#include "dsf/layers.hpp"

#include <cmath>

namespace dsf {

Tensor he_normal(const Shape& shape, std::size_t fan_in, Rng& rng, double gain) {
  Tensor t(shape);
  const double sd = std::sqrt(gain / static_cast<double>(fan_in));
  for (double& v : t.values()) v = rng.normal(0.0, sd);
  return t;
}

void ConvLayer::init(ParamStore& params, std::size_t cin, std::size_t cout, std::size_t k, Rng& rng,
                     double gain) const {
  params.add(weight_name(), he_normal(Shape{cout, cin, k, k}, cin * k * k, rng, gain));
  params.add(bias_name(), Tensor(Shape{cout, 1, 1, 1}));
}

Tensor ConvLayer::forward(const Tensor& x, const ParamStore& params) const {
  return conv2d(x, params.value(weight_name()), params.value(bias_name()), opt);
}

Tensor ConvLayer::backward(const Tensor& x, const Tensor& gy, ParamStore& params, bool need_dx) const {
  Param& w = params.get(weight_name());
  Param& b = params.get(bias_name());
  Conv2dGrads g = conv2d_backward(x, w.value, b.value, gy, opt, need_dx);
  w.grad += g.dw;
  b.grad += g.db;
  return std::move(g.dx);
}

}  // namespace dsf
