#include "dsf/gradcheck_suite.hpp"

#include "dsf/deeplab.hpp"
#include "dsf/fusion.hpp"
#include "dsf/loss.hpp"
#include "dsf/model.hpp"
#include "dsf/ops.hpp"
#include "dsf/rng.hpp"
#include "dsf/segnet.hpp"

namespace dsf {
namespace {

constexpr double kPiecewiseTol = 1e-4;
constexpr double kSmoothTol = 1e-6;
constexpr double kLinearExactTol = 1e-10;
constexpr std::size_t kModuleCoords = 24;

Tensor random_tensor(const Shape& s, Rng& rng, double lo = -1.0, double hi = 1.0) {
  Tensor t(s);
  for (double& v : t.values()) v = rng.uniform(lo, hi);
  return t;
}

// Values bounded away from zero so relu kinks sit outside the probe step.
Tensor away_from_zero(const Shape& s, Rng& rng) {
  Tensor t(s);
  for (double& v : t.values()) v = (rng.bernoulli(0.5) ? 1.0 : -1.0) * rng.uniform(0.1, 1.0);
  return t;
}

void randomize_biases(ParamStore& params, Rng& rng) {
  for (auto& [name, p] : params) {
    if (name.size() > 5 && name.compare(name.size() - 5, 5, ".bias") == 0) {
      for (double& v : p.value.values()) v = rng.uniform(-0.1, 0.1);
    }
  }
}

GradCheckOptions opts(std::uint64_t seed, std::size_t coords = 0) {
  GradCheckOptions o;
  o.seed = seed;
  o.max_coords = coords;
  return o;
}

GradCheckCase unary(std::string name, double tol, Shape shape, std::function<Tensor(const Tensor&)> fwd,
                    std::function<Tensor(const Tensor&, const Tensor&)> bwd, bool avoid_zero = false) {
  return {name, tol, [=](std::uint64_t seed) {
            Rng rng(seed);
            Tensor x = avoid_zero ? away_from_zero(shape, rng) : random_tensor(shape, rng);
            return grad_check([&](const std::vector<Tensor>& in) { return fwd(in[0]); },
                              [&](const std::vector<Tensor>& in, const Tensor& gy) {
                                return std::vector<Tensor>{bwd(in[0], gy)};
                              },
                              {x}, opts(seed));
          }};
}

GradCheckCase loss_case(std::string name, double (*value)(const Tensor&, const Tensor&, const LossConfig&),
                        Tensor (*grad)(const Tensor&, const Tensor&, const LossConfig&)) {
  return {name, kSmoothTol, [=](std::uint64_t seed) {
            Rng rng(seed);
            const Shape s{2, 1, 4, 4};
            Tensor p = random_tensor(s, rng, 0.05, 0.95);
            Tensor g(s);
            for (double& v : g.values()) v = rng.bernoulli(0.4) ? 1.0 : 0.0;
            const LossConfig cfg;
            return grad_check(
                [&](const std::vector<Tensor>& in) { return Tensor(Shape{1, 1, 1, 1}, value(in[0], g, cfg)); },
                [&](const std::vector<Tensor>& in, const Tensor& gy) {
                  Tensor d = grad(in[0], g, cfg);
                  d *= gy[0];
                  return std::vector<Tensor>{d};
                },
                {p}, opts(seed));
          }};
}

SegNetConfig small_segnet() { return SegNetConfig{{4, 8}, 3, 4}; }
ASPPConfig small_aspp() { return ASPPConfig{{1, 2}, 4, 8, 4, 4}; }

}  // namespace

std::vector<GradCheckCase> gradcheck_cases() {
  std::vector<GradCheckCase> cases;

  cases.push_back({"conv2d", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const Conv2dOptions opt{1, 1, 1};
                     return grad_check(
                         [&](const std::vector<Tensor>& in) { return conv2d(in[0], in[1], in[2], opt); },
                         [&](const std::vector<Tensor>& in, const Tensor& gy) {
                           Conv2dGrads g = conv2d_backward(in[0], in[1], in[2], gy, opt);
                           return std::vector<Tensor>{g.dx, g.dw, g.db};
                         },
                         {random_tensor({1, 2, 5, 5}, rng), random_tensor({3, 2, 3, 3}, rng),
                          random_tensor({3, 1, 1, 1}, rng)},
                         opts(seed));
                   }});

  cases.push_back({"conv2d_strided_dilated", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const Conv2dOptions opt{2, 2, 2};
                     return grad_check(
                         [&](const std::vector<Tensor>& in) { return conv2d(in[0], in[1], in[2], opt); },
                         [&](const std::vector<Tensor>& in, const Tensor& gy) {
                           Conv2dGrads g = conv2d_backward(in[0], in[1], in[2], gy, opt);
                           return std::vector<Tensor>{g.dx, g.dw, g.db};
                         },
                         {random_tensor({2, 2, 8, 8}, rng), random_tensor({3, 2, 3, 3}, rng),
                          random_tensor({3, 1, 1, 1}, rng)},
                         opts(seed));
                   }});

  cases.push_back(unary(
      "maxpool2x2", kPiecewiseTol, {1, 2, 6, 6}, [](const Tensor& x) { return maxpool2x2(x).y; },
      [](const Tensor& x, const Tensor& gy) { return maxpool2x2_backward(gy, maxpool2x2(x).idx); }));

  cases.push_back({"maxunpool2x2", kLinearExactTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const PoolIndexMap idx = maxpool2x2(random_tensor({1, 2, 6, 6}, rng)).idx;
                     return grad_check(
                         [&](const std::vector<Tensor>& in) { return maxunpool2x2(in[0], idx); },
                         [&](const std::vector<Tensor>&, const Tensor& gy) {
                           return std::vector<Tensor>{maxunpool2x2_backward(gy, idx)};
                         },
                         {random_tensor(idx.shape, rng)}, opts(seed));
                   }});

  cases.push_back(unary(
      "global_avg_pool", kSmoothTol, {2, 3, 5, 5}, [](const Tensor& x) { return global_avg_pool(x); },
      [](const Tensor& x, const Tensor& gy) { return global_avg_pool_backward(gy, x.shape()); }));

  cases.push_back(unary(
      "broadcast_spatial", kSmoothTol, {2, 3, 1, 1}, [](const Tensor& x) { return broadcast_spatial(x, 4, 3); },
      [](const Tensor&, const Tensor& gy) { return broadcast_spatial_backward(gy); }));

  cases.push_back(unary(
      "bilinear_upsample", kSmoothTol, {1, 2, 4, 5}, [](const Tensor& x) { return bilinear_upsample(x, 4); },
      [](const Tensor& x, const Tensor& gy) { return bilinear_upsample_backward(gy, x.shape(), 4); }));

  cases.push_back(unary(
      "resize_bilinear", kSmoothTol, {1, 1, 6, 7}, [](const Tensor& x) { return resize_bilinear(x, 9, 4); },
      [](const Tensor& x, const Tensor& gy) { return resize_bilinear_backward(gy, x.shape()); }));

  cases.push_back(unary(
      "relu", kPiecewiseTol, {2, 3, 4, 4}, [](const Tensor& x) { return relu(x); },
      [](const Tensor& x, const Tensor& gy) { return relu_backward(x, gy); }, true));

  cases.push_back(unary(
      "sigmoid", kSmoothTol, {2, 3, 4, 4}, [](const Tensor& x) { return sigmoid(x); },
      [](const Tensor& x, const Tensor& gy) { return sigmoid_backward(sigmoid(x), gy); }));

  cases.push_back({"concat_channels", kSmoothTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](const std::vector<Tensor>& in) { return concat_channels(in[0], in[1]); },
                         [](const std::vector<Tensor>& in, const Tensor& gy) {
                           auto [a, b] = split_channels(gy, in[0].c());
                           return std::vector<Tensor>{a, b};
                         },
                         {random_tensor({2, 2, 3, 3}, rng), random_tensor({2, 3, 3, 3}, rng)}, opts(seed));
                   }});

  cases.push_back({"scale_channels", kSmoothTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](const std::vector<Tensor>& in) { return scale_channels(in[0], in[1]); },
                         [](const std::vector<Tensor>& in, const Tensor& gy) {
                           ScaleChannelsGrads g = scale_channels_backward(in[0], in[1], gy);
                           return std::vector<Tensor>{g.dx, g.ds};
                         },
                         {random_tensor({2, 3, 4, 4}, rng), random_tensor({2, 3, 1, 1}, rng)}, opts(seed));
                   }});

  cases.push_back({"channel_attention", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     return grad_check(
                         [](const std::vector<Tensor>& in) {
                           return channel_attention(in[0], AttentionParams{in[1], in[2]});
                         },
                         [](const std::vector<Tensor>& in, const Tensor& gy) {
                           AttentionParams p{in[1], in[2]};
                           AttentionTrace trace;
                           channel_attention(in[0], p, &trace);
                           AttentionGrads g = channel_attention_backward(in[0], p, trace, gy);
                           return std::vector<Tensor>{g.dx, g.dw1, g.dw2};
                         },
                         {random_tensor({2, 8, 4, 4}, rng), random_tensor({2, 8, 1, 1}, rng),
                          random_tensor({8, 2, 1, 1}, rng)},
                         opts(seed));
                   }});

  cases.push_back({"fuse", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const FusionConfig cfg;
                     ParamStore params;
                     fusion_init(params, 8, cfg, rng);
                     randomize_biases(params, rng);
                     const Tensor f_seg = random_tensor({2, 4, 4, 4}, rng);
                     const Tensor f_dl = random_tensor({2, 4, 4, 4}, rng);
                     return grad_check_module(
                         [&](const Tensor& x, const ParamStore& p) {
                           auto [a, b] = split_channels(x, 4);
                           return fuse(a, b, p, cfg);
                         },
                         [&](const Tensor& x, ParamStore& p, const Tensor& gy) {
                           auto [a, b] = split_channels(x, 4);
                           FusionTrace trace;
                           fuse(a, b, p, cfg, &trace);
                           auto [ga, gb] = fuse_backward(trace, gy, p);
                           return concat_channels(ga, gb);
                         },
                         concat_channels(f_seg, f_dl), params, opts(seed));
                   }});

  cases.push_back(loss_case("bce_loss", bce_loss, bce_loss_grad));
  cases.push_back(loss_case("dice_loss", dice_loss, dice_loss_grad));
  cases.push_back(loss_case("total_loss", total_loss, total_loss_grad));

  cases.push_back({"segnet_branch", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const SegNetConfig cfg;
                     ParamStore params;
                     segnet_init(params, cfg, 1, rng);
                     randomize_biases(params, rng);
                     return grad_check_module(
                         [&](const Tensor& x, const ParamStore& p) { return segnet_forward(x, p, cfg); },
                         [&](const Tensor& x, ParamStore& p, const Tensor& gy) {
                           SegNetTrace trace;
                           std::vector<PoolIndexMap> idx;
                           segnet_forward(x, p, cfg, &trace, &idx);
                           return segnet_backward(trace, idx, gy, p, cfg);
                         },
                         random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0), params, opts(seed, kModuleCoords));
                   }});

  cases.push_back({"deeplab_encode", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const ASPPConfig cfg;
                     ParamStore params;
                     deeplab_init(params, cfg, 1, rng);
                     randomize_biases(params, rng);
                     return grad_check_module(
                         [&](const Tensor& x, const ParamStore& p) { return deeplab_encode(x, p, cfg); },
                         [&](const Tensor& x, ParamStore& p, const Tensor& gy) {
                           DeepLabTrace trace;
                           deeplab_encode(x, p, cfg, &trace);
                           return deeplab_encode_backward(trace, gy, p, cfg);
                         },
                         random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0), params, opts(seed, kModuleCoords));
                   }});

  cases.push_back({"aspp", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const ASPPConfig cfg;
                     ParamStore params;
                     deeplab_init(params, cfg, 1, rng);
                     randomize_biases(params, rng);
                     return grad_check_module(
                         [&](const Tensor& x, const ParamStore& p) { return aspp(x, p, cfg); },
                         [&](const Tensor& x, ParamStore& p, const Tensor& gy) {
                           ASPPTrace trace;
                           aspp(x, p, cfg, &trace);
                           return aspp_backward(trace, gy, p, cfg);
                         },
                         random_tensor({1, cfg.entry_channels, 4, 4}, rng), params, opts(seed, kModuleCoords));
                   }});

  cases.push_back({"deeplab_branch", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const ASPPConfig cfg;
                     ParamStore params;
                     deeplab_init(params, cfg, 1, rng);
                     randomize_biases(params, rng);
                     return grad_check_module(
                         [&](const Tensor& x, const ParamStore& p) { return deeplab_forward(x, p, cfg); },
                         [&](const Tensor& x, ParamStore& p, const Tensor& gy) {
                           DeepLabTrace trace;
                           deeplab_forward(x, p, cfg, &trace);
                           return deeplab_backward(trace, gy, p, cfg);
                         },
                         random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0), params, opts(seed, kModuleCoords));
                   }});

  cases.push_back({"full_model", kPiecewiseTol, [](std::uint64_t seed) {
                     Rng rng(seed);
                     const SegFusionModel model(ModelConfig{small_segnet(), small_aspp(), FusionConfig{}});
                     ParamStore params = model.init_params(seed);
                     randomize_biases(params, rng);
                     return grad_check_module(
                         [&](const Tensor& x, const ParamStore& p) { return model.forward(x, p); },
                         [&](const Tensor& x, ParamStore& p, const Tensor& gy) {
                           ModelTrace trace;
                           model.forward(x, p, &trace);
                           return model.backward(trace, gy, p, true);
                         },
                         random_tensor({1, 1, 16, 16}, rng, 0.0, 1.0), params, opts(seed, kModuleCoords));
                   }});

  return cases;
}

std::vector<GradCheckOutcome> run_gradcheck_suite(std::uint64_t seed, std::size_t seeds) {
  std::vector<GradCheckOutcome> out;
  std::size_t case_index = 0;
  for (const GradCheckCase& c : gradcheck_cases()) {
    GradCheckOutcome o{c.name, c.tolerance, 0.0, "", seeds, true};
    for (std::size_t s = 0; s < seeds; ++s) {
      const GradCheckResult r = c.run(derive_seed(seed, case_index, s));
      if (!r.passed(c.tolerance)) o.passed = false;
      if (!r.finite || r.max_rel_error >= o.max_rel_error) {
        o.max_rel_error = r.finite ? r.max_rel_error : o.max_rel_error;
        o.worst = r.worst;
      }
    }
    out.push_back(std::move(o));
    ++case_index;
  }
  return out;
}

}  // namespace dsf
