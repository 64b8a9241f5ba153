#include "dsf/grad_check.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "dsf/errors.hpp"
#include "dsf/rng.hpp"

namespace dsf {
namespace {

double objective(const Tensor& y, const std::vector<double>& r) {
  long double sum = 0.0L;
  for (std::size_t i = 0; i < y.size(); ++i) sum += static_cast<long double>(r[i]) * y[i];
  return static_cast<double>(sum);
}

double relative_error(double a, double b, double floor) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), floor});
}

std::vector<std::size_t> pick_coords(std::size_t size, std::size_t max_coords, Rng& rng) {
  std::vector<std::size_t> all(size);
  std::iota(all.begin(), all.end(), std::size_t{0});
  if (max_coords == 0 || max_coords >= size) return all;
  for (std::size_t i = 0; i < max_coords; ++i) {
    std::swap(all[i], all[i + rng.below(size - i)]);
  }
  all.resize(max_coords);
  return all;
}

}  // namespace

GradCheckResult grad_check(const ForwardFn& forward, const BackwardFn& backward,
                           const std::vector<Tensor>& inputs, const GradCheckOptions& opt) {
  GradCheckResult result;
  Rng rng(derive_seed(opt.seed, 0x6772616463ULL, 0));
  std::vector<Tensor> point = inputs;
  const Tensor y = forward(point);
  if (!y.all_finite()) {
    result.finite = false;
    result.worst = "forward output";
    return result;
  }
  std::vector<double> r(y.size());
  for (double& v : r) v = rng.uniform(0.5, 1.5);
  const Tensor gy(y.shape(), r);
  const std::vector<Tensor> analytic = backward(point, gy);
  const double base = objective(y, r);
  if (analytic.size() != point.size()) throw ShapeError("grad_check: backward returned wrong gradient count");

  for (std::size_t k = 0; k < point.size(); ++k) {
    if (analytic[k].shape() != point[k].shape()) {
      throw ShapeError("grad_check: gradient " + std::to_string(k) + " has shape " + analytic[k].shape().str() +
                       ", expected " + point[k].shape().str());
    }
    for (std::size_t i : pick_coords(point[k].size(), opt.max_coords, rng)) {
      const double saved = point[k][i];
      const double a = analytic[k][i];
      double numeric = 0.0;
      double h = opt.step;
      for (std::size_t attempt = 0;; ++attempt, h *= 0.1) {
        point[k][i] = saved + h;
        const double up = objective(forward(point), r);
        point[k][i] = saved - h;
        const double down = objective(forward(point), r);
        point[k][i] = saved;
        numeric = (up - down) / (2.0 * h);
        if (opt.kink_ratio <= 0.0 || relative_error(a, numeric, opt.abs_floor) <= opt.kink_ratio) break;
        // A relu or pooling switch inside [x - h, x + h] makes the one-sided
        // slopes disagree. Shrink the probe, and on the last try use the side
        // without the switch as the reference.
        const double right = (up - base) / h;
        const double left = (base - down) / h;
        if (relative_error(right, left, opt.abs_floor) <= opt.kink_ratio) break;
        if (attempt == 0) ++result.kinks;
        if (attempt == opt.kink_refinements) {
          numeric = std::abs(a - right) < std::abs(a - left) ? right : left;
          break;
        }
      }
      ++result.coords;
      if (!std::isfinite(numeric) || !std::isfinite(a)) {
        result.finite = false;
        result.worst = "input#" + std::to_string(k) + "[" + std::to_string(i) + "]";
        continue;
      }
      const double rel = relative_error(a, numeric, opt.abs_floor);
      if (rel > result.max_rel_error) {
        result.max_rel_error = rel;
        result.worst = "input#" + std::to_string(k) + "[" + std::to_string(i) + "]";
      }
    }
  }
  return result;
}

GradCheckResult grad_check_module(const ModuleForward& forward, const ModuleBackward& backward, const Tensor& x,
                                  const ParamStore& params, const GradCheckOptions& opt) {
  const std::vector<std::string> names = params.names();
  auto rebuild = [&](const std::vector<Tensor>& in) {
    ParamStore store;
    for (std::size_t i = 0; i < names.size(); ++i) store.add(names[i], in[i + 1]);
    return store;
  };
  std::vector<Tensor> inputs{x};
  for (const auto& name : names) inputs.push_back(params.value(name));

  ForwardFn fwd = [&](const std::vector<Tensor>& in) { return forward(in[0], rebuild(in)); };
  BackwardFn bwd = [&](const std::vector<Tensor>& in, const Tensor& gy) {
    ParamStore store = rebuild(in);
    std::vector<Tensor> grads{backward(in[0], store, gy)};
    for (const auto& name : names) grads.push_back(store.get(name).grad);
    return grads;
  };
  return grad_check(fwd, bwd, inputs, opt);
}

}  // namespace dsf
