#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsf/param_store.hpp"
#include "dsf/tensor.hpp"

namespace dsf {

struct GradCheckOptions {
  double step = 1e-5;
  /// Coordinates probed per input tensor; 0 probes every element.
  std::size_t max_coords = 0;
  std::uint64_t seed = 0;
  /// Lower bound on the relative-error denominator, so near-zero gradients
  /// are compared in absolute terms.
  double abs_floor = 1e-6;
  /// When the central difference misses the analytic value by more than this
  /// and the one-sided differences also disagree by more than this, the
  /// coordinate is treated as straddling a kink (0 disables the test).
  double kink_ratio = 1e-4;
  /// Times the step is divided by 10 after a kink is detected.
  std::size_t kink_refinements = 2;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t coords = 0;
  std::size_t kinks = 0;  // coordinates judged against a one-sided difference
  bool finite = true;
  std::string worst;  // "input#k[i]" of the worst coordinate

  bool passed(double tolerance) const { return finite && max_rel_error < tolerance; }
};

/// Forward over a list of inputs, producing one output tensor.
using ForwardFn = std::function<Tensor(const std::vector<Tensor>&)>;
/// Gradients w.r.t. each input, given the output gradient.
using BackwardFn = std::function<std::vector<Tensor>(const std::vector<Tensor>&, const Tensor&)>;

/// Compares analytic gradients of the objective sum_i r_i * y_i (r a fixed
/// seeded projection in [0.5, 1.5]) against central differences.
GradCheckResult grad_check(const ForwardFn& forward, const BackwardFn& backward,
                           const std::vector<Tensor>& inputs, const GradCheckOptions& opt = {});

/// Module forward reading parameters from a store.
using ModuleForward = std::function<Tensor(const Tensor& x, const ParamStore& params)>;
/// Module backward: accumulates parameter gradients into the store, returns dL/dx.
using ModuleBackward = std::function<Tensor(const Tensor& x, ParamStore& params, const Tensor& gy)>;

/// Checks the input and every parameter of a module.
GradCheckResult grad_check_module(const ModuleForward& forward, const ModuleBackward& backward, const Tensor& x,
                                  const ParamStore& params, const GradCheckOptions& opt = {});

}  // namespace dsf
