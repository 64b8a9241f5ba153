#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "dsf/grad_check.hpp"

namespace dsf {

/// One differentiable operator (or composite module) at a random point.
struct GradCheckCase {
  std::string name;
  double tolerance;
  std::function<GradCheckResult(std::uint64_t seed)> run;
};

/// Every differentiable operator and branch, each listed once.
std::vector<GradCheckCase> gradcheck_cases();

struct GradCheckOutcome {
  std::string name;
  double tolerance = 0.0;
  double max_rel_error = 0.0;  // worst over seeds
  std::string worst;
  std::size_t seeds = 0;
  bool passed = true;
};

/// Runs each case at `seeds` derived seeds.
std::vector<GradCheckOutcome> run_gradcheck_suite(std::uint64_t seed, std::size_t seeds);

}  // namespace dsf
