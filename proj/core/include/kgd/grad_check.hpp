#pragma once

#include <functional>
#include <string>
#include <vector>

#include "kgd/tape.hpp"

namespace kgd::ad {

struct ParameterGradError {
  std::string name;
  double max_rel_error = 0.0;
  std::size_t worst_index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
};

struct GradCheckReport {
  std::vector<ParameterGradError> parameters;
  double max_rel_error = 0.0;
  bool passed = false;
};

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  // Relative error is |a - n| / max(|a|, |n|, floor); the floor keeps
  // near-zero gradients from amplifying finite-difference round-off.
  double floor = 1e-4;
};

// Builds the objective on a fresh tape. Must be deterministic: any dropout
// mask or Gumbel noise has to be fixed outside the function.
using Objective = std::function<Var(Tape&)>;

// Compares backward() against central differences for every element of every
// parameter. Parameter values are restored and gradients zeroed on return.
GradCheckReport grad_check(const Objective& objective, const std::vector<Parameter*>& parameters,
                           const GradCheckOptions& options = {});

}  // namespace kgd::ad
