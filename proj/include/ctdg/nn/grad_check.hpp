// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <functional>
#include <string>
#include <vector>

#include "ctdg/nn/params.hpp"

namespace ctdg::nn {

struct GradCheckFailure {
  std::string param;
  std::size_t index = 0;
  double analytic = 0.0;
  double numeric = 0.0;
  double rel_error = 0.0;
};

struct GradCheckReport {
  bool passed = true;
  double max_rel_error = 0.0;
  std::string worst_param;
  std::size_t entries_checked = 0;
  std::vector<GradCheckFailure> failures;
};

/// Scalar objective over the current parameter values. When called with
/// `with_grad == true` it must also accumulate analytic gradients into the
/// parameters' grad buffers (which the checker zeroes beforehand).
using Objective = std::function<double(bool with_grad)>;

/// Compares every analytic gradient entry against a central difference with
/// the given step. Relative error is |a - n| / max(|a|, |n|, 1e-6); the floor
/// keeps round-off on near-zero entries from registering as failures.
GradCheckReport grad_check(ParamSet& params, const Objective& objective, double tolerance,
                           double step = 1e-5);

}  // namespace ctdg::nn
