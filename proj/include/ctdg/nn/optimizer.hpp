// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "ctdg/nn/params.hpp"

namespace ctdg::nn {

enum class OptimizerKind { adam, sgd };

OptimizerKind parse_optimizer(const std::string& name);
std::string to_string(OptimizerKind kind);

/// In-place first-order updates. Adam uses beta1 0.9, beta2 0.999, eps 1e-8 with
/// bias correction. Gradients are zeroed after every step.
class Optimizer {
 public:
  Optimizer(OptimizerKind kind, double learning_rate);

  /// Throws NonFiniteError naming the first parameter with a non-finite
  /// gradient; parameters are left untouched in that case.
  void step(ParamSet& params);

  OptimizerKind kind() const { return kind_; }
  double learning_rate() const { return lr_; }
  std::int64_t steps_taken() const { return steps_; }

 private:
  OptimizerKind kind_;
  double lr_;
  std::int64_t steps_ = 0;
  std::vector<Tensor2> first_moment_;
  std::vector<Tensor2> second_moment_;
};

}  // namespace ctdg::nn
