// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <random>
#include <string>

#include "ctdg/nn/autograd.hpp"
#include "ctdg/nn/params.hpp"

namespace ctdg::nn {

/// y = x W + b. Weights Glorot-uniform, bias zero.
class Dense {
 public:
  Dense() = default;
  Dense(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
        std::mt19937_64& rng);

  /// Throws DimensionError naming the layer if x has the wrong width.
  Var operator()(Tape& tape, Var x) const;

  std::size_t in_dim() const { return weight_->value.rows(); }
  std::size_t out_dim() const { return weight_->value.cols(); }
  const std::string& name() const { return name_; }
  Parameter& weight() { return *weight_; }
  Parameter& bias() { return *bias_; }

 private:
  std::string name_;
  Parameter* weight_ = nullptr;
  Parameter* bias_ = nullptr;
};

/// Gate weights of a GRU cell. Columns of the input/hidden matrices are laid
/// out as [reset | update | candidate], each hidden_dim wide.
struct GruCellParams {
  Parameter* input_weight = nullptr;   // input_dim x 3*hidden_dim
  Parameter* hidden_weight = nullptr;  // hidden_dim x 3*hidden_dim
  Parameter* input_bias = nullptr;     // 1 x 3*hidden_dim
  Parameter* hidden_bias = nullptr;    // 1 x 3*hidden_dim

  std::size_t input_dim() const { return input_weight->value.rows(); }
  std::size_t hidden_dim() const { return hidden_weight->value.rows(); }
};

GruCellParams make_gru_cell(ParamSet& params, const std::string& name, std::size_t input_dim,
                            std::size_t hidden_dim, std::mt19937_64& rng);

/// One GRU recurrence over a batch of rows:
///   r = sigmoid(x Wr + br + h Ur + cr)
///   u = sigmoid(x Wu + bu + h Uu + cu)
///   n = tanh(x Wn + bn + r * (h Un + cn))
///   h' = (1 - u) * n + u * h
Var gru_step(Tape& tape, const GruCellParams& cell, Var input, Var state);

}  // namespace ctdg::nn
