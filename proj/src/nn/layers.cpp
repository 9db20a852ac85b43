// SPDX-License-Identifier: Apache-2.0
#include "ctdg/nn/layers.hpp"

#include "ctdg/error.hpp"

namespace ctdg::nn {

Dense::Dense(ParamSet& params, const std::string& name, std::size_t in, std::size_t out,
             std::mt19937_64& rng)
    : name_(name),
      weight_(&params.add(name + ".weight", in, out)),
      bias_(&params.add(name + ".bias", 1, out)) {
  glorot_uniform(weight_->value, rng);
}

Var Dense::operator()(Tape& tape, Var x) const {
  if (x.cols() != weight_->value.rows()) {
    throw DimensionError("layer '" + name_ + "': input width " + std::to_string(x.cols()) +
                         ", expected " + std::to_string(weight_->value.rows()));
  }
  return affine(x, tape.param(*weight_), tape.param(*bias_));
}

GruCellParams make_gru_cell(ParamSet& params, const std::string& name, std::size_t input_dim,
                            std::size_t hidden_dim, std::mt19937_64& rng) {
  GruCellParams cell;
  cell.input_weight = &params.add(name + ".input_weight", input_dim, 3 * hidden_dim);
  cell.hidden_weight = &params.add(name + ".hidden_weight", hidden_dim, 3 * hidden_dim);
  cell.input_bias = &params.add(name + ".input_bias", 1, 3 * hidden_dim);
  cell.hidden_bias = &params.add(name + ".hidden_bias", 1, 3 * hidden_dim);
  glorot_uniform(cell.input_weight->value, rng);
  glorot_uniform(cell.hidden_weight->value, rng);
  return cell;
}

Var gru_step(Tape& tape, const GruCellParams& cell, Var input, Var state) {
  const std::size_t h = cell.hidden_dim();
  if (input.cols() != cell.input_dim()) {
    throw DimensionError("gru_step: input width " + std::to_string(input.cols()) + ", expected " +
                         std::to_string(cell.input_dim()));
  }
  if (state.cols() != h || state.rows() != input.rows()) {
    throw DimensionError("gru_step: state " + state.value().shape_string() + " vs input rows " +
                         std::to_string(input.rows()) + ", hidden " + std::to_string(h));
  }
  Var gx = affine(input, tape.param(*cell.input_weight), tape.param(*cell.input_bias));
  Var gh = affine(state, tape.param(*cell.hidden_weight), tape.param(*cell.hidden_bias));
  Var reset = sigmoid(add(slice_cols(gx, 0, h), slice_cols(gh, 0, h)));
  Var update = sigmoid(add(slice_cols(gx, h, h), slice_cols(gh, h, h)));
  Var candidate = tanh(add(slice_cols(gx, 2 * h, h), mul(reset, slice_cols(gh, 2 * h, h))));
  return add(mul(one_minus(update), candidate), mul(update, state));
}

}  // namespace ctdg::nn
