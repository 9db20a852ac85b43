// SPDX-License-Identifier: Apache-2.0
//
// Coverage-constrained selective objective with an auxiliary head.
//
// For a batch of N examples with prediction probability f_i, abstention
// score a_i and auxiliary probability h_i, training uses the soft selection
// s_i = 1 - a_i:
//
//   coverage   phi  = (1/N) sum s_i
//   risk       r    = sum l(f_i, y_i) s_i / (N phi)
//   selective  L_fq = r + lambda * max(0, c - phi)^2
//   auxiliary  L_h  = (beta * sum_{y=1} l(h_i, y_i) + sum_{y=0} l(h_i, y_i)) / N
//   total      L    = alpha * L_fq + (1 - alpha) * L_h
//
// with l the binary cross-entropy. Link training uses beta = 1; node
// training applies the minority weighting. At evaluation the selection is
// hardened by a threshold on a (see calibration.hpp).
#pragma once

#include <random>
#include <span>
#include <vector>

#include "ctdg/nn/autograd.hpp"
#include "ctdg/nn/layers.hpp"

namespace ctdg::selective {

struct LossConfig {
  double coverage_target = 1.0;  // c in (0, 1]
  double lambda = 32.0;
  double alpha = 0.5;
  double beta = 1.0;  // >= 1; weight of the minority class (label 1) in L_h

  /// Throws ConfigError when a field is out of range.
  void validate() const;
};

struct SelectiveOutput {
  double f = 0.0;
  double a = 0.0;
  double h = 0.0;
};

/// max(0, b)^2
double psi(double b);

/// Mean of the selections; throws ContractError on an empty batch.
double empirical_coverage(std::span<const double> selection);

/// sum l_i s_i / (N * coverage); throws ContractError when coverage is zero.
double empirical_selective_risk(std::span<const double> losses, std::span<const double> selection);

/// (beta * sum over label-1 losses + sum over label-0 losses) / N.
double imbalance_aux_loss(std::span<const double> h_losses, std::span<const int> labels, double beta);

/// The two sums of imbalance_aux_loss before weighting and normalization.
struct AuxTerms {
  double minority_sum = 0.0;
  double majority_sum = 0.0;
};
AuxTerms imbalance_aux_terms(std::span<const double> h_losses, std::span<const int> labels);

/// Binary cross-entropy of a probability; p is clamped to [1e-15, 1 - 1e-15].
double bce(double p, int label);
/// Binary cross-entropy of a logit, computed without overflow.
double bce_logit(double z, int label);

struct LossBreakdown {
  double loss = 0.0;
  double risk = 0.0;
  double coverage = 0.0;
  double penalty = 0.0;  // lambda * psi(c - coverage)
  double aux = 0.0;
};

/// Loss value plus gradients with respect to the three head outputs.
struct LossAndGrad {
  LossBreakdown value;
  std::vector<double> d_f;
  std::vector<double> d_a;
  std::vector<double> d_h;
};

/// Link objective over probabilities (beta is ignored). Gradients are with
/// respect to f, a and h.
LossAndGrad selective_loss(std::span<const SelectiveOutput> outputs, std::span<const int> labels,
                           const LossConfig& cfg);
/// Node objective over probabilities, with minority weighting on the auxiliary term.
LossAndGrad selective_loss_node(std::span<const SelectiveOutput> outputs, std::span<const int> labels,
                                const LossConfig& cfg);

/// Head pre-activations; f = sigmoid(f_logit) and so on.
struct HeadLogits {
  std::span<const double> f;
  std::span<const double> a;
  std::span<const double> h;
};

/// Same objectives over logits (the training path); gradients are with
/// respect to the logits. `minority_weighting` selects the node variant.
LossAndGrad selective_loss_logits(const HeadLogits& logits, std::span<const int> labels,
                                  const LossConfig& cfg, bool minority_weighting);

/// Shared trunk and three scalar heads.
///   trunk: Dense(in -> hidden), ReLU
///   f, a, h: Dense(hidden -> 1) each, logistic outputs
class SelectiveHeads {
 public:
  SelectiveHeads() = default;
  SelectiveHeads(nn::ParamSet& params, const std::string& prefix, std::size_t input_dim,
                 std::size_t hidden_dim, std::mt19937_64& rng);

  struct Logits {
    nn::Var f;
    nn::Var a;
    nn::Var h;
  };
  /// Columns of the returned logits are single (rows = examples).
  Logits operator()(nn::Tape& tape, nn::Var input) const;

  std::size_t input_dim() const { return trunk_.in_dim(); }

  /// Sets the abstention bias so an untrained head keeps a fraction c of
  /// inputs on average (a = 1 - c, floored at 0.01).
  void set_initial_coverage(double c);

 private:
  nn::Dense trunk_;
  nn::Dense f_head_;
  nn::Dense a_head_;
  nn::Dense h_head_;
};

double logistic(double z);

}  // namespace ctdg::selective
