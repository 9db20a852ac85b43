// SPDX-License-Identifier: Apache-2.0
#include "ctdg/selective.hpp"

#include <algorithm>
#include <cmath>

#include "ctdg/error.hpp"

namespace ctdg::selective {

void LossConfig::validate() const {
  if (!(coverage_target > 0.0 && coverage_target <= 1.0)) {
    throw ConfigError("coverage_target must lie in (0, 1]");
  }
  if (!(lambda >= 0.0)) throw ConfigError("lambda must be non-negative");
  if (!(alpha >= 0.0 && alpha <= 1.0)) throw ConfigError("alpha must lie in [0, 1]");
  if (!(beta >= 1.0)) throw ConfigError("beta must be at least 1");
}

double logistic(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z));
}

double psi(double b) { return b > 0.0 ? b * b : 0.0; }

double empirical_coverage(std::span<const double> selection) {
  if (selection.empty()) throw ContractError("empirical_coverage: empty batch");
  double s = 0.0;
  for (double v : selection) s += v;
  return s / static_cast<double>(selection.size());
}

double empirical_selective_risk(std::span<const double> losses, std::span<const double> selection) {
  if (losses.size() != selection.size()) throw DimensionError("selective risk: length mismatch");
  const double coverage = empirical_coverage(selection);
  if (!(coverage > 0.0)) throw ContractError("selective risk undefined at zero coverage");
  double num = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) num += losses[i] * selection[i];
  return num / (static_cast<double>(losses.size()) * coverage);
}

AuxTerms imbalance_aux_terms(std::span<const double> h_losses, std::span<const int> labels) {
  if (h_losses.size() != labels.size()) throw DimensionError("aux loss: length mismatch");
  AuxTerms t;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    (labels[i] == 1 ? t.minority_sum : t.majority_sum) += h_losses[i];
  }
  return t;
}

double imbalance_aux_loss(std::span<const double> h_losses, std::span<const int> labels, double beta) {
  if (!(beta >= 1.0)) throw ContractError("beta must be at least 1");
  if (labels.empty()) throw ContractError("aux loss: empty batch");
  const AuxTerms t = imbalance_aux_terms(h_losses, labels);
  return (beta * t.minority_sum + t.majority_sum) / static_cast<double>(labels.size());
}

double bce(double p, int label) {
  const double q = std::clamp(p, 1e-15, 1.0 - 1e-15);
  return label == 1 ? -std::log(q) : -std::log1p(-q);
}

double bce_logit(double z, int label) {
  // softplus(z) - y z
  const double softplus = z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
  return softplus - (label == 1 ? z : 0.0);
}

namespace {

void check_labels(std::span<const int> labels) {
  if (labels.empty()) throw ContractError("selective loss: empty batch");
  for (int y : labels) {
    if (y != 0 && y != 1) throw ContractError("selective loss: labels must be 0 or 1");
  }
}

/// Loss and partials with respect to the per-example f-loss, selection and
/// h-loss.
LossAndGrad combine(std::span<const double> f_loss, std::span<const double> selection,
                    std::span<const double> h_loss, std::span<const int> labels, const LossConfig& cfg,
                    bool minority_weighting) {
  cfg.validate();
  const std::size_t n = labels.size();
  const double nd = static_cast<double>(n);
  double total_sel = 0.0;
  double weighted = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    total_sel += selection[i];
    weighted += f_loss[i] * selection[i];
  }
  if (!(total_sel > 0.0)) throw ContractError("selective loss undefined at zero coverage");

  LossAndGrad out;
  LossBreakdown& v = out.value;
  v.coverage = total_sel / nd;
  v.risk = weighted / total_sel;
  const double deficit = cfg.coverage_target - v.coverage;
  v.penalty = cfg.lambda * psi(deficit);
  const double beta = minority_weighting ? cfg.beta : 1.0;
  std::vector<double> weights(n);
  for (std::size_t i = 0; i < n; ++i) weights[i] = labels[i] == 1 ? beta : 1.0;
  double aux_sum = 0.0;
  for (std::size_t i = 0; i < n; ++i) aux_sum += weights[i] * h_loss[i];
  v.aux = aux_sum / nd;
  v.loss = cfg.alpha * (v.risk + v.penalty) + (1.0 - cfg.alpha) * v.aux;

  out.d_f.resize(n);
  out.d_a.resize(n);
  out.d_h.resize(n);
  const double penalty_slope = -2.0 * cfg.lambda * std::max(0.0, deficit) / nd;
  for (std::size_t i = 0; i < n; ++i) {
    out.d_f[i] = cfg.alpha * selection[i] / total_sel;
    out.d_a[i] = cfg.alpha * ((f_loss[i] - v.risk) / total_sel + penalty_slope);  // d/ds; callers map to a
    out.d_h[i] = (1.0 - cfg.alpha) * weights[i] / nd;
  }
  return out;
}

LossAndGrad probability_loss(std::span<const SelectiveOutput> outputs, std::span<const int> labels,
                             const LossConfig& cfg, bool minority_weighting) {
  check_labels(labels);
  if (outputs.size() != labels.size()) throw DimensionError("selective loss: length mismatch");
  const std::size_t n = labels.size();
  std::vector<double> lf(n), sel(n), lh(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = outputs[i];
    if (!(o.a >= 0.0 && o.a <= 1.0)) throw ContractError("abstention score must lie in [0, 1]");
    lf[i] = bce(o.f, labels[i]);
    sel[i] = 1.0 - o.a;
    lh[i] = bce(o.h, labels[i]);
  }
  LossAndGrad out = combine(lf, sel, lh, labels, cfg, minority_weighting);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& o = outputs[i];
    const double pf = std::clamp(o.f, 1e-15, 1.0 - 1e-15);
    const double ph = std::clamp(o.h, 1e-15, 1.0 - 1e-15);
    out.d_f[i] *= (pf - labels[i]) / (pf * (1.0 - pf));
    out.d_a[i] *= -1.0;
    out.d_h[i] *= (ph - labels[i]) / (ph * (1.0 - ph));
  }
  return out;
}

}  // namespace

LossAndGrad selective_loss(std::span<const SelectiveOutput> outputs, std::span<const int> labels,
                           const LossConfig& cfg) {
  return probability_loss(outputs, labels, cfg, false);
}

LossAndGrad selective_loss_node(std::span<const SelectiveOutput> outputs, std::span<const int> labels,
                                const LossConfig& cfg) {
  return probability_loss(outputs, labels, cfg, true);
}

LossAndGrad selective_loss_logits(const HeadLogits& logits, std::span<const int> labels,
                                  const LossConfig& cfg, bool minority_weighting) {
  check_labels(labels);
  const std::size_t n = labels.size();
  if (logits.f.size() != n || logits.a.size() != n || logits.h.size() != n) {
    throw DimensionError("selective loss: logit/label length mismatch");
  }
  std::vector<double> lf(n), sel(n), lh(n);
  for (std::size_t i = 0; i < n; ++i) {
    lf[i] = bce_logit(logits.f[i], labels[i]);
    sel[i] = logistic(-logits.a[i]);
    lh[i] = bce_logit(logits.h[i], labels[i]);
  }
  LossAndGrad out = combine(lf, sel, lh, labels, cfg, minority_weighting);
  for (std::size_t i = 0; i < n; ++i) {
    const double a = logistic(logits.a[i]);
    out.d_f[i] *= logistic(logits.f[i]) - labels[i];
    out.d_a[i] *= -a * (1.0 - a);
    out.d_h[i] *= logistic(logits.h[i]) - labels[i];
  }
  return out;
}

SelectiveHeads::SelectiveHeads(nn::ParamSet& params, const std::string& prefix, std::size_t input_dim,
                               std::size_t hidden_dim, std::mt19937_64& rng)
    : trunk_(params, prefix + ".trunk", input_dim, hidden_dim, rng),
      f_head_(params, prefix + ".f_head", hidden_dim, 1, rng),
      a_head_(params, prefix + ".a_head", hidden_dim, 1, rng),
      h_head_(params, prefix + ".h_head", hidden_dim, 1, rng) {}

void SelectiveHeads::set_initial_coverage(double c) {
  const double a = std::clamp(1.0 - c, 0.01, 0.99);
  a_head_.bias().value.fill(std::log(a / (1.0 - a)));
}

SelectiveHeads::Logits SelectiveHeads::operator()(nn::Tape& tape, nn::Var input) const {
  nn::Var hidden = nn::relu(trunk_(tape, input));
  return {f_head_(tape, hidden), a_head_(tape, hidden), h_head_(tape, hidden)};
}

}  // namespace ctdg::selective
