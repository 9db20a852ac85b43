// SPDX-License-Identifier: Apache-2.0
#include "ctdg/nn/optimizer.hpp"

#include <cmath>
#include <sstream>

#include "ctdg/error.hpp"

namespace ctdg::nn {

namespace {
constexpr double kBeta1 = 0.9;
constexpr double kBeta2 = 0.999;
constexpr double kEps = 1e-8;
}  // namespace

OptimizerKind parse_optimizer(const std::string& name) {
  if (name == "adam" || name == "adaptive_moment") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ConfigError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

Optimizer::Optimizer(OptimizerKind kind, double learning_rate) : kind_(kind), lr_(learning_rate) {
  if (!(learning_rate > 0.0)) throw ConfigError("learning rate must be positive");
}

void Optimizer::step(ParamSet& params) {
  for (const auto& p : params) {
    const auto g = p->grad.values();
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (!std::isfinite(g[i])) {
        std::ostringstream msg;
        msg << "non-finite gradient " << g[i] << " in parameter '" << p->name << "' at flat index "
            << i << " (shape " << p->grad.shape_string() << ")";
        throw NonFiniteError(msg.str());
      }
    }
  }
  ++steps_;
  if (kind_ == OptimizerKind::sgd) {
    for (auto& p : params) {
      auto v = p->value.values();
      const auto g = p->grad.values();
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= lr_ * g[i];
    }
  } else {
    if (first_moment_.size() != params.size()) {
      first_moment_.clear();
      second_moment_.clear();
      for (const auto& p : params) {
        first_moment_.emplace_back(p->value.rows(), p->value.cols());
        second_moment_.emplace_back(p->value.rows(), p->value.cols());
      }
    }
    const double c1 = 1.0 - std::pow(kBeta1, static_cast<double>(steps_));
    const double c2 = 1.0 - std::pow(kBeta2, static_cast<double>(steps_));
    for (std::size_t k = 0; k < params.size(); ++k) {
      auto v = params[k].value.values();
      const auto g = params[k].grad.values();
      auto m = first_moment_[k].values();
      auto s = second_moment_[k].values();
      for (std::size_t i = 0; i < v.size(); ++i) {
        m[i] = kBeta1 * m[i] + (1.0 - kBeta1) * g[i];
        s[i] = kBeta2 * s[i] + (1.0 - kBeta2) * g[i] * g[i];
        v[i] -= lr_ * (m[i] / c1) / (std::sqrt(s[i] / c2) + kEps);
      }
    }
  }
  params.zero_grad();
}

}  // namespace ctdg::nn
