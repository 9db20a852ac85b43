// SPDX-License-Identifier: Apache-2.0
#include "ctdg/nn/grad_check.hpp"

#include <algorithm>
#include <cmath>

namespace ctdg::nn {

GradCheckReport grad_check(ParamSet& params, const Objective& objective, double tolerance,
                           double step) {
  params.zero_grad();
  objective(true);
  std::vector<Tensor2> analytic;
  analytic.reserve(params.size());
  for (const auto& p : params) analytic.push_back(p->grad);
  params.zero_grad();

  GradCheckReport report;
  for (std::size_t k = 0; k < params.size(); ++k) {
    Parameter& p = params[k];
    auto values = p.value.values();
    for (std::size_t i = 0; i < values.size(); ++i) {
      const double saved = values[i];
      values[i] = saved + step;
      const double up = objective(false);
      values[i] = saved - step;
      const double down = objective(false);
      values[i] = saved;

      const double numeric = (up - down) / (2.0 * step);
      const double a = analytic[k].values()[i];
      const double denom = std::max({std::abs(a), std::abs(numeric), 1e-6});
      const double rel = std::abs(a - numeric) / denom;
      ++report.entries_checked;
      if (rel > report.max_rel_error || !std::isfinite(rel)) {
        report.max_rel_error = rel;
        report.worst_param = p.name;
      }
      if (!(rel < tolerance)) {
        report.passed = false;
        report.failures.push_back({p.name, i, a, numeric, rel});
      }
    }
  }
  return report;
}

}  // namespace ctdg::nn
