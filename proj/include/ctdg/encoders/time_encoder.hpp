// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <vector>

namespace ctdg::encoders {

/// Fixed (untrained) cosine features of elapsed time.
struct TimeEncoderConfig {
  std::vector<double> frequencies;  // positive, strictly decreasing

  std::size_t dim() const { return frequencies.size(); }
};

/// Geometric spectrum from 1 down to 1/t_max: w_i = t_max^(-(i-1)/(dim-1)).
/// t_max is clamped to at least 2.
TimeEncoderConfig make_time_encoder(std::size_t dim, double t_max);

/// [cos(w_1 dt), ..., cos(w_d dt)]. Throws ContractError for dt < 0.
std::vector<double> time_encode(const TimeEncoderConfig& cfg, double dt);
void time_encode(const TimeEncoderConfig& cfg, double dt, std::span<double> out);

}  // namespace ctdg::encoders
