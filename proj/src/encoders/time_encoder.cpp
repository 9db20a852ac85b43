// SPDX-License-Identifier: Apache-2.0
#include "ctdg/encoders/time_encoder.hpp"

#include <algorithm>
#include <cmath>

#include "ctdg/error.hpp"

namespace ctdg::encoders {

TimeEncoderConfig make_time_encoder(std::size_t dim, double t_max) {
  if (dim == 0) throw ConfigError("time encoding dimension must be positive");
  TimeEncoderConfig cfg;
  cfg.frequencies.resize(dim);
  const double span = std::max(t_max, 2.0);
  for (std::size_t i = 0; i < dim; ++i) {
    const double exponent = dim == 1 ? 0.0 : static_cast<double>(i) / static_cast<double>(dim - 1);
    cfg.frequencies[i] = std::pow(span, -exponent);
  }
  return cfg;
}

void time_encode(const TimeEncoderConfig& cfg, double dt, std::span<double> out) {
  if (!(dt >= 0.0)) throw ContractError("time_encode: elapsed time must be non-negative");
  if (out.size() != cfg.dim()) throw DimensionError("time_encode: output width mismatch");
  for (std::size_t i = 0; i < cfg.dim(); ++i) out[i] = std::cos(cfg.frequencies[i] * dt);
}

std::vector<double> time_encode(const TimeEncoderConfig& cfg, double dt) {
  std::vector<double> out(cfg.dim());
  time_encode(cfg, dt, out);
  return out;
}

}  // namespace ctdg::encoders
