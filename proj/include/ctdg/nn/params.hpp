// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

#include "ctdg/nn/tensor.hpp"

namespace ctdg::nn {

/// A trainable tensor with its gradient buffer.
struct Parameter {
  std::string name;
  Tensor2 value;
  Tensor2 grad;
};

/// Named, ordered collection of parameters. Addresses are stable for the
/// lifetime of the set, so layers may hold raw pointers into it.
class ParamSet {
 public:
  ParamSet() = default;
  ParamSet(const ParamSet&) = delete;
  ParamSet& operator=(const ParamSet&) = delete;
  ParamSet(ParamSet&&) noexcept = default;
  ParamSet& operator=(ParamSet&&) noexcept = default;

  /// Registers a zero-initialized parameter. Throws ConfigError on a duplicate name.
  Parameter& add(const std::string& name, std::size_t rows, std::size_t cols);

  Parameter& get(const std::string& name);
  const Parameter& get(const std::string& name) const;
  bool contains(const std::string& name) const;

  std::size_t size() const noexcept { return params_.size(); }
  std::size_t scalar_count() const;

  Parameter& operator[](std::size_t i) { return *params_[i]; }
  const Parameter& operator[](std::size_t i) const { return *params_[i]; }

  void zero_grad();

  /// Copies of all values, in registration order.
  std::vector<Tensor2> snapshot() const;
  void restore(const std::vector<Tensor2>& values);

  /// FNV-1a over the raw bytes of every value; used to assert frozen parameters.
  std::uint64_t checksum() const;

  auto begin() { return params_.begin(); }
  auto end() { return params_.end(); }
  auto begin() const { return params_.begin(); }
  auto end() const { return params_.end(); }

 private:
  std::vector<std::unique_ptr<Parameter>> params_;
};

/// Uniform in +-sqrt(6 / (fan_in + fan_out)).
void glorot_uniform(Tensor2& w, std::mt19937_64& rng);

// Checkpoint text format (version 1):
//   ctdg-params 1
//   <count>
//   then per parameter: "<name> <rows> <cols>" followed by one line of
//   rows*cols values in row-major order, printed with 17 significant digits.
// Loading requires every stored name to exist in the target set with the same shape.
void write_params(std::ostream& out, const ParamSet& params);
void read_params(std::istream& in, ParamSet& params);
void save_params(const std::filesystem::path& path, const ParamSet& params);
void load_params(const std::filesystem::path& path, ParamSet& params);

}  // namespace ctdg::nn
