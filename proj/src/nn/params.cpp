// SPDX-License-Identifier: Apache-2.0
#include "ctdg/nn/params.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>

#include "ctdg/error.hpp"

namespace ctdg::nn {

Parameter& ParamSet::add(const std::string& name, std::size_t rows, std::size_t cols) {
  if (contains(name)) throw ConfigError("duplicate parameter name '" + name + "'");
  auto p = std::make_unique<Parameter>();
  p->name = name;
  p->value = Tensor2(rows, cols);
  p->grad = Tensor2(rows, cols);
  params_.push_back(std::move(p));
  return *params_.back();
}

Parameter& ParamSet::get(const std::string& name) {
  for (auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

const Parameter& ParamSet::get(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return *p;
  }
  throw ConfigError("unknown parameter '" + name + "'");
}

bool ParamSet::contains(const std::string& name) const {
  for (const auto& p : params_) {
    if (p->name == name) return true;
  }
  return false;
}

std::size_t ParamSet::scalar_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p->value.size();
  return n;
}

void ParamSet::zero_grad() {
  for (auto& p : params_) p->grad.fill(0.0);
}

std::vector<Tensor2> ParamSet::snapshot() const {
  std::vector<Tensor2> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p->value);
  return out;
}

void ParamSet::restore(const std::vector<Tensor2>& values) {
  if (values.size() != params_.size()) throw DimensionError("restore: parameter count mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].same_shape(params_[i]->value)) {
      throw DimensionError("restore: shape mismatch for '" + params_[i]->name + "'");
    }
    params_[i]->value = values[i];
  }
}

std::uint64_t ParamSet::checksum() const {
  std::uint64_t h = 1469598103934665603ULL;
  for (const auto& p : params_) {
    const auto* bytes = reinterpret_cast<const unsigned char*>(p->value.data());
    for (std::size_t i = 0; i < p->value.size() * sizeof(double); ++i) {
      h ^= bytes[i];
      h *= 1099511628211ULL;
    }
  }
  return h;
}

void glorot_uniform(Tensor2& w, std::mt19937_64& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(w.rows() + w.cols()));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (double& x : w.values()) x = dist(rng);
}

void write_params(std::ostream& out, const ParamSet& params) {
  out << "ctdg-params 1\n" << params.size() << '\n';
  out << std::setprecision(17);
  for (const auto& p : params) {
    out << p->name << ' ' << p->value.rows() << ' ' << p->value.cols() << '\n';
    const auto vals = p->value.values();
    for (std::size_t i = 0; i < vals.size(); ++i) {
      if (i) out << ' ';
      out << vals[i];
    }
    out << '\n';
  }
}

void read_params(std::istream& in, ParamSet& params) {
  std::string magic;
  int version = 0;
  std::size_t count = 0;
  if (!(in >> magic >> version) || magic != "ctdg-params" || version != 1) {
    throw ParseError(1, "not a ctdg-params v1 checkpoint");
  }
  if (!(in >> count)) throw ParseError(2, "missing parameter count");
  for (std::size_t k = 0; k < count; ++k) {
    std::string name;
    std::size_t rows = 0, cols = 0;
    if (!(in >> name >> rows >> cols)) {
      throw ParseError(3 + 2 * k, "truncated parameter header");
    }
    Parameter& p = params.get(name);
    if (p.value.rows() != rows || p.value.cols() != cols) {
      std::ostringstream msg;
      msg << "shape of '" << name << "' is (" << rows << "x" << cols << "), expected "
          << p.value.shape_string();
      throw DimensionError(msg.str());
    }
    for (double& v : p.value.values()) {
      if (!(in >> v)) throw ParseError(4 + 2 * k, "truncated values for '" + name + "'");
    }
  }
}

void save_params(const std::filesystem::path& path, const ParamSet& params) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_params(out, params);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

void load_params(const std::filesystem::path& path, ParamSet& params) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open checkpoint '" + path.string() + "'");
  read_params(in, params);
}

}  // namespace ctdg::nn
