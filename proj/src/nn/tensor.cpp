// SPDX-License-Identifier: Apache-2.0
#include "ctdg/nn/tensor.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>

#include "ctdg/error.hpp"

namespace ctdg::nn {

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMajor>;
using MutMap = Eigen::Map<RowMajor>;

ConstMap view(const Tensor2& t) { return ConstMap(t.data(), t.rows(), t.cols()); }
MutMap view(Tensor2& t) { return MutMap(t.data(), t.rows(), t.cols()); }

void prepare(Tensor2& out, std::size_t rows, std::size_t cols, bool accumulate) {
  if (accumulate) {
    if (out.rows() != rows || out.cols() != cols) {
      throw DimensionError("matmul accumulate target has shape " + out.shape_string());
    }
  } else if (out.rows() != rows || out.cols() != cols) {
    out = Tensor2(rows, cols);
  }
}

}  // namespace

Tensor2::Tensor2(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  if (data_.size() != rows_ * cols_) {
    throw DimensionError("tensor data length " + std::to_string(data_.size()) + " does not match " +
                         shape_string());
  }
}

Tensor2 Tensor2::row_vector(std::span<const double> values) {
  return Tensor2(1, values.size(), std::vector<double>(values.begin(), values.end()));
}

Tensor2 Tensor2::column_vector(std::span<const double> values) {
  return Tensor2(values.size(), 1, std::vector<double>(values.begin(), values.end()));
}

void Tensor2::fill(double v) { std::fill(data_.begin(), data_.end(), v); }

bool Tensor2::all_finite() const noexcept {
  return std::all_of(data_.begin(), data_.end(), [](double x) { return std::isfinite(x); });
}

std::string Tensor2::shape_string() const {
  return "(" + std::to_string(rows_) + "x" + std::to_string(cols_) + ")";
}

Tensor2& Tensor2::operator+=(const Tensor2& o) {
  if (!same_shape(o)) throw DimensionError("add: " + shape_string() + " vs " + o.shape_string());
  for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
  return *this;
}

void matmul(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
  if (a.cols() != b.rows()) {
    throw DimensionError("matmul: " + a.shape_string() + " * " + b.shape_string());
  }
  prepare(out, a.rows(), b.cols(), accumulate);
  if (accumulate) {
    view(out).noalias() += view(a) * view(b);
  } else {
    view(out).noalias() = view(a) * view(b);
  }
}

void matmul_tn(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
  if (a.rows() != b.rows()) {
    throw DimensionError("matmul_tn: " + a.shape_string() + "^T * " + b.shape_string());
  }
  prepare(out, a.cols(), b.cols(), accumulate);
  if (accumulate) {
    view(out).noalias() += view(a).transpose() * view(b);
  } else {
    view(out).noalias() = view(a).transpose() * view(b);
  }
}

void matmul_nt(const Tensor2& a, const Tensor2& b, Tensor2& out, bool accumulate) {
  if (a.cols() != b.cols()) {
    throw DimensionError("matmul_nt: " + a.shape_string() + " * " + b.shape_string() + "^T");
  }
  prepare(out, a.rows(), b.rows(), accumulate);
  if (accumulate) {
    view(out).noalias() += view(a) * view(b).transpose();
  } else {
    view(out).noalias() = view(a) * view(b).transpose();
  }
}

}  // namespace ctdg::nn
