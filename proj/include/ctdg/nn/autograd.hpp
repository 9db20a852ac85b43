// SPDX-License-Identifier: Apache-2.0
//
// Tape-based reverse-mode differentiation over Tensor2.
//
// Every op appends a node holding its forward value and a closure that
// propagates the node's gradient to its inputs. Nodes are only ever appended,
// so a node's inputs always precede it and a single reverse sweep is exact.
// Parameters enter the tape as leaves bound to a Parameter; backward() adds
// their accumulated gradients into Parameter::grad.
#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <unordered_map>
#include <utility>
#include <vector>

#include "ctdg/nn/params.hpp"
#include "ctdg/nn/tensor.hpp"

namespace ctdg::nn {

class Tape;

/// Handle to a node on a Tape.
struct Var {
  Tape* tape = nullptr;
  std::size_t id = 0;

  const Tensor2& value() const;
  std::size_t rows() const { return value().rows(); }
  std::size_t cols() const { return value().cols(); }
};

class Tape {
 public:
  using BackwardFn = std::function<void(Tape&, std::size_t self)>;

  Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  Var constant(Tensor2 value);
  /// Differentiable leaf not bound to a parameter (its gradient stays on the tape).
  Var leaf(Tensor2 value);
  /// Leaf bound to `p`; repeated calls within one tape return the same node.
  Var param(Parameter& p);

  Var push(Tensor2 value, std::vector<std::size_t> inputs, BackwardFn backward);

  const Tensor2& value(std::size_t id) const { return nodes_[id].value; }
  const Tensor2& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(std::size_t id) const { return nodes_[id].requires_grad; }
  /// Gradient buffer of a node, allocated as zeros on first access.
  Tensor2& grad(std::size_t id);
  const Tensor2& grad(Var v) { return grad(v.id); }

  /// Seeds dL/d(var) for each pair and sweeps the tape in reverse.
  void backward(std::span<const std::pair<Var, Tensor2>> seeds);
  void backward(Var root, const Tensor2& seed);

  std::size_t size() const noexcept { return nodes_.size(); }
  /// Distinct for every Tape constructed in the process.
  std::uint64_t serial() const noexcept { return serial_; }

 private:
  struct Node {
    Tensor2 value;
    Tensor2 grad;
    std::vector<std::size_t> inputs;
    BackwardFn backward;
    Parameter* param = nullptr;
    bool requires_grad = false;
  };
  std::vector<Node> nodes_;
  std::unordered_map<Parameter*, std::size_t> param_nodes_;
  std::uint64_t serial_;
};

// Matrix algebra.
Var matmul(Var a, Var b);
/// x * w + b with b a (1 x out) row broadcast over rows.
Var affine(Var x, Var w, Var b);
Var add(Var a, Var b);
Var sub(Var a, Var b);
Var mul(Var a, Var b);
Var scale(Var a, double s);
/// 1 - a, elementwise.
Var one_minus(Var a);
Var sum_all(Var a);

// Nonlinearities.
Var relu(Var a);
Var sigmoid(Var a);
Var tanh(Var a);

// Structural.
Var concat_cols(std::span<const Var> parts);
Var slice_cols(Var a, std::size_t begin, std::size_t count);
Var gather_rows(Var a, std::span<const std::size_t> index);
Var vstack(std::span<const Var> parts);
/// Row sums over consecutive segments; offsets has one more entry than segments.
/// Empty segments produce zero rows.
Var segment_sum(Var a, std::span<const std::size_t> offsets);
/// Mean over `blocks` equal consecutive row blocks.
Var block_mean(Var a, std::size_t blocks);
/// (blocks*r x c) -> (blocks*c x r): transposes each row block in place.
Var block_transpose(Var a, std::size_t blocks);

}  // namespace ctdg::nn
