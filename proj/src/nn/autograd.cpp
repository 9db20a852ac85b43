// SPDX-License-Identifier: Apache-2.0
#include "ctdg/nn/autograd.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>

#include "ctdg/error.hpp"

namespace ctdg::nn {

const Tensor2& Var::value() const { return tape->value(id); }

Tape::Tape() {
  static std::atomic<std::uint64_t> counter{0};
  serial_ = ++counter;
}

Var Tape::constant(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, false});
  return Var{this, nodes_.size() - 1};
}

Var Tape::leaf(Tensor2 value) {
  nodes_.push_back(Node{std::move(value), {}, {}, {}, nullptr, true});
  return Var{this, nodes_.size() - 1};
}

Var Tape::param(Parameter& p) {
  if (auto it = param_nodes_.find(&p); it != param_nodes_.end()) return Var{this, it->second};
  nodes_.push_back(Node{p.value, {}, {}, {}, &p, true});
  param_nodes_.emplace(&p, nodes_.size() - 1);
  return Var{this, nodes_.size() - 1};
}

Var Tape::push(Tensor2 value, std::vector<std::size_t> inputs, BackwardFn backward) {
  const bool needs = std::any_of(inputs.begin(), inputs.end(),
                                 [this](std::size_t i) { return nodes_[i].requires_grad; });
  Node node{std::move(value), {}, std::move(inputs), {}, nullptr, needs};
  if (needs) node.backward = std::move(backward);
  nodes_.push_back(std::move(node));
  return Var{this, nodes_.size() - 1};
}

Tensor2& Tape::grad(std::size_t id) {
  Node& n = nodes_[id];
  if (n.grad.rows() != n.value.rows() || n.grad.cols() != n.value.cols()) {
    n.grad = Tensor2(n.value.rows(), n.value.cols());
  }
  return n.grad;
}

void Tape::backward(std::span<const std::pair<Var, Tensor2>> seeds) {
  std::size_t last = 0;
  for (const auto& [var, seed] : seeds) {
    if (var.tape != this) throw Error("backward: seed variable belongs to another tape");
    if (!seed.same_shape(nodes_[var.id].value)) {
      throw DimensionError("backward: seed shape " + seed.shape_string() + " vs value " +
                           nodes_[var.id].value.shape_string());
    }
    if (!nodes_[var.id].requires_grad) continue;
    grad(var.id) += seed;
    last = std::max(last, var.id + 1);
  }
  for (std::size_t i = last; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.requires_grad || n.grad.empty()) continue;
    if (n.backward) n.backward(*this, i);
    if (n.param != nullptr) n.param->grad += n.grad;
  }
}

void Tape::backward(Var root, const Tensor2& seed) {
  std::pair<Var, Tensor2> s{root, seed};
  backward(std::span<const std::pair<Var, Tensor2>>(&s, 1));
}

namespace {

Tape& tape_of(Var a, Var b) {
  if (a.tape == nullptr || a.tape != b.tape) throw Error("variables from different tapes");
  return *a.tape;
}

void require_same(const char* op, const Tensor2& a, const Tensor2& b) {
  if (!a.same_shape(b)) {
    throw DimensionError(std::string(op) + ": " + a.shape_string() + " vs " + b.shape_string());
  }
}

}  // namespace

Var matmul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  Tensor2 out;
  nn::matmul(t.value(a), t.value(b), out);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    if (tp.requires_grad(ia)) matmul_nt(g, tp.value(ib), tp.grad(ia), true);
    if (tp.requires_grad(ib)) matmul_tn(tp.value(ia), g, tp.grad(ib), true);
  });
}

Var affine(Var x, Var w, Var b) {
  Tape& t = tape_of(x, w);
  tape_of(w, b);
  const Tensor2& xv = t.value(x);
  const Tensor2& wv = t.value(w);
  const Tensor2& bv = t.value(b);
  if (xv.cols() != wv.rows()) {
    throw DimensionError("affine: input " + xv.shape_string() + " vs weight " + wv.shape_string());
  }
  if (bv.rows() != 1 || bv.cols() != wv.cols()) {
    throw DimensionError("affine: bias " + bv.shape_string() + " vs weight " + wv.shape_string());
  }
  Tensor2 out(xv.rows(), wv.cols());
  for (std::size_t r = 0; r < out.rows(); ++r) {
    std::copy(bv.data(), bv.data() + bv.cols(), out.row(r).data());
  }
  nn::matmul(xv, wv, out, true);
  const std::size_t ix = x.id, iw = w.id, ib = b.id;
  return t.push(std::move(out), {ix, iw, ib}, [ix, iw, ib](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    if (tp.requires_grad(ix)) matmul_nt(g, tp.value(iw), tp.grad(ix), true);
    if (tp.requires_grad(iw)) matmul_tn(tp.value(ix), g, tp.grad(iw), true);
    if (tp.requires_grad(ib)) {
      Tensor2& gb = tp.grad(ib);
      for (std::size_t r = 0; r < g.rows(); ++r) {
        for (std::size_t c = 0; c < g.cols(); ++c) gb(0, c) += g(r, c);
      }
    }
  });
}

Var add(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same("add", t.value(a), t.value(b));
  Tensor2 out = t.value(a);
  out += t.value(b);
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) tp.grad(ib) += g;
  });
}

Var sub(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same("sub", t.value(a), t.value(b));
  Tensor2 out = t.value(a);
  const Tensor2& bv = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] -= bv.data()[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    if (tp.requires_grad(ia)) tp.grad(ia) += g;
    if (tp.requires_grad(ib)) {
      Tensor2& gb = tp.grad(ib);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] -= g.data()[i];
    }
  });
}

Var mul(Var a, Var b) {
  Tape& t = tape_of(a, b);
  require_same("mul", t.value(a), t.value(b));
  Tensor2 out = t.value(a);
  const Tensor2& bv = t.value(b);
  for (std::size_t i = 0; i < out.size(); ++i) out.data()[i] *= bv.data()[i];
  const std::size_t ia = a.id, ib = b.id;
  return t.push(std::move(out), {ia, ib}, [ia, ib](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    if (tp.requires_grad(ia)) {
      Tensor2& ga = tp.grad(ia);
      const Tensor2& bv = tp.value(ib);
      for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += g.data()[i] * bv.data()[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor2& gb = tp.grad(ib);
      const Tensor2& av = tp.value(ia);
      for (std::size_t i = 0; i < g.size(); ++i) gb.data()[i] += g.data()[i] * av.data()[i];
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = *a.tape;
  Tensor2 out = t.value(a);
  for (double& v : out.values()) v *= s;
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia, s](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] += s * g.data()[i];
  });
}

Var one_minus(Var a) {
  Tape& t = *a.tape;
  Tensor2 out = t.value(a);
  for (double& v : out.values()) v = 1.0 - v;
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) ga.data()[i] -= g.data()[i];
  });
}

Var sum_all(Var a) {
  Tape& t = *a.tape;
  double s = 0.0;
  for (double v : t.value(a).values()) s += v;
  const std::size_t ia = a.id;
  return t.push(Tensor2(1, 1, s), {ia}, [ia](Tape& tp, std::size_t self) {
    const double g = tp.grad(self)(0, 0);
    for (double& v : tp.grad(ia).values()) v += g;
  });
}

Var relu(Var a) {
  Tape& t = *a.tape;
  Tensor2 out = t.value(a);
  for (double& v : out.values()) v = v > 0.0 ? v : 0.0;
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    const Tensor2& x = tp.value(ia);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      if (x.data()[i] > 0.0) ga.data()[i] += g.data()[i];
    }
  });
}

Var sigmoid(Var a) {
  Tape& t = *a.tape;
  Tensor2 out = t.value(a);
  for (double& v : out.values()) {
    v = v >= 0.0 ? 1.0 / (1.0 + std::exp(-v)) : std::exp(v) / (1.0 + std::exp(v));
  }
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    const Tensor2& y = tp.value(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = y.data()[i];
      ga.data()[i] += g.data()[i] * s * (1.0 - s);
    }
  });
}

Var tanh(Var a) {
  Tape& t = *a.tape;
  Tensor2 out = t.value(a);
  for (double& v : out.values()) v = std::tanh(v);
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    const Tensor2& y = tp.value(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t i = 0; i < g.size(); ++i) {
      const double s = y.data()[i];
      ga.data()[i] += g.data()[i] * (1.0 - s * s);
    }
  });
}

Var concat_cols(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  Tape& t = *parts[0].tape;
  const std::size_t rows = t.value(parts[0]).rows();
  std::size_t cols = 0;
  std::vector<std::size_t> ids;
  std::vector<std::size_t> widths;
  for (const Var& p : parts) {
    tape_of(parts[0], p);
    const Tensor2& v = t.value(p);
    if (v.rows() != rows) {
      throw DimensionError("concat_cols: row count " + std::to_string(v.rows()) + " vs " +
                           std::to_string(rows));
    }
    ids.push_back(p.id);
    widths.push_back(v.cols());
    cols += v.cols();
  }
  Tensor2 out(rows, cols);
  std::size_t offset = 0;
  for (std::size_t k = 0; k < ids.size(); ++k) {
    const Tensor2& v = t.value(ids[k]);
    for (std::size_t r = 0; r < rows; ++r) {
      std::copy(v.row(r).begin(), v.row(r).end(), out.row(r).begin() + offset);
    }
    offset += widths[k];
  }
  std::vector<std::size_t> inputs = ids;
  return t.push(std::move(out), std::move(inputs), [ids, widths](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
      if (tp.requires_grad(ids[k])) {
        Tensor2& gk = tp.grad(ids[k]);
        for (std::size_t r = 0; r < g.rows(); ++r) {
          for (std::size_t c = 0; c < widths[k]; ++c) gk(r, c) += g(r, off + c);
        }
      }
      off += widths[k];
    }
  });
}

Var slice_cols(Var a, std::size_t begin, std::size_t count) {
  Tape& t = *a.tape;
  const Tensor2& av = t.value(a);
  if (begin + count > av.cols()) {
    throw DimensionError("slice_cols: [" + std::to_string(begin) + ", " +
                         std::to_string(begin + count) + ") out of " + av.shape_string());
  }
  Tensor2 out(av.rows(), count);
  for (std::size_t r = 0; r < av.rows(); ++r) {
    std::copy_n(av.row(r).begin() + begin, count, out.row(r).begin());
  }
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia, begin, count](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t r = 0; r < g.rows(); ++r) {
      for (std::size_t c = 0; c < count; ++c) ga(r, begin + c) += g(r, c);
    }
  });
}

Var gather_rows(Var a, std::span<const std::size_t> index) {
  Tape& t = *a.tape;
  const Tensor2& av = t.value(a);
  Tensor2 out(index.size(), av.cols());
  for (std::size_t r = 0; r < index.size(); ++r) {
    if (index[r] >= av.rows()) {
      throw DimensionError("gather_rows: index " + std::to_string(index[r]) + " out of " +
                           av.shape_string());
    }
    std::copy(av.row(index[r]).begin(), av.row(index[r]).end(), out.row(r).begin());
  }
  const std::size_t ia = a.id;
  std::vector<std::size_t> idx(index.begin(), index.end());
  return t.push(std::move(out), {ia}, [ia, idx = std::move(idx)](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto dst = ga.row(idx[r]);
      auto src = g.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  });
}

Var vstack(std::span<const Var> parts) {
  if (parts.empty()) throw DimensionError("vstack: no inputs");
  Tape& t = *parts[0].tape;
  const std::size_t cols = t.value(parts[0]).cols();
  std::size_t rows = 0;
  std::vector<std::size_t> ids;
  for (const Var& p : parts) {
    tape_of(parts[0], p);
    const Tensor2& v = t.value(p);
    if (v.cols() != cols) {
      throw DimensionError("vstack: column count " + std::to_string(v.cols()) + " vs " +
                           std::to_string(cols));
    }
    ids.push_back(p.id);
    rows += v.rows();
  }
  Tensor2 out(rows, cols);
  std::size_t offset = 0;
  for (std::size_t id : ids) {
    const Tensor2& v = t.value(id);
    std::copy(v.data(), v.data() + v.size(), out.data() + offset * cols);
    offset += v.rows();
  }
  std::vector<std::size_t> inputs = ids;
  return t.push(std::move(out), std::move(inputs), [ids](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    std::size_t off = 0;
    for (std::size_t id : ids) {
      const std::size_t n = tp.value(id).rows();
      if (tp.requires_grad(id)) {
        Tensor2& gi = tp.grad(id);
        const double* src = g.data() + off * g.cols();
        for (std::size_t i = 0; i < gi.size(); ++i) gi.data()[i] += src[i];
      }
      off += n;
    }
  });
}

Var segment_sum(Var a, std::span<const std::size_t> offsets) {
  Tape& t = *a.tape;
  const Tensor2& av = t.value(a);
  if (offsets.empty() || offsets.back() != av.rows()) {
    throw DimensionError("segment_sum: offsets do not cover " + av.shape_string());
  }
  const std::size_t segments = offsets.size() - 1;
  Tensor2 out(segments, av.cols());
  for (std::size_t s = 0; s < segments; ++s) {
    if (offsets[s] > offsets[s + 1]) throw DimensionError("segment_sum: offsets not monotone");
    auto dst = out.row(s);
    for (std::size_t r = offsets[s]; r < offsets[s + 1]; ++r) {
      auto src = av.row(r);
      for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
    }
  }
  const std::size_t ia = a.id;
  std::vector<std::size_t> off(offsets.begin(), offsets.end());
  return t.push(std::move(out), {ia}, [ia, off = std::move(off)](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t s = 0; s + 1 < off.size(); ++s) {
      auto src = g.row(s);
      for (std::size_t r = off[s]; r < off[s + 1]; ++r) {
        auto dst = ga.row(r);
        for (std::size_t c = 0; c < src.size(); ++c) dst[c] += src[c];
      }
    }
  });
}

Var block_mean(Var a, std::size_t blocks) {
  const std::size_t rows = a.value().rows();
  if (blocks == 0 || rows % blocks != 0) {
    throw DimensionError("block_mean: " + std::to_string(rows) + " rows into " +
                         std::to_string(blocks) + " blocks");
  }
  const std::size_t per = rows / blocks;
  std::vector<std::size_t> offsets(blocks + 1);
  for (std::size_t b = 0; b <= blocks; ++b) offsets[b] = b * per;
  return scale(segment_sum(a, offsets), 1.0 / static_cast<double>(per));
}

Var block_transpose(Var a, std::size_t blocks) {
  Tape& t = *a.tape;
  const Tensor2& av = t.value(a);
  if (blocks == 0 || av.rows() % blocks != 0) {
    throw DimensionError("block_transpose: " + av.shape_string() + " into " +
                         std::to_string(blocks) + " blocks");
  }
  const std::size_t r = av.rows() / blocks;
  const std::size_t c = av.cols();
  Tensor2 out(blocks * c, r);
  for (std::size_t b = 0; b < blocks; ++b) {
    for (std::size_t i = 0; i < r; ++i) {
      for (std::size_t j = 0; j < c; ++j) out(b * c + j, i) = av(b * r + i, j);
    }
  }
  const std::size_t ia = a.id;
  return t.push(std::move(out), {ia}, [ia, blocks, r, c](Tape& tp, std::size_t self) {
    const Tensor2& g = tp.grad(self);
    Tensor2& ga = tp.grad(ia);
    for (std::size_t b = 0; b < blocks; ++b) {
      for (std::size_t i = 0; i < r; ++i) {
        for (std::size_t j = 0; j < c; ++j) ga(b * r + i, j) += g(b * c + j, i);
      }
    }
  });
}

}  // namespace ctdg::nn
