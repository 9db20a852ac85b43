// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>
#include <sstream>

#include "ctdg/error.hpp"
#include "ctdg/nn/autograd.hpp"
#include "ctdg/nn/grad_check.hpp"
#include "ctdg/nn/layers.hpp"
#include "ctdg/nn/optimizer.hpp"
#include "ctdg/nn/params.hpp"
#include "doctest.h"

using namespace ctdg;
using namespace ctdg::nn;

namespace {

Tensor2 random_tensor(std::size_t r, std::size_t c, std::mt19937_64& rng, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  Tensor2 t(r, c);
  for (double& v : t.values()) v = n(rng);
  return t;
}

double scalar(Var v) { return v.value()(0, 0); }

void randomize(ParamSet& ps, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> n(0.0, scale);
  for (auto& p : ps)
    for (double& v : p->value.values()) v = n(rng);
}

}  // namespace

TEST_CASE("identity affine layer passes its input through") {
  std::mt19937_64 rng(1);
  ParamSet ps;
  Dense d(ps, "id", 3, 3, rng);
  d.weight().value.fill(0.0);
  for (std::size_t i = 0; i < 3; ++i) d.weight().value(i, i) = 1.0;
  d.bias().value.fill(0.0);
  Tape tape;
  const Tensor2 x = random_tensor(4, 3, rng);
  CHECK(d(tape, tape.constant(x)).value() == x);
}

TEST_CASE("gradient of x squared at 3 is 6") {
  ParamSet ps;
  Parameter& x = ps.add("x", 1, 1);
  x.value(0, 0) = 3.0;
  Tape tape;
  Var v = tape.param(x);
  tape.backward(sum_all(mul(v, v)), Tensor2(1, 1, 1.0));
  CHECK(x.grad(0, 0) == doctest::Approx(6.0).epsilon(1e-15));
}

TEST_CASE("three-layer net with 20 parameters matches finite differences") {
  std::mt19937_64 rng(3);
  ParamSet ps;
  Dense l1(ps, "l1", 2, 3, rng), l2(ps, "l2", 3, 2, rng), l3(ps, "l3", 2, 1, rng);
  randomize(ps, rng, 0.7);
  REQUIRE(ps.scalar_count() == 20);
  const Tensor2 x = random_tensor(5, 2, rng);
  auto obj = [&](bool with_grad) {
    Tape tape;
    Var h = tanh(l1(tape, tape.constant(x)));
    h = tanh(l2(tape, h));
    Var y = sigmoid(l3(tape, h));
    Var loss = sum_all(mul(y, y));
    if (with_grad) tape.backward(loss, Tensor2(1, 1, 1.0));
    return scalar(loss);
  };
  const auto rep = grad_check(ps, obj, 1e-6, 1e-5);
  CHECK(rep.passed);
  CHECK(rep.entries_checked == 20);
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("gru with all-zero weights maps zero state to zero") {
  std::mt19937_64 rng(4);
  ParamSet ps;
  const auto cell = make_gru_cell(ps, "gru", 3, 2, rng);
  for (auto& p : ps) p->value.fill(0.0);
  Tape tape;
  Var out = gru_step(tape, cell, tape.constant(random_tensor(4, 3, rng)), tape.constant(Tensor2(4, 2)));
  for (double v : out.value().values()) CHECK(v == 0.0);
}

TEST_CASE("gru step agrees with a scalar reference recurrence") {
  std::mt19937_64 rng(5);
  const std::size_t in = 3, hid = 2, rows = 3;
  ParamSet ps;
  const auto cell = make_gru_cell(ps, "gru", in, hid, rng);
  randomize(ps, rng, 0.8);
  const Tensor2 x = random_tensor(rows, in, rng);
  const Tensor2 h = random_tensor(rows, hid, rng);
  Tape tape;
  const Tensor2 got = gru_step(tape, cell, tape.constant(x), tape.constant(h)).value();

  const auto& W = cell.input_weight->value;
  const auto& U = cell.hidden_weight->value;
  const auto& b = cell.input_bias->value;
  const auto& c = cell.hidden_bias->value;
  auto sig = [](double v) { return 1.0 / (1.0 + std::exp(-v)); };
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t j = 0; j < hid; ++j) {
      double xr = b(0, j), xu = b(0, hid + j), xn = b(0, 2 * hid + j);
      double hr = c(0, j), hu = c(0, hid + j), hn = c(0, 2 * hid + j);
      for (std::size_t i = 0; i < in; ++i) {
        xr += x(r, i) * W(i, j);
        xu += x(r, i) * W(i, hid + j);
        xn += x(r, i) * W(i, 2 * hid + j);
      }
      for (std::size_t i = 0; i < hid; ++i) {
        hr += h(r, i) * U(i, j);
        hu += h(r, i) * U(i, hid + j);
        hn += h(r, i) * U(i, 2 * hid + j);
      }
      const double rg = sig(xr + hr);
      const double ug = sig(xu + hu);
      const double n = std::tanh(xn + rg * hn);
      const double want = (1.0 - ug) * n + ug * h(r, j);
      CHECK(got(r, j) == doctest::Approx(want).epsilon(1e-13));
    }
  }
}

TEST_CASE("gru output norm gradient matches finite differences") {
  std::mt19937_64 rng(6);
  ParamSet ps;
  const auto cell = make_gru_cell(ps, "gru", 2, 3, rng);
  randomize(ps, rng, 0.5);
  const Tensor2 x = random_tensor(4, 2, rng);
  const Tensor2 h = random_tensor(4, 3, rng, 0.5);
  auto obj = [&](bool with_grad) {
    Tape tape;
    Var out = gru_step(tape, cell, tape.constant(x), tape.constant(h));
    Var loss = sum_all(mul(out, out));
    if (with_grad) tape.backward(loss, Tensor2(1, 1, 1.0));
    return scalar(loss);
  };
  const auto rep = grad_check(ps, obj, 1e-6);
  CHECK(rep.passed);
  CHECK(rep.max_rel_error < 1e-6);
}

TEST_CASE("gru and dense layers reject mismatched shapes") {
  std::mt19937_64 rng(7);
  ParamSet ps;
  Dense d(ps, "trunk", 4, 2, rng);
  const auto cell = make_gru_cell(ps, "gru", 3, 2, rng);
  Tape tape;
  try {
    d(tape, tape.constant(Tensor2(2, 5)));
    FAIL("expected DimensionError");
  } catch (const DimensionError& e) {
    CHECK(std::string(e.what()).find("trunk") != std::string::npos);
  }
  CHECK_THROWS_AS(gru_step(tape, cell, tape.constant(Tensor2(2, 4)), tape.constant(Tensor2(2, 2))),
                  DimensionError);
  CHECK_THROWS_AS(gru_step(tape, cell, tape.constant(Tensor2(2, 3)), tape.constant(Tensor2(3, 2))),
                  DimensionError);
}

TEST_CASE("sgd step") {
  ParamSet ps;
  Parameter& p = ps.add("p", 1, 1);
  p.value(0, 0) = 1.0;
  p.grad(0, 0) = 2.0;
  Optimizer opt(OptimizerKind::sgd, 0.1);
  opt.step(ps);
  CHECK(p.value(0, 0) == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(p.grad(0, 0) == 0.0);
}

TEST_CASE("adam first step moves each entry by about lr") {
  ParamSet ps;
  Parameter& p = ps.add("p", 1, 4);
  const double grads[] = {1e-3, -0.5, 7.0, -1e3};
  for (std::size_t i = 0; i < 4; ++i) p.grad(0, i) = grads[i];
  Optimizer opt(OptimizerKind::adam, 1e-3);
  opt.step(ps);
  for (std::size_t i = 0; i < 4; ++i) {
    // m_hat = g, v_hat = g^2: step = lr * g / (|g| + eps)
    const double want = -1e-3 * grads[i] / (std::abs(grads[i]) + 1e-8);
    CHECK(p.value(0, i) == doctest::Approx(want).epsilon(1e-12));
    CHECK(std::abs(p.value(0, i)) == doctest::Approx(1e-3).epsilon(1e-4));
  }
}

TEST_CASE("zero gradient leaves parameters unchanged") {
  for (auto kind : {OptimizerKind::adam, OptimizerKind::sgd}) {
    std::mt19937_64 rng(8);
    ParamSet ps;
    Parameter& p = ps.add("p", 3, 3);
    p.value = random_tensor(3, 3, rng);
    const Tensor2 before = p.value;
    Optimizer opt(kind, 0.5);
    opt.step(ps);
    opt.step(ps);
    CHECK(p.value == before);
  }
}

TEST_CASE("non-finite gradient aborts naming the parameter") {
  ParamSet ps;
  ps.add("fine", 1, 1).grad(0, 0) = 1.0;
  Parameter& bad = ps.add("broken", 1, 2);
  bad.grad(0, 1) = std::nan("");
  const double before = ps.get("fine").value(0, 0);
  Optimizer opt(OptimizerKind::adam, 0.1);
  try {
    opt.step(ps);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(std::string(e.what()).find("broken") != std::string::npos);
  }
  CHECK(ps.get("fine").value(0, 0) == before);
}

TEST_CASE("optimizer names") {
  CHECK(parse_optimizer("adam") == OptimizerKind::adam);
  CHECK(parse_optimizer("sgd") == OptimizerKind::sgd);
  CHECK_THROWS_AS(parse_optimizer("rmsprop"), ConfigError);
  CHECK_THROWS_AS(Optimizer(OptimizerKind::sgd, 0.0), ConfigError);
}

TEST_CASE("grad check on a linear model is exact to round-off") {
  std::mt19937_64 rng(9);
  ParamSet ps;
  Dense lin(ps, "lin", 4, 1, rng);
  const Tensor2 x = random_tensor(6, 4, rng);
  auto obj = [&](bool with_grad) {
    Tape tape;
    Var loss = sum_all(lin(tape, tape.constant(x)));
    if (with_grad) tape.backward(loss, Tensor2(1, 1, 1.0));
    return scalar(loss);
  };
  const auto rep = grad_check(ps, obj, 1e-8);
  CHECK(rep.passed);
  CHECK(rep.max_rel_error < 1e-9);
}

TEST_CASE("grad check flags a corrupted gradient and names the weight") {
  std::mt19937_64 rng(10);
  ParamSet ps;
  Dense a(ps, "first", 3, 3, rng), b(ps, "second", 3, 1, rng);
  const Tensor2 x = random_tensor(4, 3, rng);
  auto obj = [&](bool with_grad) {
    Tape tape;
    Var loss = sum_all(sigmoid(b(tape, tanh(a(tape, tape.constant(x))))));
    if (with_grad) {
      tape.backward(loss, Tensor2(1, 1, 1.0));
      b.weight().grad(1, 0) *= 2.0;
    }
    return scalar(loss);
  };
  const auto rep = grad_check(ps, obj, 1e-4);
  CHECK_FALSE(rep.passed);
  REQUIRE(rep.failures.size() == 1);
  CHECK(rep.failures[0].param == b.weight().name);
  CHECK(rep.failures[0].index == 1);
  CHECK(rep.worst_param == b.weight().name);
}

TEST_CASE("gru plus mlp stack of about 200 parameters passes grad check") {
  std::mt19937_64 rng(11);
  ParamSet ps;
  const auto cell = make_gru_cell(ps, "gru", 3, 4, rng);
  Dense d1(ps, "d1", 4, 8, rng), d2(ps, "d2", 8, 5, rng), d3(ps, "d3", 5, 1, rng);
  randomize(ps, rng, 0.4);
  CHECK(ps.scalar_count() >= 190);
  CHECK(ps.scalar_count() <= 210);
  const Tensor2 x1 = random_tensor(5, 3, rng), x2 = random_tensor(5, 3, rng);
  auto obj = [&](bool with_grad) {
    Tape tape;
    Var h = gru_step(tape, cell, tape.constant(x1), tape.constant(Tensor2(5, 4)));
    h = gru_step(tape, cell, tape.constant(x2), h);
    Var y = sigmoid(d3(tape, relu(d2(tape, relu(d1(tape, h))))));
    Var loss = sum_all(y);
    if (with_grad) tape.backward(loss, Tensor2(1, 1, 1.0));
    return scalar(loss);
  };
  const auto rep = grad_check(ps, obj, 1e-4, 1e-5);
  CHECK(rep.passed);
  CHECK(rep.max_rel_error < 1e-4);
}

TEST_CASE("checkpoint text round trip is exact") {
  std::mt19937_64 rng(12);
  ParamSet a, b;
  Dense da(a, "layer", 3, 2, rng);
  Dense db(b, "layer", 3, 2, rng);
  randomize(a, rng, 1.0);
  std::stringstream ss;
  write_params(ss, a);
  read_params(ss, b);
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a[i].value == b[i].value);
  CHECK(a.checksum() == b.checksum());

  ParamSet wrong;
  Dense dw(wrong, "layer", 2, 2, rng);
  std::stringstream again;
  write_params(again, a);
  CHECK_THROWS_AS(read_params(again, wrong), DimensionError);
  std::stringstream junk("not a checkpoint");
  CHECK_THROWS_AS(read_params(junk, b), ParseError);
}

TEST_CASE("param set bookkeeping") {
  ParamSet ps;
  ps.add("w", 2, 3);
  CHECK_THROWS_AS(ps.add("w", 1, 1), ConfigError);
  CHECK_THROWS_AS(ps.get("missing"), ConfigError);
  CHECK(ps.get("w").grad.same_shape(ps.get("w").value));
  const auto snap = ps.snapshot();
  ps.get("w").value.fill(4.0);
  ps.restore(snap);
  CHECK(ps.get("w").value == Tensor2(2, 3));
}

TEST_CASE("identical seeds give identical trajectories") {
  auto run = [](std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    ParamSet ps;
    Dense l1(ps, "l1", 3, 4, rng), l2(ps, "l2", 4, 1, rng);
    const Tensor2 x = random_tensor(8, 3, rng);
    Optimizer opt(OptimizerKind::adam, 1e-2);
    for (int step = 0; step < 20; ++step) {
      Tape tape;
      Var y = sigmoid(l2(tape, relu(l1(tape, tape.constant(x)))));
      tape.backward(sum_all(y), Tensor2(1, 1, 1.0));
      opt.step(ps);
    }
    return ps.checksum();
  };
  CHECK(run(13) == run(13));
  CHECK(run(13) != run(14));
}
