// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <random>

#include "ctdg/error.hpp"
#include "ctdg/selective.hpp"
#include "doctest.h"

using namespace ctdg;
using namespace ctdg::selective;

namespace {

double ref_bce(double p, int y) { return y == 1 ? -std::log(p) : -std::log(1.0 - p); }

struct Batch {
  std::vector<SelectiveOutput> out;
  std::vector<int> labels;
};

Batch random_batch(std::size_t n, std::uint64_t seed, bool select_all = false) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::bernoulli_distribution coin(0.4);
  Batch b;
  for (std::size_t i = 0; i < n; ++i) {
    b.out.push_back({u(rng), select_all ? 0.0 : u(rng), u(rng)});
    b.labels.push_back(coin(rng) ? 1 : 0);
  }
  return b;
}

}  // namespace

TEST_CASE("psi") {
  CHECK(psi(-0.2) == 0.0);
  CHECK(psi(0.5) == 0.25);
  CHECK(psi(0.0) == 0.0);
}

TEST_CASE("empirical coverage") {
  CHECK(empirical_coverage(std::vector<double>{1, 1, 0, 1}) == 0.75);
  CHECK(empirical_coverage(std::vector<double>{1, 1, 1}) == 1.0);
  CHECK(empirical_coverage(std::vector<double>{0.2, 0.8}) == 0.5);
  CHECK_THROWS_AS(empirical_coverage(std::vector<double>{}), ContractError);
}

TEST_CASE("empirical selective risk") {
  CHECK(empirical_selective_risk(std::vector<double>{1.0, 0.5, 2.0, 0.25}, std::vector<double>{1, 1, 0, 1}) ==
        doctest::Approx(1.75 / 3.0).epsilon(1e-15));
  CHECK(empirical_selective_risk(std::vector<double>{0.3, 0.6, 0.9}, std::vector<double>{1, 1, 1}) ==
        doctest::Approx(0.6).epsilon(1e-15));
  CHECK(empirical_selective_risk(std::vector<double>{0.0, 4.0}, std::vector<double>{1, 0}) == 0.0);
  CHECK_THROWS_AS(empirical_selective_risk(std::vector<double>{1.0}, std::vector<double>{0.0}), ContractError);
}

TEST_CASE("select-everything at full coverage reduces to mixed cross-entropy") {
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    const auto b = random_batch(1 + seed % 32, seed, true);
    LossConfig cfg;
    cfg.coverage_target = 1.0;
    cfg.alpha = 0.3 + 0.01 * static_cast<double>(seed);
    double lf = 0.0, lh = 0.0;
    for (std::size_t i = 0; i < b.out.size(); ++i) {
      lf += ref_bce(b.out[i].f, b.labels[i]);
      lh += ref_bce(b.out[i].h, b.labels[i]);
    }
    const double n = static_cast<double>(b.out.size());
    const double want = cfg.alpha * lf / n + (1.0 - cfg.alpha) * lh / n;
    const auto got = selective_loss(b.out, b.labels, cfg).value;
    CHECK(std::abs(got.loss - want) <= 1e-12);
    CHECK(got.penalty == 0.0);
    CHECK(got.coverage == 1.0);
  }
}

TEST_CASE("coverage penalty values") {
  LossConfig cfg;
  cfg.coverage_target = 0.7;
  cfg.lambda = 32.0;
  const std::vector<int> labels{1, 0};
  const std::vector<SelectiveOutput> half{{0.7, 0.0, 0.6}, {0.2, 1.0, 0.3}};
  const auto v = selective_loss(half, labels, cfg).value;
  CHECK(v.coverage == 0.5);
  CHECK(v.penalty == doctest::Approx(1.28).epsilon(1e-14));
  const double risk = ref_bce(0.7, 1);
  const double aux = (ref_bce(0.6, 1) + ref_bce(0.3, 0)) / 2.0;
  CHECK(v.loss == doctest::Approx(0.5 * (risk + 1.28) + 0.5 * aux).epsilon(1e-14));

  const std::vector<SelectiveOutput> high{{0.7, 0.1, 0.6}, {0.2, 0.1, 0.3}};
  CHECK(selective_loss(high, labels, cfg).value.penalty == 0.0);
}

TEST_CASE("loss grows strictly as coverage falls below target") {
  LossConfig cfg;
  cfg.coverage_target = 0.8;
  const std::vector<int> labels{1, 0, 1, 0};
  double prev = -1.0;
  for (double a = 0.25; a <= 0.95; a += 0.05) {
    // identical f on all rows keeps the risk fixed while coverage moves
    const std::vector<SelectiveOutput> out(4, SelectiveOutput{0.5, a, 0.5});
    const double loss = selective_loss(out, labels, cfg).value.loss;
    CHECK(loss > prev);
    prev = loss;
  }
}

TEST_CASE("minority weighting of the auxiliary loss") {
  const double l = 0.37;
  CHECK(imbalance_aux_loss(std::vector<double>{l, l}, std::vector<int>{1, 0}, 5.0) ==
        doctest::Approx(6.0 * l / 2.0).epsilon(1e-15));
  CHECK(imbalance_aux_loss(std::vector<double>{0.4, 0.1, 0.1}, std::vector<int>{1, 0, 0}, 2.0) ==
        doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK(imbalance_aux_loss(std::vector<double>{0.4, 0.1}, std::vector<int>{1, 0}, 1.0) ==
        doctest::Approx(0.25).epsilon(1e-15));
  CHECK(imbalance_aux_loss(std::vector<double>{0.4, 0.1}, std::vector<int>{0, 0}, 9.0) ==
        imbalance_aux_loss(std::vector<double>{0.4, 0.1}, std::vector<int>{0, 0}, 1.0));

  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(0.0, 3.0);
  std::vector<double> ls(25);
  std::vector<int> ys(25);
  for (std::size_t i = 0; i < ls.size(); ++i) {
    ls[i] = u(rng);
    ys[i] = i % 4 == 0 ? 1 : 0;
  }
  const auto terms = imbalance_aux_terms(ls, ys);
  for (double beta : {1.0, 2.0, 5.0, 11.0}) {
    CHECK(imbalance_aux_loss(ls, ys, beta) ==
          doctest::Approx((beta * terms.minority_sum + terms.majority_sum) / 25.0).epsilon(1e-15));
  }
}

TEST_CASE("node objective") {
  const auto b = random_batch(20, 8);
  LossConfig cfg;
  cfg.coverage_target = 0.7;
  cfg.beta = 1.0;
  const auto link = selective_loss(b.out, b.labels, cfg);
  const auto node = selective_loss_node(b.out, b.labels, cfg);
  CHECK(node.value.loss == link.value.loss);
  CHECK(node.d_f == link.d_f);
  CHECK(node.d_a == link.d_a);
  CHECK(node.d_h == link.d_h);

  // one minority and one majority row with equal auxiliary cross-entropy
  const std::vector<SelectiveOutput> pair{{0.5, 0.0, 0.8}, {0.5, 0.0, 0.2}};
  cfg.coverage_target = 1.0;
  cfg.beta = 5.0;
  const auto v = selective_loss_node(pair, std::vector<int>{1, 0}, cfg).value;
  CHECK(v.aux == doctest::Approx(6.0 * ref_bce(0.8, 1) / 2.0).epsilon(1e-14));
  CHECK(selective_loss(pair, std::vector<int>{1, 0}, cfg).value.aux ==
        doctest::Approx(ref_bce(0.8, 1)).epsilon(1e-14));
}

TEST_CASE("head-output gradients match central differences") {
  for (bool node : {false, true}) {
    const auto b = random_batch(16, node ? 4 : 5);
    LossConfig cfg;
    cfg.coverage_target = 0.9;
    cfg.beta = node ? 5.0 : 1.0;
    auto eval = [&](const std::vector<SelectiveOutput>& o) {
      return node ? selective_loss_node(o, b.labels, cfg) : selective_loss(o, b.labels, cfg);
    };
    const auto base = eval(b.out);
    REQUIRE(base.value.penalty > 0.0);
    const double h = 1e-6;
    double worst = 0.0;
    for (std::size_t i = 0; i < b.out.size(); ++i) {
      for (int which = 0; which < 3; ++which) {
        auto up = b.out, dn = b.out;
        double* pu = which == 0 ? &up[i].f : which == 1 ? &up[i].a : &up[i].h;
        double* pd = which == 0 ? &dn[i].f : which == 1 ? &dn[i].a : &dn[i].h;
        *pu += h;
        *pd -= h;
        const double num = (eval(up).value.loss - eval(dn).value.loss) / (2 * h);
        const double ana = which == 0 ? base.d_f[i] : which == 1 ? base.d_a[i] : base.d_h[i];
        worst = std::max(worst, std::abs(num - ana) / std::max({std::abs(num), std::abs(ana), 1e-6}));
      }
    }
    CHECK(worst < 1e-6);
  }
}

TEST_CASE("logit objective agrees with the probability objective") {
  const auto b = random_batch(12, 6);
  std::vector<double> fl, al, hl;
  auto logit = [](double p) { return std::log(p / (1.0 - p)); };
  for (const auto& o : b.out) {
    fl.push_back(logit(o.f));
    al.push_back(logit(o.a));
    hl.push_back(logit(o.h));
  }
  LossConfig cfg;
  cfg.coverage_target = 0.75;
  cfg.beta = 2.0;
  for (bool node : {false, true}) {
    const auto p = node ? selective_loss_node(b.out, b.labels, cfg) : selective_loss(b.out, b.labels, cfg);
    const auto z = selective_loss_logits({fl, al, hl}, b.labels, cfg, node);
    CHECK(z.value.loss == doctest::Approx(p.value.loss).epsilon(1e-12));
    for (std::size_t i = 0; i < b.out.size(); ++i) {
      // chain rule through the logistic
      const double sf = b.out[i].f * (1 - b.out[i].f);
      const double sa = b.out[i].a * (1 - b.out[i].a);
      const double sh = b.out[i].h * (1 - b.out[i].h);
      CHECK(z.d_f[i] == doctest::Approx(p.d_f[i] * sf).epsilon(1e-9));
      CHECK(z.d_a[i] == doctest::Approx(p.d_a[i] * sa).epsilon(1e-9));
      CHECK(z.d_h[i] == doctest::Approx(p.d_h[i] * sh).epsilon(1e-9));
    }
  }
}

TEST_CASE("cross-entropy helpers") {
  CHECK(bce(0.25, 1) == doctest::Approx(-std::log(0.25)));
  CHECK(bce(0.25, 0) == doctest::Approx(-std::log(0.75)));
  CHECK(std::isfinite(bce(0.0, 1)));
  CHECK(bce_logit(800.0, 0) == doctest::Approx(800.0));
  CHECK(bce_logit(-800.0, 0) == doctest::Approx(0.0));
  CHECK(bce_logit(0.3, 1) == doctest::Approx(-std::log(logistic(0.3))).epsilon(1e-14));
}

TEST_CASE("loss configuration ranges") {
  LossConfig ok;
  CHECK_NOTHROW(ok.validate());
  auto bad = ok;
  bad.coverage_target = 0.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.alpha = 1.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.beta = 0.5;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = ok;
  bad.lambda = -1.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("initial coverage sets the untrained abstention level") {
  nn::ParamSet ps;
  std::mt19937_64 rng(1);
  SelectiveHeads heads(ps, "t", 3, 4, rng);
  heads.set_initial_coverage(0.7);
  ps.get("t.trunk.weight").value.fill(0.0);
  nn::Tape tape;
  const auto lg = heads(tape, tape.constant(nn::Tensor2(2, 3, 1.0)));
  CHECK(logistic(lg.a.value()(0, 0)) == doctest::Approx(0.3).epsilon(1e-12));
}
