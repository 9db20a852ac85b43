// SPDX-License-Identifier: Apache-2.0
#include <cmath>
#include <set>
#include <sstream>

#include "ctdg/calibration.hpp"
#include "ctdg/error.hpp"
#include "ctdg/synth.hpp"
#include "doctest.h"

using namespace ctdg;
using namespace ctdg::synth;

namespace {

// Plain batch gradient descent on the mean logistic loss.
struct Logistic {
  std::vector<double> w;
  double b = 0.0;

  double score(std::span<const double> x) const {
    double z = b;
    for (std::size_t d = 0; d < w.size(); ++d) z += w[d] * x[d];
    return z;
  }

  void fit(const EventStream& s, const std::vector<std::size_t>& rows, const std::vector<int>& y) {
    w.assign(s.feat_dim(), 0.0);
    b = 0.0;
    const double n = static_cast<double>(rows.size());
    for (int it = 0; it < 300; ++it) {
      std::vector<double> gw(w.size(), 0.0);
      double gb = 0.0;
      for (std::size_t k = 0; k < rows.size(); ++k) {
        const auto x = s.features(rows[k]);
        const double p = 1.0 / (1.0 + std::exp(-score(x)));
        const double g = p - y[k];
        for (std::size_t d = 0; d < w.size(); ++d) gw[d] += g * x[d];
        gb += g;
      }
      for (std::size_t d = 0; d < w.size(); ++d) w[d] -= 0.5 * gw[d] / n;
      b -= 0.5 * gb / n;
    }
  }

  double auc(const EventStream& s, const std::vector<std::size_t>& rows, const std::vector<int>& y) const {
    std::vector<eval::ScoredExample> ex;
    for (std::size_t k = 0; k < rows.size(); ++k) ex.push_back({score(s.features(rows[k])), 0.0, y[k]});
    return eval::auc_roc(ex);
  }
};

}  // namespace

TEST_CASE("without noise the destination community is predictable from features") {
  SynthConfig cfg;
  cfg.num_events = 10000;
  cfg.overlap_noise_rate = 0.0;
  cfg.seed = 3;
  const auto g = generate(cfg);
  std::vector<std::size_t> train, test;
  std::vector<int> ytrain, ytest;
  for (std::size_t i = 0; i < g.stream.size(); ++i) {
    auto& rows = i < 7000 ? train : test;
    auto& y = i < 7000 ? ytrain : ytest;
    rows.push_back(i);
    y.push_back(g.annotations[i].community_dst);
  }
  Logistic model;
  model.fit(g.stream, train, ytrain);
  CHECK(model.auc(g.stream, test, ytest) > 0.99);
}

TEST_CASE("noisy events are uninformative to a model trained on clean events") {
  SynthConfig cfg;
  cfg.num_events = 10000;
  cfg.overlap_noise_rate = 0.2;
  cfg.seed = 4;
  const auto g = generate(cfg);
  std::vector<std::size_t> clean, noisy;
  std::vector<int> yclean, ynoisy;
  for (std::size_t i = 0; i < g.stream.size(); ++i) {
    const auto& a = g.annotations[i];
    (a.is_noisy ? noisy : clean).push_back(i);
    (a.is_noisy ? ynoisy : yclean).push_back(a.community_dst);
  }
  CHECK(std::abs(static_cast<double>(noisy.size()) / 10000.0 - 0.2) < 0.02);
  Logistic model;
  model.fit(g.stream, clean, yclean);
  CHECK(model.auc(g.stream, clean, yclean) > 0.99);
  const double auc = model.auc(g.stream, noisy, ynoisy);
  CHECK(auc >= 0.45);
  CHECK(auc <= 0.55);
}

TEST_CASE("minority labels follow the configured rate") {
  SynthConfig cfg;
  cfg.num_nodes = 2000;
  cfg.num_events = 50000;
  cfg.minority_rate = 0.01;
  cfg.seed = 5;
  const auto g = generate(cfg);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < g.stream.size(); ++i) ones += g.stream.label(i) == 1;
  const double sigma = std::sqrt(50000 * 0.01 * 0.99);
  CHECK(std::abs(static_cast<double>(ones) - 500.0) <= 5.0 * sigma);
  CHECK(g.p_minority_high > g.p_minority_low);
}

TEST_CASE("generation is deterministic in the seed") {
  SynthConfig cfg;
  cfg.num_events = 3000;
  cfg.num_nodes = 300;
  cfg.seed = 9;
  const auto a = generate(cfg), b = generate(cfg);
  REQUIRE(a.stream.size() == b.stream.size());
  bool same = true;
  for (std::size_t i = 0; i < a.stream.size(); ++i) same = same && a.stream.event(i) == b.stream.event(i);
  CHECK(same);
  std::ostringstream x, y;
  write_annotations(x, a.annotations);
  write_annotations(y, b.annotations);
  CHECK(x.str() == y.str());
  cfg.seed = 10;
  const auto c = generate(cfg);
  CHECK_FALSE(c.stream.event(5) == a.stream.event(5));
}

TEST_CASE("re-occurrence rate controls repeated pairs") {
  auto repeated = [](double rate) {
    SynthConfig cfg;
    cfg.num_events = 5000;
    cfg.num_nodes = 500;
    cfg.reoccurrence_rate = rate;
    cfg.seed = 1;
    const auto g = generate(cfg);
    std::set<std::pair<NodeId, NodeId>> seen;
    std::size_t rep = 0;
    for (std::size_t i = 0; i < g.stream.size(); ++i) rep += !seen.insert({g.stream.src(i), g.stream.dst(i)}).second;
    return static_cast<double>(rep) / 5000.0;
  };
  const double none = repeated(0.0), half = repeated(0.5);
  CHECK(half > none + 0.2);
}

TEST_CASE("late nodes first appear after the training span") {
  SynthConfig cfg;
  cfg.num_events = 10000;
  cfg.num_nodes = 400;
  const auto g = generate(cfg);
  std::vector<std::size_t> first(cfg.num_nodes, g.stream.size());
  for (std::size_t i = 0; i < g.stream.size(); ++i) {
    first[g.stream.src(i)] = std::min(first[g.stream.src(i)], i);
    first[g.stream.dst(i)] = std::min(first[g.stream.dst(i)], i);
  }
  std::size_t late = 0;
  for (std::size_t v = 0; v < cfg.num_nodes; ++v) late += first[v] >= 7000 && first[v] < g.stream.size();
  CHECK(late >= 30);
}

TEST_CASE("invalid configurations are rejected") {
  auto expect_error = [](auto mutate) {
    SynthConfig cfg;
    mutate(cfg);
    CHECK_THROWS_AS(generate(cfg), ConfigError);
  };
  expect_error([](SynthConfig& c) { c.num_nodes = 3; });
  expect_error([](SynthConfig& c) { c.num_events = c.num_nodes - 1; });
  expect_error([](SynthConfig& c) { c.overlap_noise_rate = 1.2; });
  expect_error([](SynthConfig& c) { c.minority_rate = 0.0; });
  expect_error([](SynthConfig& c) { c.minority_rate = 0.6; });
  expect_error([](SynthConfig& c) { c.reoccurrence_rate = -0.1; });
  expect_error([](SynthConfig& c) { c.feat_dim = 0; });
  expect_error([](SynthConfig& c) {
    c.num_nodes = 1;
    c.num_events = 1;
  });
}

TEST_CASE("generated streams survive a csv round trip") {
  SynthConfig cfg;
  cfg.num_events = 1500;
  cfg.num_nodes = 200;
  const auto g = generate(cfg);
  std::stringstream ss;
  write_csv(ss, g.stream, true);
  const auto back = read_csv(ss, CsvOptions{true, true});
  REQUIRE(back.size() == g.stream.size());
  bool same = true;
  for (std::size_t i = 0; i < back.size(); ++i) same = same && back.event(i) == g.stream.event(i);
  CHECK(same);

  std::stringstream ann;
  write_annotations(ann, g.annotations);
  const auto rows = read_annotations(ann);
  REQUIRE(rows.size() == g.annotations.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    CHECK(rows[i].event_index == i);
    CHECK(rows[i].is_noisy == g.annotations[i].is_noisy);
    CHECK(rows[i].community_src == g.annotations[i].community_src);
    CHECK(rows[i].community_dst == g.annotations[i].community_dst);
  }
  std::stringstream bad("event_index,is_noisy,latent_community_src,latent_community_dst\n1;0;1\n");
  CHECK_THROWS_AS(read_annotations(bad), ParseError);
}
