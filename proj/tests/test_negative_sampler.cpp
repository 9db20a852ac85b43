// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <random>

#include "ctdg/error.hpp"
#include "ctdg/negative_sampler.hpp"
#include "doctest.h"
#include "support.hpp"

using namespace ctdg;

namespace {

constexpr NodeId A = 0, B = 1, C = 2, D = 3;

EventStream stream_of(std::vector<std::pair<NodeId, NodeId>> pairs, std::size_t nodes = 4) {
  std::vector<Event> ev;
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    ev.push_back({pairs[i].first, pairs[i].second, static_cast<double>(i + 1), {}, {}});
  }
  return EventStream::from_events(std::move(ev), nodes);
}

EventStream random_stream(std::size_t n, std::size_t nodes, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(nodes - 1));
  std::uniform_int_distribution<int> gap(0, 2);
  std::vector<Event> ev;
  double t = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    t += gap(rng);
    NodeId s = node(rng);
    NodeId d = node(rng);
    ev.push_back({s, d, t, {}, {}});
  }
  return EventStream::from_events(std::move(ev), nodes);
}

}  // namespace

TEST_CASE("random negatives stay in the pool and are reproducible") {
  const std::vector<NodeId> pool{B, C, D};
  const std::vector<PositiveEdge> batch(50, PositiveEdge{A, B, 1.0});
  const auto x = sample_random(batch, pool, 5);
  const auto y = sample_random(batch, pool, 5);
  REQUIRE(x.samples.size() == batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) {
    CHECK(std::find(pool.begin(), pool.end(), x.samples[i].dst) != pool.end());
    CHECK(x.samples[i].src == A);
    CHECK(x.samples[i].dst != B);
    CHECK(x.samples[i].dst == y.samples[i].dst);
  }
  CHECK_THROWS_AS(sample_random(batch, std::vector<NodeId>{}, 1), SamplingError);
}

TEST_CASE("random negatives are roughly uniform") {
  std::vector<NodeId> pool(10);
  for (NodeId i = 0; i < 10; ++i) pool[i] = i + 100;
  const std::vector<PositiveEdge> batch(20000, PositiveEdge{0, 999, 1.0});
  const auto x = sample_random(batch, pool, 11);
  std::vector<int> counts(10, 0);
  for (const auto& s : x.samples) ++counts[s.dst - 100];
  // binomial(20000, 0.1): mean 2000, sd ~42.4; 5 sd band
  for (int c : counts) CHECK(std::abs(c - 2000) < 212);
}

TEST_CASE("historical candidates exclude batch positives") {
  const auto s = stream_of({{A, B}, {A, C}, {A, C}});
  const EdgeHistory h(s, 3, 2, 3);
  const std::vector<PositiveEdge> batch{{A, C, 3.0}};
  const std::vector<NodeId> pool{B, C, D};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto neg = sample_historical(batch, h, pool, seed);
    REQUIRE(neg.samples.size() == 1);
    CHECK_FALSE(neg.samples[0].fallback);
    CHECK(neg.samples[0].src == A);
    CHECK(neg.samples[0].dst == B);
  }
}

TEST_CASE("historical with no prior edges falls back entirely") {
  const auto s = stream_of({{A, B}, {C, D}});
  const EdgeHistory h(s, 1, 0, 2);
  const std::vector<PositiveEdge> batch{{A, B, 1.0}, {C, D, 1.0}};
  const auto neg = sample_historical(batch, h, std::vector<NodeId>{B, C, D}, 3);
  CHECK(neg.fallback_count == batch.size());
  for (const auto& n : neg.samples) CHECK(n.fallback);
}

TEST_CASE("inductive candidates are eval pairs unseen in training") {
  const auto s = stream_of({{A, B}, {A, B}, {A, D}});
  const EdgeHistory h(s, 1, 1, 3);
  const auto pairs = h.inductive_pairs();
  REQUIRE(pairs.size() == 1);
  CHECK(pairs[0] == std::make_pair(A, D));
  const std::vector<PositiveEdge> batch{{A, B, 3.0}};
  const auto neg = sample_inductive(batch, h, std::vector<NodeId>{B, C, D}, 1);
  CHECK_FALSE(neg.samples[0].fallback);
  CHECK(neg.samples[0].dst == D);
}

TEST_CASE("inductive with eval pairs all seen in training falls back") {
  const auto s = stream_of({{A, B}, {A, C}, {A, B}, {A, C}});
  const EdgeHistory h(s, 2, 2, 4);
  CHECK(h.inductive_pairs().empty());
  const std::vector<PositiveEdge> batch{{A, B, 3.0}, {A, C, 4.0}};
  const auto neg = sample_inductive(batch, h, std::vector<NodeId>{B, C, D}, 1);
  CHECK(neg.fallback_count == 2);
}

TEST_CASE("strategy purity against brute-force candidate sets") {
  std::size_t checked = 0;
  for (std::uint64_t trial = 0; trial < 6; ++trial) {
    const auto s = random_stream(1000, 25 + 5 * trial, trial);
    const auto r = ctdg::testing::sampler_purity(s, 700, 850, 20, trial);
    CHECK(r.violations == 0);
    CHECK(r.fallback_mismatch == 0);
    checked += r.checked;
  }
  CHECK(checked > 1000);
}

TEST_CASE("samplers are deterministic in their seed") {
  const auto s = random_stream(500, 30, 77);
  const EdgeHistory h(s, 350, 425, 500);
  const auto pool = destination_pool(s);
  const auto batch = positives(s, 425, 475);
  for (auto strategy : {NegativeStrategy::random, NegativeStrategy::historical, NegativeStrategy::inductive}) {
    const auto x = sample_negatives(strategy, batch, h, pool, 42);
    const auto y = sample_negatives(strategy, batch, h, pool, 42);
    REQUIRE(x.samples.size() == y.samples.size());
    for (std::size_t i = 0; i < x.samples.size(); ++i) {
      CHECK(x.samples[i].src == y.samples[i].src);
      CHECK(x.samples[i].dst == y.samples[i].dst);
      CHECK(x.samples[i].fallback == y.samples[i].fallback);
    }
  }
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("rnd") == NegativeStrategy::random);
  CHECK(parse_strategy("hist") == NegativeStrategy::historical);
  CHECK(parse_strategy("ind") == NegativeStrategy::inductive);
  CHECK(to_string(NegativeStrategy::historical) == "hist");
  CHECK_THROWS_AS(parse_strategy("bogus"), ConfigError);
}
