// SPDX-License-Identifier: Apache-2.0
#include "ctdg/negative_sampler.hpp"

#include <algorithm>
#include <limits>
#include <optional>
#include <random>

#include "ctdg/error.hpp"

namespace ctdg {

NegativeStrategy parse_strategy(const std::string& name) {
  if (name == "rnd" || name == "random") return NegativeStrategy::random;
  if (name == "hist" || name == "historical") return NegativeStrategy::historical;
  if (name == "ind" || name == "inductive") return NegativeStrategy::inductive;
  throw ConfigError("unknown negative sampling strategy '" + name + "' (expected rnd, hist or ind)");
}

std::string to_string(NegativeStrategy s) {
  switch (s) {
    case NegativeStrategy::random: return "rnd";
    case NegativeStrategy::historical: return "hist";
    case NegativeStrategy::inductive: return "ind";
  }
  return "?";
}

std::vector<PositiveEdge> positives(const EventStream& stream, std::size_t begin, std::size_t end) {
  std::vector<PositiveEdge> out;
  end = std::min(end, stream.size());
  out.reserve(end > begin ? end - begin : 0);
  for (std::size_t i = begin; i < end; ++i) out.push_back({stream.src(i), stream.dst(i), stream.t(i)});
  return out;
}

EdgeHistory::EdgeHistory(const EventStream& stream, std::size_t train_end, std::size_t eval_begin,
                         std::size_t eval_end)
    : by_source_(stream.num_nodes()), inductive_by_source_(stream.num_nodes()) {
  train_end = std::min(train_end, stream.size());
  eval_end = std::min(eval_end, stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const NodeId s = stream.src(i);
    const NodeId d = stream.dst(i);
    const std::uint64_t key = pair_key(s, d);
    if (i < train_end) train_seen_.insert(key);
    if (i >= eval_begin && i < eval_end) eval_seen_.insert(key);
    if (first_seen_.emplace(key, stream.t(i)).second) {
      // first occurrences arrive sorted
      by_source_[s].emplace_back(stream.t(i), d);
      global_.push_back({stream.t(i), s, d});
    }
  }
  // eval span in event order
  std::unordered_set<std::uint64_t> added;
  for (std::size_t i = eval_begin; i < eval_end; ++i) {
    const NodeId s = stream.src(i);
    const NodeId d = stream.dst(i);
    const std::uint64_t key = pair_key(s, d);
    if (train_seen_.contains(key) || !added.insert(key).second) continue;
    inductive_by_source_[s].push_back(d);
    inductive_.emplace_back(s, d);
  }
}

bool EdgeHistory::seen_before(NodeId src, NodeId dst, double t) const {
  auto it = first_seen_.find(pair_key(src, dst));
  return it != first_seen_.end() && it->second < t;
}

std::span<const std::pair<double, NodeId>> EdgeHistory::source_history(NodeId src) const {
  if (src >= by_source_.size()) return {};
  return by_source_[src];
}

std::size_t EdgeHistory::source_history_before(NodeId src, double t) const {
  const auto list = source_history(src);
  return static_cast<std::size_t>(
      std::lower_bound(list.begin(), list.end(), t,
                       [](const std::pair<double, NodeId>& e, double q) { return e.first < q; }) -
      list.begin());
}

std::size_t EdgeHistory::global_history_before(double t) const {
  return static_cast<std::size_t>(
      std::lower_bound(global_.begin(), global_.end(), t,
                       [](const TimedPair& e, double q) { return e.first_t < q; }) -
      global_.begin());
}

std::span<const NodeId> EdgeHistory::inductive_for_source(NodeId src) const {
  if (src >= inductive_by_source_.size()) return {};
  return inductive_by_source_[src];
}

namespace {

using Rng = std::mt19937_64;

std::size_t uniform_index(Rng& rng, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

/// Uniform draw over indices [0, n) whose pair is not excluded; nullopt when
/// every candidate is excluded.
template <typename PairAt>
std::optional<std::pair<NodeId, NodeId>> draw_excluding(Rng& rng, std::size_t n, PairAt pair_at,
                                                        const std::unordered_set<std::uint64_t>& excluded) {
  if (n == 0) return std::nullopt;
  for (int attempt = 0; attempt < 32; ++attempt) {
    const auto p = pair_at(uniform_index(rng, n));
    if (!excluded.contains(pair_key(p.first, p.second))) return p;
  }
  std::vector<std::size_t> allowed;
  for (std::size_t i = 0; i < n; ++i) {
    const auto p = pair_at(i);
    if (!excluded.contains(pair_key(p.first, p.second))) allowed.push_back(i);
  }
  if (allowed.empty()) return std::nullopt;
  return pair_at(allowed[uniform_index(rng, allowed.size())]);
}

NodeId draw_destination(Rng& rng, std::span<const NodeId> pool, NodeId avoid) {
  NodeId d = pool[uniform_index(rng, pool.size())];
  for (int attempt = 0; attempt < 32 && d == avoid && pool.size() > 1; ++attempt) {
    d = pool[uniform_index(rng, pool.size())];
  }
  return d;
}

std::unordered_set<std::uint64_t> batch_pairs(std::span<const PositiveEdge> batch) {
  std::unordered_set<std::uint64_t> out;
  for (const auto& e : batch) out.insert(pair_key(e.src, e.dst));
  return out;
}

double earliest(std::span<const PositiveEdge> batch) {
  double t = std::numeric_limits<double>::infinity();
  for (const auto& e : batch) t = std::min(t, e.t);
  return t;
}

}  // namespace

NegativeBatch sample_random(std::span<const PositiveEdge> batch, std::span<const NodeId> pool,
                            std::uint64_t seed) {
  if (pool.empty()) throw SamplingError("random negative sampling needs a nonempty destination pool");
  Rng rng(seed);
  NegativeBatch out;
  out.strategy = NegativeStrategy::random;
  out.samples.reserve(batch.size());
  for (const auto& e : batch) out.samples.push_back({e.src, draw_destination(rng, pool, e.dst), e.t, false});
  return out;
}

NegativeBatch sample_historical(std::span<const PositiveEdge> batch, const EdgeHistory& history,
                                std::span<const NodeId> pool, std::uint64_t seed) {
  Rng rng(seed);
  NegativeBatch out;
  out.strategy = NegativeStrategy::historical;
  out.samples.reserve(batch.size());
  const auto excluded = batch_pairs(batch);
  const double t0 = earliest(batch);
  const auto global = history.global_history();
  const std::size_t global_n = history.global_history_before(t0);
  for (const auto& e : batch) {
    const auto own = history.source_history(e.src);
    const std::size_t own_n = history.source_history_before(e.src, t0);
    auto pick = draw_excluding(
        rng, own_n, [&](std::size_t i) { return std::pair{e.src, own[i].second}; }, excluded);
    if (!pick) {
      pick = draw_excluding(
          rng, global_n, [&](std::size_t i) { return std::pair{global[i].src, global[i].dst}; }, excluded);
    }
    if (pick) {
      out.samples.push_back({pick->first, pick->second, e.t, false});
    } else {
      if (pool.empty()) throw SamplingError("historical fallback needs a nonempty destination pool");
      out.samples.push_back({e.src, draw_destination(rng, pool, e.dst), e.t, true});
      ++out.fallback_count;
    }
  }
  return out;
}

NegativeBatch sample_inductive(std::span<const PositiveEdge> batch, const EdgeHistory& history,
                               std::span<const NodeId> pool, std::uint64_t seed) {
  Rng rng(seed);
  NegativeBatch out;
  out.strategy = NegativeStrategy::inductive;
  out.samples.reserve(batch.size());
  const auto excluded = batch_pairs(batch);
  const auto global = history.inductive_pairs();
  for (const auto& e : batch) {
    const auto own = history.inductive_for_source(e.src);
    auto pick = draw_excluding(
        rng, own.size(), [&](std::size_t i) { return std::pair{e.src, own[i]}; }, excluded);
    if (!pick) {
      pick = draw_excluding(
          rng, global.size(), [&](std::size_t i) { return global[i]; }, excluded);
    }
    if (pick) {
      out.samples.push_back({pick->first, pick->second, e.t, false});
    } else {
      if (pool.empty()) throw SamplingError("inductive fallback needs a nonempty destination pool");
      out.samples.push_back({e.src, draw_destination(rng, pool, e.dst), e.t, true});
      ++out.fallback_count;
    }
  }
  return out;
}

NegativeBatch sample_negatives(NegativeStrategy strategy, std::span<const PositiveEdge> batch,
                               const EdgeHistory& history, std::span<const NodeId> pool,
                               std::uint64_t seed) {
  switch (strategy) {
    case NegativeStrategy::random: return sample_random(batch, pool, seed);
    case NegativeStrategy::historical: return sample_historical(batch, history, pool, seed);
    case NegativeStrategy::inductive: return sample_inductive(batch, history, pool, seed);
  }
  throw ConfigError("unknown strategy");
}

std::vector<NodeId> destination_pool(const EventStream& stream) {
  std::vector<NodeId> pool;
  pool.reserve(stream.size());
  for (std::size_t i = 0; i < stream.size(); ++i) pool.push_back(stream.dst(i));
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  return pool;
}

}  // namespace ctdg
