// SPDX-License-Identifier: Apache-2.0
//
// Negative edges for link prediction: random (rnd), historical (hist) and
// inductive (ind) strategies, one negative per positive.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "ctdg/event_store.hpp"

namespace ctdg {

enum class NegativeStrategy { random, historical, inductive };

/// Accepts "rnd", "hist", "ind".
NegativeStrategy parse_strategy(const std::string& name);
std::string to_string(NegativeStrategy s);

struct PositiveEdge {
  NodeId src = 0;
  NodeId dst = 0;
  double t = 0.0;
};

/// Positives for events [begin, end) of a stream.
std::vector<PositiveEdge> positives(const EventStream& stream, std::size_t begin, std::size_t end);

struct NegativeSample {
  NodeId src = 0;
  NodeId dst = 0;
  double t = 0.0;
  /// Drawn by the uniform fallback because the strategy had no candidates.
  bool fallback = false;
};

struct NegativeBatch {
  NegativeStrategy strategy = NegativeStrategy::random;
  std::vector<NegativeSample> samples;
  std::size_t fallback_count = 0;
};

inline std::uint64_t pair_key(NodeId src, NodeId dst) {
  return (static_cast<std::uint64_t>(src) << 32) | dst;
}

/// Which node pairs were observed when.
///
/// train_seen holds pairs from the training span; every pair's first
/// occurrence time over the whole stream backs the "observed before t"
/// query; eval_seen holds pairs occurring in the evaluation span (the test
/// span for test-time sampling). Inductive candidates are eval_seen minus
/// train_seen.
class EdgeHistory {
 public:
  EdgeHistory() = default;
  EdgeHistory(const EventStream& stream, std::size_t train_end, std::size_t eval_begin,
              std::size_t eval_end);

  bool seen_in_train(NodeId src, NodeId dst) const { return train_seen_.contains(pair_key(src, dst)); }
  bool seen_in_eval(NodeId src, NodeId dst) const { return eval_seen_.contains(pair_key(src, dst)); }
  /// True when the pair occurred at some timestamp strictly below t.
  bool seen_before(NodeId src, NodeId dst, double t) const;

  /// (first occurrence time, dst) for every pair leaving src, ordered by time;
  /// the prefix of length source_history_before(src, t) was observed before t.
  std::span<const std::pair<double, NodeId>> source_history(NodeId src) const;
  std::size_t source_history_before(NodeId src, double t) const;
  /// All pairs ordered by first occurrence; prefix length for "before t".
  struct TimedPair {
    double first_t;
    NodeId src;
    NodeId dst;
  };
  std::span<const TimedPair> global_history() const { return global_; }
  std::size_t global_history_before(double t) const;

  std::span<const NodeId> inductive_for_source(NodeId src) const;
  std::span<const std::pair<NodeId, NodeId>> inductive_pairs() const { return inductive_; }

 private:
  std::unordered_set<std::uint64_t> train_seen_;
  std::unordered_set<std::uint64_t> eval_seen_;
  std::vector<std::vector<std::pair<double, NodeId>>> by_source_;
  std::vector<TimedPair> global_;
  std::vector<std::vector<NodeId>> inductive_by_source_;
  std::vector<std::pair<NodeId, NodeId>> inductive_;
  std::unordered_map<std::uint64_t, double> first_seen_;
};

/// Uniform destinations from `pool`, keeping each positive's source. A draw equal
/// to the positive destination is redrawn when the pool offers an alternative.
/// Throws SamplingError on an empty pool.
NegativeBatch sample_random(std::span<const PositiveEdge> batch, std::span<const NodeId> pool,
                            std::uint64_t seed);

/// Pairs observed strictly before the batch's earliest timestamp and absent
/// from the batch positives; per-source when the source has such pairs, else
/// from the global history. Falls back to `pool` when no candidate exists.
NegativeBatch sample_historical(std::span<const PositiveEdge> batch, const EdgeHistory& history,
                                std::span<const NodeId> pool, std::uint64_t seed);

/// Pairs seen in the evaluation span but not in training, excluding batch
/// positives; per-source when available, else global; random fallback.
NegativeBatch sample_inductive(std::span<const PositiveEdge> batch, const EdgeHistory& history,
                               std::span<const NodeId> pool, std::uint64_t seed);

NegativeBatch sample_negatives(NegativeStrategy strategy, std::span<const PositiveEdge> batch,
                               const EdgeHistory& history, std::span<const NodeId> pool,
                               std::uint64_t seed);

/// Sorted distinct destination ids of a stream.
std::vector<NodeId> destination_pool(const EventStream& stream);

}  // namespace ctdg
