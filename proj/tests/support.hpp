// SPDX-License-Identifier: Apache-2.0
//
// Shared fixtures for the unit suites and the acceptance runner.
#pragma once

#include <algorithm>
#include <random>
#include <set>
#include <vector>

#include "ctdg/calibration.hpp"
#include "ctdg/encoders/encoder.hpp"
#include "ctdg/event_store.hpp"
#include "ctdg/negative_sampler.hpp"
#include "ctdg/nn/grad_check.hpp"
#include "ctdg/selective.hpp"

namespace ctdg::testing {

/// Chronological stream with random endpoints, integer-spaced times (ties
/// allowed) and Gaussian edge features.
inline EventStream random_stream(std::size_t events, std::size_t nodes, std::size_t feat_dim,
                                 std::uint64_t seed, bool labels = false) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(nodes - 1));
  std::uniform_int_distribution<int> gap(0, 2);
  std::normal_distribution<double> gauss;
  std::bernoulli_distribution coin(0.3);
  std::vector<Event> ev;
  double t = 0.0;
  for (std::size_t i = 0; i < events; ++i) {
    t += gap(rng);
    Event e{node(rng), node(rng), t, std::vector<double>(feat_dim), {}};
    for (double& f : e.edge_feat) f = gauss(rng);
    if (labels) e.state_label = coin(rng) ? 1 : 0;
    ev.push_back(std::move(e));
  }
  return EventStream::from_events(std::move(ev), nodes);
}

inline encoders::EncoderConfig tiny_dims() {
  encoders::EncoderConfig d;
  d.time_dim = 3;
  d.memory_dim = 3;
  d.embedding_dim = 4;
  d.num_neighbors = 3;
  d.mixer_tokens = 3;
  d.mixer_channels = 3;
  d.mixer_layers = 2;
  return d;
}

struct EncoderGradResult {
  double max_rel_error = 0.0;
  std::size_t entries = 0;  // parameter entries checked
  std::size_t batch = 0;    // examples in the loss
  std::string worst_param;
  bool passed = true;
};

/// Finite-difference check of every encoder and head parameter through the
/// selective link loss (coverage 0.7, so the penalty is active). The warm-up
/// prefix is committed as one batch, so the messages folded in by the checked
/// step carry no parameter dependence from earlier steps.
inline EncoderGradResult encoder_grad_check(encoders::EncoderKind kind, std::uint64_t seed,
                                            double tolerance = 1e-4,
                                            const encoders::EncoderConfig& dims = tiny_dims(),
                                            std::size_t head_hidden = 4) {
  const EventStream stream = random_stream(40, 8, 2, seed);
  const TemporalNeighborIndex index(stream);
  auto enc = encoders::make_encoder(kind, dims, stream, index, seed + 1);
  nn::ParamSet head_params;
  std::mt19937_64 rng(seed + 2);
  selective::SelectiveHeads heads(head_params, "link", 2 * enc->output_dim(), head_hidden, rng);
  selective::LossConfig loss;
  loss.coverage_target = 0.7;

  const std::size_t warm = 24, end = 32;
  std::vector<encoders::Query> queries;
  std::vector<int> labels;
  std::mt19937_64 neg(seed + 3);
  std::uniform_int_distribution<NodeId> any(0, 7);
  for (std::size_t i = warm; i < end; ++i) {
    queries.push_back({stream.src(i), stream.t(i)});
    queries.push_back({stream.dst(i), stream.t(i)});
    labels.push_back(1);
  }
  for (std::size_t i = warm; i < end; ++i) {
    queries.push_back({stream.src(i), stream.t(i)});
    queries.push_back({any(neg), stream.t(i)});
    labels.push_back(0);
  }

  auto objective = [&](bool with_grad) {
    enc->reset_state();
    {
      nn::Tape tape;
      enc->commit(tape, 0, warm);
    }
    nn::Tape tape;
    const nn::Var z = enc->embed(tape, queries);
    std::vector<std::size_t> even, odd;
    for (std::size_t r = 0; r < queries.size(); r += 2) {
      even.push_back(r);
      odd.push_back(r + 1);
    }
    const nn::Var parts[] = {nn::gather_rows(z, even), nn::gather_rows(z, odd)};
    const auto logits = heads(tape, nn::concat_cols(parts));
    auto col = [](nn::Var v) {
      const auto s = v.value().values();
      return std::vector<double>(s.begin(), s.end());
    };
    const auto f = col(logits.f), a = col(logits.a), h = col(logits.h);
    const auto lg = selective::selective_loss_logits({f, a, h}, labels, loss, false);
    if (with_grad) {
      const std::pair<nn::Var, nn::Tensor2> seeds[] = {{logits.f, nn::Tensor2::column_vector(lg.d_f)},
                                                       {logits.a, nn::Tensor2::column_vector(lg.d_a)},
                                                       {logits.h, nn::Tensor2::column_vector(lg.d_h)}};
      tape.backward(seeds);
    }
    return lg.value.loss;
  };

  EncoderGradResult out;
  out.batch = labels.size();
  for (nn::ParamSet* ps : {&enc->params(), &head_params}) {
    const auto rep = nn::grad_check(*ps, objective, tolerance, 1e-5);
    out.entries += rep.entries_checked;
    out.passed = out.passed && rep.passed;
    if (rep.max_rel_error >= out.max_rel_error) {
      out.max_rel_error = rep.max_rel_error;
      out.worst_param = rep.worst_param;
    }
  }
  return out;
}

/// Exhaustive pairwise AUC with half credit for ties.
inline double brute_auc(const std::vector<eval::ScoredExample>& ex) {
  long long twice = 0, pos = 0, neg = 0;
  for (const auto& p : ex) {
    if (p.label != 1) continue;
    ++pos;
    for (const auto& n : ex) {
      if (n.label != 0) continue;
      twice += p.f > n.f ? 2 : p.f == n.f ? 1 : 0;
    }
  }
  for (const auto& e : ex) neg += e.label == 0;
  return (static_cast<double>(twice) / 2.0) / (static_cast<double>(pos) * static_cast<double>(neg));
}

/// AP from ranks obtained by counting (ties ordered by input position).
inline double brute_ap(const std::vector<eval::ScoredExample>& ex) {
  const std::size_t n = ex.size();
  std::vector<double> precision_at_rank(n + 1, -1.0);
  std::size_t positives = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (ex[i].label != 1) continue;
    ++positives;
    std::size_t rank = 1, pos_at_or_above = 1;
    for (std::size_t j = 0; j < n; ++j) {
      const bool above = ex[j].f > ex[i].f || (ex[j].f == ex[i].f && j < i);
      if (!above) continue;
      ++rank;
      pos_at_or_above += ex[j].label == 1;
    }
    precision_at_rank[rank] = static_cast<double>(pos_at_or_above) / static_cast<double>(rank);
  }
  double sum = 0.0;
  for (double p : precision_at_rank)
    if (p >= 0.0) sum += p;
  return sum / static_cast<double>(positives);
}

/// Two-class instance with N in [2, 200] and heavily tied scores.
inline std::vector<eval::ScoredExample> random_metric_instance(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(2, 200);
  std::uniform_int_distribution<int> levels(2, 40);
  const int n = size(rng);
  const int l = levels(rng);
  std::uniform_int_distribution<int> level(0, l);
  std::bernoulli_distribution coin(std::uniform_real_distribution<double>(0.05, 0.95)(rng));
  std::vector<eval::ScoredExample> ex(static_cast<std::size_t>(n));
  for (auto& e : ex) {
    e.f = static_cast<double>(level(rng)) / l;
    e.label = coin(rng) ? 1 : 0;
  }
  ex[0].label = 1;
  ex[1].label = 0;
  return ex;
}

struct PurityCount {
  std::size_t checked = 0;     // non-fallback negatives examined
  std::size_t violations = 0;
  std::size_t fallbacks = 0;
  std::size_t fallback_mismatch = 0;  // batches whose fallback_count disagrees with the flags
};

/// Samples hist and ind negatives for every batch of the evaluation span
/// [eval_begin, N) and re-derives each candidate set by scanning the stream.
inline PurityCount sampler_purity(const EventStream& s, std::size_t train_end, std::size_t eval_begin,
                                  std::size_t batch_size, std::uint64_t seed) {
  using Pair = std::pair<NodeId, NodeId>;
  const EdgeHistory h(s, train_end, eval_begin, s.size());
  const auto pool = destination_pool(s);
  std::set<Pair> train, eval;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (i < train_end) train.insert({s.src(i), s.dst(i)});
    if (i >= eval_begin) eval.insert({s.src(i), s.dst(i)});
  }
  PurityCount out;
  for (std::size_t b = eval_begin; b < s.size(); b += batch_size) {
    const std::size_t e = std::min(s.size(), b + batch_size);
    const auto batch = positives(s, b, e);
    std::set<Pair> in_batch;
    double t0 = batch.front().t;
    for (const auto& p : batch) {
      in_batch.insert({p.src, p.dst});
      t0 = std::min(t0, p.t);
    }
    std::set<Pair> before;
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.t(i) < t0) before.insert({s.src(i), s.dst(i)});
    for (auto strategy : {NegativeStrategy::historical, NegativeStrategy::inductive}) {
      const auto neg = sample_negatives(strategy, batch, h, pool, seed + b);
      std::size_t flagged = 0;
      for (const auto& n : neg.samples) {
        if (n.fallback) {
          ++flagged;
          continue;
        }
        ++out.checked;
        const Pair p{n.src, n.dst};
        const bool ok = strategy == NegativeStrategy::historical
                            ? before.contains(p) && !in_batch.contains(p)
                            : eval.contains(p) && !train.contains(p) && !in_batch.contains(p);
        out.violations += !ok;
      }
      out.fallbacks += flagged;
      out.fallback_mismatch += flagged != neg.fallback_count;
    }
  }
  return out;
}

}  // namespace ctdg::testing
