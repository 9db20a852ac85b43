// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>

#include "ctdg/encoders/time_encoder.hpp"
#include "ctdg/event_store.hpp"
#include "ctdg/nn/autograd.hpp"
#include "ctdg/nn/params.hpp"

namespace ctdg::encoders {

enum class EncoderKind { memory, mixer };

EncoderKind parse_encoder(const std::string& name);
std::string to_string(EncoderKind kind);

/// Structural hyperparameters shared by both encoders.
struct EncoderConfig {
  std::size_t time_dim = 100;
  std::size_t memory_dim = 172;
  std::size_t embedding_dim = 172;
  /// Most-recent neighbors summed by the memory encoder's embedding module.
  std::size_t num_neighbors = 10;
  /// Tokens (recent interactions) per node for the mixer.
  std::size_t mixer_tokens = 20;
  std::size_t mixer_channels = 172;
  std::size_t mixer_layers = 2;
};

/// Embedding request: node state as of time t (sees interactions strictly before t).
struct Query {
  NodeId node = 0;
  double t = 0.0;
};

/// Maps (node, time) queries to temporal embeddings z_u(t).
///
/// Usage per chronological batch of events [begin, end):
///   Var z = enc.embed(tape, queries);   // queries at times >= the batch start
///   ... loss, backward, optimizer step ...
///   enc.commit(tape, begin, end);       // absorb the batch's events
class TemporalEncoder {
 public:
  virtual ~TemporalEncoder() = default;

  virtual EncoderKind kind() const = 0;
  virtual std::size_t output_dim() const = 0;
  virtual nn::ParamSet& params() = 0;
  const nn::ParamSet& params() const { return const_cast<TemporalEncoder*>(this)->params(); }

  /// Forget all per-run state before a fresh chronological replay.
  virtual void reset_state() = 0;

  /// One row per query, recorded on `tape`. Throws CausalityError if a query
  /// precedes events that were already committed.
  virtual nn::Var embed(nn::Tape& tape, std::span<const Query> queries) = 0;

  /// Absorbs events [begin, end), which must directly follow the previously
  /// committed range. `tape` must be the one last passed to embed().
  virtual void commit(nn::Tape& tape, std::size_t begin, std::size_t end) = 0;

  /// Index one past the last committed event.
  virtual std::size_t committed_end() const = 0;
};

std::unique_ptr<TemporalEncoder> make_encoder(EncoderKind kind, const EncoderConfig& cfg,
                                              const EventStream& stream,
                                              const TemporalNeighborIndex& index, std::uint64_t seed);

}  // namespace ctdg::encoders
