// SPDX-License-Identifier: Apache-2.0
//
// Memory-based temporal encoder.
//
// Each node keeps a recurrent state m_u and the time of its last update.
// Events of a committed batch become messages
//   msg_u = [m_u | m_v | cos(w (t - last_update_u)) | e_uv]
// for both endpoints; only the most recent message per node is kept, and it
// is folded into m_u by a GRU at the start of the next batch, so the GRU
// receives gradients from that batch's loss while a batch never sees its
// own events. Embeddings sum a shared two-layer transform over the k most
// recent neighbors before t, plus a linear projection of the node's own
// memory:
//   z_u(t) = P m_u + sum_v h([m_u | m_v | e_uv | w_u | w_v])
// Node features w are zero vectors of the edge-feature width.
#pragma once

#include <unordered_map>
#include <vector>

#include "ctdg/encoders/encoder.hpp"
#include "ctdg/nn/layers.hpp"

namespace ctdg::encoders {

class MemoryEncoder final : public TemporalEncoder {
 public:
  MemoryEncoder(const EncoderConfig& cfg, const EventStream& stream,
                const TemporalNeighborIndex& index, std::uint64_t seed);

  EncoderKind kind() const override { return EncoderKind::memory; }
  std::size_t output_dim() const override { return cfg_.embedding_dim; }
  nn::ParamSet& params() override { return params_; }
  void reset_state() override;
  nn::Var embed(nn::Tape& tape, std::span<const Query> queries) override;
  void commit(nn::Tape& tape, std::size_t begin, std::size_t end) override;
  std::size_t committed_end() const override { return committed_end_; }

  const nn::Tensor2& memory() const { return memory_; }
  double last_update(NodeId node) const { return last_update_[node]; }
  std::size_t message_dim() const;
  const TimeEncoderConfig& time_encoder() const { return time_; }

 private:
  struct Message {
    std::vector<double> values;
    double t = 0.0;
  };

  // Applies pending messages on `tape`; returns row lookup for updated nodes.
  void apply_pending(nn::Tape& tape);

  EncoderConfig cfg_;
  const EventStream* stream_;
  const TemporalNeighborIndex* index_;
  TimeEncoderConfig time_;
  nn::ParamSet params_;
  nn::GruCellParams gru_;
  nn::Dense self_proj_;
  nn::Dense neighbor_hidden_;
  nn::Dense neighbor_out_;

  nn::Tensor2 memory_;
  std::vector<double> last_update_;
  std::size_t committed_end_ = 0;
  double committed_time_ = 0.0;
  std::unordered_map<NodeId, Message> pending_;

  // Per-batch state between embed() and commit().
  std::uint64_t batch_tape_ = 0;  // serial of the tape holding updated_rows_
  std::vector<NodeId> updated_nodes_;
  nn::Var updated_rows_;
};

}  // namespace ctdg::encoders
