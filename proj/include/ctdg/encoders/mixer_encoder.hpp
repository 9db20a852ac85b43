// SPDX-License-Identifier: Apache-2.0
//
// MLP-mixer temporal encoder (stateless).
//
// Link encoder: the K most recent interactions of a node before t become
// tokens [e_uv | cos(w (t - t_uv))], zero-padded to K rows, projected to C
// channels and passed through mixer layers (token mixing across the K rows,
// then channel mixing, each a residual two-layer ReLU MLP), then mean-pooled
// over tokens and projected to the output width.
// Node encoder: mean of the node's own and its neighbors' node features,
// projected to the output width and added to the link encoding. Node
// features are zero, so this path contributes its bias.
#pragma once

#include <vector>

#include "ctdg/encoders/encoder.hpp"
#include "ctdg/nn/layers.hpp"

namespace ctdg::encoders {

class MixerEncoder final : public TemporalEncoder {
 public:
  MixerEncoder(const EncoderConfig& cfg, const EventStream& stream,
               const TemporalNeighborIndex& index, std::uint64_t seed);

  EncoderKind kind() const override { return EncoderKind::mixer; }
  std::size_t output_dim() const override { return cfg_.embedding_dim; }
  nn::ParamSet& params() override { return params_; }
  void reset_state() override { committed_end_ = 0; }
  nn::Var embed(nn::Tape& tape, std::span<const Query> queries) override;
  void commit(nn::Tape& tape, std::size_t begin, std::size_t end) override;
  std::size_t committed_end() const override { return committed_end_; }

  const TimeEncoderConfig& time_encoder() const { return time_; }

 private:
  struct MixerLayer {
    nn::Dense token_hidden;
    nn::Dense token_out;
    nn::Dense channel_hidden;
    nn::Dense channel_out;
  };

  EncoderConfig cfg_;
  const EventStream* stream_;
  const TemporalNeighborIndex* index_;
  TimeEncoderConfig time_;
  nn::ParamSet params_;
  nn::Dense token_proj_;
  std::vector<MixerLayer> layers_;
  nn::Dense link_out_;
  nn::Dense node_out_;
  std::size_t committed_end_ = 0;
};

}  // namespace ctdg::encoders
