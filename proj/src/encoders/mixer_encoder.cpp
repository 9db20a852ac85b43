// SPDX-License-Identifier: Apache-2.0
#include "ctdg/encoders/mixer_encoder.hpp"

#include <algorithm>
#include <random>

#include "ctdg/encoders/memory_encoder.hpp"
#include "ctdg/error.hpp"

namespace ctdg::encoders {

using nn::Tensor2;
using nn::Var;

EncoderKind parse_encoder(const std::string& name) {
  if (name == "memory" || name == "tgn") return EncoderKind::memory;
  if (name == "mixer" || name == "graphmixer") return EncoderKind::mixer;
  throw ConfigError("unknown encoder '" + name + "' (expected memory or mixer)");
}

std::string to_string(EncoderKind kind) { return kind == EncoderKind::memory ? "memory" : "mixer"; }

std::unique_ptr<TemporalEncoder> make_encoder(EncoderKind kind, const EncoderConfig& cfg,
                                              const EventStream& stream,
                                              const TemporalNeighborIndex& index, std::uint64_t seed) {
  if (kind == EncoderKind::memory) return std::make_unique<MemoryEncoder>(cfg, stream, index, seed);
  return std::make_unique<MixerEncoder>(cfg, stream, index, seed);
}

MixerEncoder::MixerEncoder(const EncoderConfig& cfg, const EventStream& stream,
                           const TemporalNeighborIndex& index, std::uint64_t seed)
    : cfg_(cfg), stream_(&stream), index_(&index), time_(make_time_encoder(cfg.time_dim, stream.time_span())) {
  if (cfg.mixer_tokens == 0 || cfg.mixer_channels == 0 || cfg.embedding_dim == 0) {
    throw ConfigError("mixer encoder token count, channels and output width must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t k = cfg.mixer_tokens;
  const std::size_t c = cfg.mixer_channels;
  const std::size_t token_hidden = std::max<std::size_t>(1, k / 2);
  const std::size_t channel_hidden = 4 * c;
  token_proj_ = nn::Dense(params_, "mixer.token_proj", stream.feat_dim() + cfg.time_dim, c, rng);
  for (std::size_t l = 0; l < cfg.mixer_layers; ++l) {
    const std::string p = "mixer.layer" + std::to_string(l);
    layers_.push_back({nn::Dense(params_, p + ".token_hidden", k, token_hidden, rng),
                       nn::Dense(params_, p + ".token_out", token_hidden, k, rng),
                       nn::Dense(params_, p + ".channel_hidden", c, channel_hidden, rng),
                       nn::Dense(params_, p + ".channel_out", channel_hidden, c, rng)});
  }
  link_out_ = nn::Dense(params_, "mixer.link_out", c, cfg.embedding_dim, rng);
  node_out_ = nn::Dense(params_, "mixer.node_out", std::max<std::size_t>(1, stream.feat_dim()),
                        cfg.embedding_dim, rng);
}

Var MixerEncoder::embed(nn::Tape& tape, std::span<const Query> queries) {
  const std::size_t b = queries.size();
  const std::size_t k = cfg_.mixer_tokens;
  const std::size_t feat = stream_->feat_dim();
  const std::size_t width = feat + cfg_.time_dim;
  Tensor2 tokens(b * k, width);
  std::vector<NeighborEntry> nbrs;
  for (std::size_t qi = 0; qi < b; ++qi) {
    if (queries[qi].node >= stream_->num_nodes()) throw ContractError("mixer encoder: unknown node id");
    index_->neighbors_before(queries[qi].node, queries[qi].t, k, nbrs);
    for (std::size_t j = 0; j < nbrs.size(); ++j) {
      auto row = tokens.row(qi * k + j);
      const auto f = stream_->features(nbrs[j].event_index);
      std::copy(f.begin(), f.end(), row.begin());
      time_encode(time_, queries[qi].t - nbrs[j].t, row.subspan(feat, cfg_.time_dim));
    }
  }
  if (b == 0) return tape.constant(Tensor2(0, cfg_.embedding_dim));

  Var x = token_proj_(tape, tape.constant(std::move(tokens)));  // (b*k) x c
  for (const MixerLayer& layer : layers_) {
    Var per_channel = nn::block_transpose(x, b);  // (b*c) x k
    Var mixed = layer.token_out(tape, nn::relu(layer.token_hidden(tape, per_channel)));
    x = nn::add(x, nn::block_transpose(mixed, b));
    x = nn::add(x, layer.channel_out(tape, nn::relu(layer.channel_hidden(tape, x))));
  }
  Var link = link_out_(tape, nn::block_mean(x, b));
  // Mean of own and neighbor node features; all zero in the supported datasets.
  Var node = node_out_(tape, tape.constant(Tensor2(b, std::max<std::size_t>(1, feat))));
  return nn::add(link, node);
}

void MixerEncoder::commit(nn::Tape&, std::size_t begin, std::size_t end) {
  if (begin != committed_end_) {
    throw CausalityError("mixer encoder: commit of events starting at " + std::to_string(begin) +
                         ", expected " + std::to_string(committed_end_));
  }
  committed_end_ = std::min(end, stream_->size());
}

}  // namespace ctdg::encoders
