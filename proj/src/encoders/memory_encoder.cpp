// SPDX-License-Identifier: Apache-2.0
#include "ctdg/encoders/memory_encoder.hpp"

#include <algorithm>
#include <random>

#include "ctdg/error.hpp"

namespace ctdg::encoders {

using nn::Tensor2;
using nn::Var;

MemoryEncoder::MemoryEncoder(const EncoderConfig& cfg, const EventStream& stream,
                             const TemporalNeighborIndex& index, std::uint64_t seed)
    : cfg_(cfg),
      stream_(&stream),
      index_(&index),
      time_(make_time_encoder(cfg.time_dim, stream.time_span())) {
  if (cfg.memory_dim == 0 || cfg.embedding_dim == 0 || cfg.num_neighbors == 0) {
    throw ConfigError("memory encoder dimensions and neighbor count must be positive");
  }
  std::mt19937_64 rng(seed);
  const std::size_t feat = stream.feat_dim();
  gru_ = nn::make_gru_cell(params_, "memory.gru", message_dim(), cfg.memory_dim, rng);
  self_proj_ = nn::Dense(params_, "memory.self_proj", cfg.memory_dim, cfg.embedding_dim, rng);
  neighbor_hidden_ = nn::Dense(params_, "memory.neighbor_hidden", 2 * cfg.memory_dim + 3 * feat,
                               cfg.embedding_dim, rng);
  neighbor_out_ = nn::Dense(params_, "memory.neighbor_out", cfg.embedding_dim, cfg.embedding_dim, rng);
  reset_state();
}

std::size_t MemoryEncoder::message_dim() const {
  return 2 * cfg_.memory_dim + cfg_.time_dim + stream_->feat_dim();
}

void MemoryEncoder::reset_state() {
  memory_ = Tensor2(stream_->num_nodes(), cfg_.memory_dim);
  last_update_.assign(stream_->num_nodes(), 0.0);
  pending_.clear();
  committed_end_ = 0;
  committed_time_ = 0.0;
  batch_tape_ = 0;
  updated_nodes_.clear();
}

void MemoryEncoder::apply_pending(nn::Tape& tape) {
  batch_tape_ = tape.serial();
  updated_nodes_.clear();
  for (const auto& [node, msg] : pending_) updated_nodes_.push_back(node);
  std::sort(updated_nodes_.begin(), updated_nodes_.end());
  if (updated_nodes_.empty()) return;
  const std::size_t n = updated_nodes_.size();
  Tensor2 inputs(n, message_dim());
  Tensor2 prior(n, cfg_.memory_dim);
  for (std::size_t r = 0; r < n; ++r) {
    const auto& msg = pending_.at(updated_nodes_[r]).values;
    std::copy(msg.begin(), msg.end(), inputs.row(r).begin());
    const auto m = memory_.row(updated_nodes_[r]);
    std::copy(m.begin(), m.end(), prior.row(r).begin());
  }
  updated_rows_ = nn::gru_step(tape, gru_, tape.constant(std::move(inputs)), tape.constant(std::move(prior)));
}

Var MemoryEncoder::embed(nn::Tape& tape, std::span<const Query> queries) {
  for (const Query& q : queries) {
    if (q.t < committed_time_) {
      throw CausalityError("memory encoder: query at t=" + std::to_string(q.t) +
                           " precedes committed events up to t=" + std::to_string(committed_time_));
    }
    if (q.node >= stream_->num_nodes()) throw ContractError("memory encoder: unknown node id");
  }
  if (batch_tape_ != tape.serial()) apply_pending(tape);

  const std::size_t feat = stream_->feat_dim();
  // Gather neighborhoods and the set of nodes whose memory is read.
  std::vector<std::size_t> offsets{0};
  std::vector<NeighborEntry> all_neighbors;
  std::vector<NeighborEntry> scratch;
  std::vector<std::size_t> owner;  // query index per neighbor row
  for (std::size_t qi = 0; qi < queries.size(); ++qi) {
    index_->neighbors_before(queries[qi].node, queries[qi].t, cfg_.num_neighbors, scratch);
    for (const auto& e : scratch) {
      all_neighbors.push_back(e);
      owner.push_back(qi);
    }
    offsets.push_back(all_neighbors.size());
  }

  // Rows: updated nodes first (from the GRU), then untouched nodes (constant).
  std::unordered_map<NodeId, std::size_t> row_of;
  for (std::size_t r = 0; r < updated_nodes_.size(); ++r) row_of.emplace(updated_nodes_[r], r);
  std::vector<NodeId> constant_nodes;
  auto note = [&](NodeId v) {
    if (row_of.emplace(v, updated_nodes_.size() + constant_nodes.size()).second) constant_nodes.push_back(v);
  };
  for (const Query& q : queries) note(q.node);
  for (const auto& e : all_neighbors) note(e.neighbor);

  std::vector<Var> blocks;
  if (!updated_nodes_.empty()) blocks.push_back(updated_rows_);
  if (!constant_nodes.empty()) {
    Tensor2 rows(constant_nodes.size(), cfg_.memory_dim);
    for (std::size_t r = 0; r < constant_nodes.size(); ++r) {
      const auto m = memory_.row(constant_nodes[r]);
      std::copy(m.begin(), m.end(), rows.row(r).begin());
    }
    blocks.push_back(tape.constant(std::move(rows)));
  }
  if (blocks.empty()) blocks.push_back(tape.constant(Tensor2(0, cfg_.memory_dim)));
  Var mem = blocks.size() == 1 ? blocks[0] : nn::vstack(blocks);

  std::vector<std::size_t> query_rows(queries.size());
  for (std::size_t qi = 0; qi < queries.size(); ++qi) query_rows[qi] = row_of.at(queries[qi].node);
  Var z = self_proj_(tape, nn::gather_rows(mem, query_rows));

  if (!all_neighbors.empty()) {
    std::vector<std::size_t> self_rows(all_neighbors.size());
    std::vector<std::size_t> nbr_rows(all_neighbors.size());
    Tensor2 edge(all_neighbors.size(), 3 * feat);  // e_uv | w_u | w_v, node features are zero
    for (std::size_t r = 0; r < all_neighbors.size(); ++r) {
      self_rows[r] = query_rows[owner[r]];
      nbr_rows[r] = row_of.at(all_neighbors[r].neighbor);
      const auto f = stream_->features(all_neighbors[r].event_index);
      std::copy(f.begin(), f.end(), edge.row(r).begin());
    }
    const Var parts[] = {nn::gather_rows(mem, self_rows), nn::gather_rows(mem, nbr_rows),
                         tape.constant(std::move(edge))};
    Var hidden = nn::relu(neighbor_hidden_(tape, nn::concat_cols(parts)));
    Var transformed = neighbor_out_(tape, hidden);
    z = nn::add(z, nn::segment_sum(transformed, offsets));
  }
  return z;
}

void MemoryEncoder::commit(nn::Tape& tape, std::size_t begin, std::size_t end) {
  if (begin != committed_end_) {
    throw CausalityError("memory encoder: commit of events starting at " + std::to_string(begin) +
                         ", expected " + std::to_string(committed_end_));
  }
  end = std::min(end, stream_->size());
  if (batch_tape_ != tape.serial()) apply_pending(tape);

  if (!updated_nodes_.empty()) {
    const Tensor2& rows = updated_rows_.value();
    for (std::size_t r = 0; r < updated_nodes_.size(); ++r) {
      const NodeId v = updated_nodes_[r];
      std::copy(rows.row(r).begin(), rows.row(r).end(), memory_.row(v).begin());
      last_update_[v] = pending_.at(v).t;
    }
  }
  pending_.clear();
  batch_tape_ = 0;
  updated_nodes_.clear();

  const std::size_t mem = cfg_.memory_dim;
  const std::size_t td = cfg_.time_dim;
  auto make = [&](NodeId self, NodeId other, std::size_t i) {
    Message msg;
    msg.t = stream_->t(i);
    msg.values.resize(message_dim());
    auto out = std::span<double>(msg.values);
    std::copy(memory_.row(self).begin(), memory_.row(self).end(), out.begin());
    std::copy(memory_.row(other).begin(), memory_.row(other).end(), out.begin() + mem);
    time_encode(time_, msg.t - last_update_[self], out.subspan(2 * mem, td));
    const auto f = stream_->features(i);
    std::copy(f.begin(), f.end(), out.begin() + 2 * mem + td);
    pending_[self] = std::move(msg);
  };
  for (std::size_t i = begin; i < end; ++i) {
    make(stream_->src(i), stream_->dst(i), i);
    make(stream_->dst(i), stream_->src(i), i);
    committed_time_ = std::max(committed_time_, stream_->t(i));
  }
  committed_end_ = end;
}

}  // namespace ctdg::encoders
