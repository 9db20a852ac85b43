// SPDX-License-Identifier: Apache-2.0
//
// Chronological storage of continuous-time interaction streams.
//
// An EventStream is immutable once built: events are stable-sorted by
// timestamp (ties keep file order), and edge features live in one flat
// row-major block so large streams stay compact.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

namespace ctdg {

using NodeId = std::uint32_t;

struct Event {
  NodeId src = 0;
  NodeId dst = 0;
  double t = 0.0;
  std::vector<double> edge_feat;
  std::optional<int> state_label;

  friend bool operator==(const Event&, const Event&) = default;
};

class EventStream {
 public:
  EventStream() = default;

  /// Validates and stable-sorts by t. Throws ContractError on non-finite or
  /// negative timestamps, inconsistent feature widths, or labels outside {0,1}.
  /// `num_nodes` defaults to 1 + the largest id seen; a larger value may be
  /// given for streams whose id space has unseen nodes.
  static EventStream from_events(std::vector<Event> events, std::optional<std::size_t> num_nodes = {});

  std::size_t size() const noexcept { return src_.size(); }
  bool empty() const noexcept { return src_.empty(); }
  std::size_t num_nodes() const noexcept { return num_nodes_; }
  std::size_t feat_dim() const noexcept { return feat_dim_; }
  bool has_labels() const noexcept { return has_labels_; }

  NodeId src(std::size_t i) const { return src_[i]; }
  NodeId dst(std::size_t i) const { return dst_[i]; }
  double t(std::size_t i) const { return t_[i]; }
  /// -1 when the event carries no state label.
  int label(std::size_t i) const { return label_[i]; }
  std::span<const double> features(std::size_t i) const {
    return {features_.data() + i * feat_dim_, feat_dim_};
  }
  Event event(std::size_t i) const;

  std::span<const double> timestamps() const noexcept { return t_; }
  double time_span() const noexcept { return empty() ? 0.0 : t_.back() - t_.front(); }

 private:
  std::vector<NodeId> src_;
  std::vector<NodeId> dst_;
  std::vector<double> t_;
  std::vector<int> label_;
  std::vector<double> features_;
  std::size_t num_nodes_ = 0;
  std::size_t feat_dim_ = 0;
  bool has_labels_ = false;
};

struct CsvOptions {
  bool has_header = false;
  /// Fourth column is a 0/1 state label (JODIE/DGB layout).
  bool has_state_label = true;
};

/// Reads `src,dst,t[,state_label][,f1..fd]`. Throws ParseError naming the line
/// on non-numeric fields or arity changes, EmptyStreamError on no data rows.
EventStream ingest_csv(const std::filesystem::path& path, const CsvOptions& options = {});
EventStream read_csv(std::istream& in, const CsvOptions& options = {});

/// Writes the same layout with 17 significant digits so re-ingesting is exact.
void write_csv(std::ostream& out, const EventStream& stream, bool header);
void write_csv(const std::filesystem::path& path, const EventStream& stream, bool header);

/// Event index boundaries: train = [0, train_end), val = [train_end, val_end),
/// test = [val_end, N).
struct SplitSpec {
  std::size_t train_end = 0;
  std::size_t val_end = 0;
  std::size_t total = 0;
};

SplitSpec chronological_split(const EventStream& stream, double train_frac, double val_frac);

struct NeighborEntry {
  NodeId neighbor = 0;
  std::size_t event_index = 0;
  double t = 0.0;

  friend bool operator==(const NeighborEntry&, const NeighborEntry&) = default;
};

/// Per-node interaction history in timestamp order. Every event contributes
/// one entry to each endpoint's list (two entries for a self-loop).
class TemporalNeighborIndex {
 public:
  TemporalNeighborIndex() = default;
  explicit TemporalNeighborIndex(const EventStream& stream);
  /// Index over events [0, end) only.
  TemporalNeighborIndex(const EventStream& stream, std::size_t end);

  /// Up to k most recent entries with timestamp strictly below t, most recent
  /// first. Unknown nodes yield an empty list.
  std::vector<NeighborEntry> neighbors_before(NodeId node, double t, std::size_t k) const;
  void neighbors_before(NodeId node, double t, std::size_t k, std::vector<NeighborEntry>& out) const;

  std::span<const NeighborEntry> history(NodeId node) const;
  std::size_t num_nodes() const noexcept { return lists_.size(); }

 private:
  std::vector<std::vector<NeighborEntry>> lists_;
};

}  // namespace ctdg
