// SPDX-License-Identifier: Apache-2.0
#include "ctdg/event_store.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <istream>
#include <numeric>
#include <ostream>
#include <string>
#include <string_view>

#include "ctdg/error.hpp"

namespace ctdg {

EventStream EventStream::from_events(std::vector<Event> events, std::optional<std::size_t> num_nodes) {
  EventStream s;
  if (events.empty()) {
    s.num_nodes_ = num_nodes.value_or(0);
    return s;
  }
  const std::size_t dim = events.front().edge_feat.size();
  const bool labelled = events.front().state_label.has_value();
  std::size_t max_id = 0;
  for (std::size_t i = 0; i < events.size(); ++i) {
    const Event& e = events[i];
    if (!std::isfinite(e.t) || e.t < 0.0) {
      throw ContractError("event " + std::to_string(i) + ": timestamp must be finite and non-negative");
    }
    if (e.edge_feat.size() != dim) {
      throw ContractError("event " + std::to_string(i) + ": feature width " +
                          std::to_string(e.edge_feat.size()) + ", expected " + std::to_string(dim));
    }
    if (e.state_label.has_value() != labelled) {
      throw ContractError("event " + std::to_string(i) + ": state labels must be all present or all absent");
    }
    if (e.state_label && *e.state_label != 0 && *e.state_label != 1) {
      throw ContractError("event " + std::to_string(i) + ": state label must be 0 or 1");
    }
    max_id = std::max<std::size_t>({max_id, e.src, e.dst});
  }
  if (num_nodes && *num_nodes <= max_id) {
    throw ContractError("num_nodes " + std::to_string(*num_nodes) + " does not cover node id " +
                        std::to_string(max_id));
  }

  std::vector<std::size_t> order(events.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return events[a].t < events[b].t; });

  const std::size_t n = events.size();
  s.src_.reserve(n);
  s.dst_.reserve(n);
  s.t_.reserve(n);
  s.label_.reserve(n);
  s.features_.reserve(n * dim);
  for (std::size_t i : order) {
    const Event& e = events[i];
    s.src_.push_back(e.src);
    s.dst_.push_back(e.dst);
    s.t_.push_back(e.t);
    s.label_.push_back(e.state_label.value_or(-1));
    s.features_.insert(s.features_.end(), e.edge_feat.begin(), e.edge_feat.end());
  }
  s.num_nodes_ = num_nodes.value_or(max_id + 1);
  s.feat_dim_ = dim;
  s.has_labels_ = labelled;
  return s;
}

Event EventStream::event(std::size_t i) const {
  Event e;
  e.src = src_[i];
  e.dst = dst_[i];
  e.t = t_[i];
  const auto f = features(i);
  e.edge_feat.assign(f.begin(), f.end());
  if (label_[i] >= 0) e.state_label = label_[i];
  return e;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

double parse_real(std::string_view field, std::size_t line, std::size_t column) {
  field = trim(field);
  double v = 0.0;
  const auto* end = field.data() + field.size();
  auto [ptr, ec] = std::from_chars(field.data(), end, v);
  if (field.empty() || ec != std::errc() || ptr != end) {
    throw ParseError(line, "field " + std::to_string(column + 1) + " is not numeric: '" +
                               std::string(field) + "'");
  }
  return v;
}

NodeId parse_node(std::string_view field, std::size_t line, std::size_t column) {
  const double v = parse_real(field, line, column);
  if (v < 0.0 || v != std::floor(v) || v > 4294967295.0) {
    throw ParseError(line, "field " + std::to_string(column + 1) + " is not a node id: '" +
                               std::string(trim(field)) + "'");
  }
  return static_cast<NodeId>(v);
}

void split_fields(std::string_view line, std::vector<std::string_view>& out) {
  out.clear();
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace

EventStream read_csv(std::istream& in, const CsvOptions& options) {
  std::vector<Event> events;
  std::string line;
  std::vector<std::string_view> fields;
  std::size_t line_no = 0;
  std::size_t arity = 0;
  const std::size_t fixed = options.has_state_label ? 4 : 3;
  while (std::getline(in, line)) {
    ++line_no;
    if (line_no == 1 && options.has_header) continue;
    const std::string_view view = trim(line);
    if (view.empty()) continue;
    split_fields(view, fields);
    if (arity == 0) {
      if (fields.size() < fixed) {
        throw ParseError(line_no, "expected at least " + std::to_string(fixed) + " fields, got " +
                                      std::to_string(fields.size()));
      }
      arity = fields.size();
    } else if (fields.size() != arity) {
      throw ParseError(line_no, "expected " + std::to_string(arity) + " fields, got " +
                                    std::to_string(fields.size()));
    }
    Event e;
    e.src = parse_node(fields[0], line_no, 0);
    e.dst = parse_node(fields[1], line_no, 1);
    e.t = parse_real(fields[2], line_no, 2);
    if (!std::isfinite(e.t) || e.t < 0.0) {
      throw ParseError(line_no, "timestamp must be finite and non-negative");
    }
    if (options.has_state_label) {
      const double l = parse_real(fields[3], line_no, 3);
      if (l != 0.0 && l != 1.0) throw ParseError(line_no, "state label must be 0 or 1");
      e.state_label = static_cast<int>(l);
    }
    e.edge_feat.reserve(arity - fixed);
    for (std::size_t c = fixed; c < arity; ++c) e.edge_feat.push_back(parse_real(fields[c], line_no, c));
    events.push_back(std::move(e));
  }
  if (events.empty()) throw EmptyStreamError("event file contains no data rows");
  return EventStream::from_events(std::move(events));
}

EventStream ingest_csv(const std::filesystem::path& path, const CsvOptions& options) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open event file '" + path.string() + "'");
  return read_csv(in, options);
}

void write_csv(std::ostream& out, const EventStream& stream, bool header) {
  const auto old_precision = out.precision(17);
  if (header) {
    out << "src,dst,t";
    if (stream.has_labels()) out << ",state_label";
    for (std::size_t k = 0; k < stream.feat_dim(); ++k) out << ",f" << (k + 1);
    out << '\n';
  }
  for (std::size_t i = 0; i < stream.size(); ++i) {
    out << stream.src(i) << ',' << stream.dst(i) << ',' << stream.t(i);
    if (stream.has_labels()) out << ',' << stream.label(i);
    for (double f : stream.features(i)) out << ',' << f;
    out << '\n';
  }
  out.precision(old_precision);
}

void write_csv(const std::filesystem::path& path, const EventStream& stream, bool header) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  write_csv(out, stream, header);
  if (!out) throw Error("write failed for '" + path.string() + "'");
}

SplitSpec chronological_split(const EventStream& stream, double train_frac, double val_frac) {
  if (stream.empty()) throw EmptyStreamError("cannot split an empty stream");
  if (!(train_frac > 0.0) || !(val_frac > 0.0) || !(train_frac + val_frac < 1.0)) {
    throw ContractError("split fractions must be positive and sum to less than 1");
  }
  const auto n = static_cast<double>(stream.size());
  const auto train_end = static_cast<std::size_t>(std::floor(train_frac * n + 1e-9));
  const auto val_end = static_cast<std::size_t>(std::floor((train_frac + val_frac) * n + 1e-9));
  return SplitSpec{train_end, std::min(val_end, stream.size()), stream.size()};
}

TemporalNeighborIndex::TemporalNeighborIndex(const EventStream& stream)
    : TemporalNeighborIndex(stream, stream.size()) {}

TemporalNeighborIndex::TemporalNeighborIndex(const EventStream& stream, std::size_t end)
    : lists_(stream.num_nodes()) {
  end = std::min(end, stream.size());
  for (std::size_t i = 0; i < end; ++i) {
    lists_[stream.src(i)].push_back({stream.dst(i), i, stream.t(i)});
    lists_[stream.dst(i)].push_back({stream.src(i), i, stream.t(i)});
  }
}

void TemporalNeighborIndex::neighbors_before(NodeId node, double t, std::size_t k,
                                             std::vector<NeighborEntry>& out) const {
  out.clear();
  if (k == 0) throw ContractError("neighbors_before: k must be at least 1");
  if (node >= lists_.size()) return;
  const auto& list = lists_[node];
  auto it = std::lower_bound(list.begin(), list.end(), t,
                             [](const NeighborEntry& e, double q) { return e.t < q; });
  while (it != list.begin() && out.size() < k) {
    --it;
    out.push_back(*it);
  }
}

std::vector<NeighborEntry> TemporalNeighborIndex::neighbors_before(NodeId node, double t,
                                                                   std::size_t k) const {
  std::vector<NeighborEntry> out;
  neighbors_before(node, t, k, out);
  return out;
}

std::span<const NeighborEntry> TemporalNeighborIndex::history(NodeId node) const {
  if (node >= lists_.size()) return {};
  return lists_[node];
}

}  // namespace ctdg
