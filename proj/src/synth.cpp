// SPDX-License-Identifier: Apache-2.0
#include "ctdg/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>
#include <string>

#include "ctdg/error.hpp"

namespace ctdg::synth {

void SynthConfig::validate() const {
  auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (num_nodes < 4) throw ConfigError("synth: num_nodes must be at least 4");
  if (num_events < num_nodes) throw ConfigError("synth: num_events must be at least num_nodes");
  if (feat_dim == 0) throw ConfigError("synth: feat_dim must be positive");
  if (!in_unit(overlap_noise_rate)) throw ConfigError("synth: overlap_noise_rate must lie in [0, 1]");
  if (!(minority_rate > 0.0 && minority_rate <= 0.5)) {
    throw ConfigError("synth: minority_rate must lie in (0, 0.5]");
  }
  if (!in_unit(reoccurrence_rate)) throw ConfigError("synth: reoccurrence_rate must lie in [0, 1]");
  if (reoccurrence_rate > 0.0 && num_events < 2) {
    throw ConfigError("synth: reoccurrence needs at least two events");
  }
  if (!(feature_noise >= 0.0)) throw ConfigError("synth: feature_noise must be non-negative");
  if (!(minority_source_fraction > 0.0 && minority_source_fraction < 1.0)) {
    throw ConfigError("synth: minority_source_fraction must lie in (0, 1)");
  }
  if (!(late_node_fraction >= 0.0 && late_node_fraction < 0.5)) {
    throw ConfigError("synth: late_node_fraction must lie in [0, 0.5)");
  }
  if (!(popularity_exponent >= 0.0)) throw ConfigError("synth: popularity_exponent must be non-negative");
}

namespace {

/// Active members of one community with cumulative popularity weights.
struct Pool {
  std::vector<NodeId> nodes;
  std::vector<double> cumulative;

  void add(NodeId node, double weight) {
    nodes.push_back(node);
    cumulative.push_back((cumulative.empty() ? 0.0 : cumulative.back()) + weight);
  }
  NodeId draw(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> u(0.0, cumulative.back());
    const auto it = std::upper_bound(cumulative.begin(), cumulative.end(), u(rng));
    const auto pos = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative.begin()), nodes.size() - 1);
    return nodes[pos];
  }
};

template <class T>
const T& pick(const std::vector<T>& v, std::mt19937_64& rng) {
  std::uniform_int_distribution<std::size_t> d(0, v.size() - 1);
  return v[d(rng)];
}

}  // namespace

SynthStream generate(const SynthConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  const std::size_t n = cfg.num_nodes;
  SynthStream out;

  std::vector<NodeId> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::shuffle(order.begin(), order.end(), rng);
  out.community.assign(n, 0);
  for (std::size_t i = 0; i < n; ++i) out.community[order[i]] = i < n / 2 ? 0 : 1;

  // Noisy sources get the same share of nodes as noisy events have of the stream.
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_noisy = static_cast<std::size_t>(std::llround(cfg.overlap_noise_rate * static_cast<double>(n)));
  out.noisy_source.assign(n, false);
  out.minority_source.assign(n, false);
  for (std::size_t i = 0; i < n_noisy; ++i) out.noisy_source[order[i]] = true;
  const std::size_t n_clean = n - n_noisy;
  const auto n_minority = std::max<std::size_t>(
      n_clean > 0 ? 1 : 0,
      static_cast<std::size_t>(std::llround(cfg.minority_source_fraction * static_cast<double>(n_clean))));
  for (std::size_t i = 0; i < n_minority && n_noisy + i < n; ++i) out.minority_source[order[n_noisy + i]] = true;

  const double m = n_clean > 0 ? static_cast<double>(n_minority) / static_cast<double>(n_clean) : 0.0;
  out.p_minority_high = std::min(8.0 * cfg.minority_rate, cfg.minority_rate / std::max(m, 1e-12));
  out.p_minority_high = std::min(out.p_minority_high, (1.0 + cfg.minority_rate) / 2.0);
  out.p_minority_low = m < 1.0 ? (cfg.minority_rate - m * out.p_minority_high) / (1.0 - m) : cfg.minority_rate;
  out.p_minority_low = std::clamp(out.p_minority_low, 0.0, 1.0);

  // Popularity rank is independent of community and noise role.
  std::shuffle(order.begin(), order.end(), rng);
  std::vector<double> popularity(n);
  for (std::size_t r = 0; r < n; ++r) {
    popularity[order[r]] = std::pow(1.0 + static_cast<double>(r % (n / 2 + 1)), -cfg.popularity_exponent);
  }

  // Late nodes become active somewhere in the last part of the stream.
  std::vector<std::size_t> birth(n, 0);
  std::shuffle(order.begin(), order.end(), rng);
  const auto n_late = static_cast<std::size_t>(std::floor(cfg.late_node_fraction * static_cast<double>(n)));
  const auto ev = static_cast<double>(cfg.num_events);
  std::uniform_int_distribution<std::size_t> late_at(static_cast<std::size_t>(0.7 * ev),
                                                     std::max<std::size_t>(static_cast<std::size_t>(0.7 * ev),
                                                                           static_cast<std::size_t>(0.9 * ev) - 1));
  for (std::size_t i = 0; i < n_late; ++i) birth[order[i]] = late_at(rng);
  std::vector<NodeId> by_birth(n);
  std::iota(by_birth.begin(), by_birth.end(), 0);
  std::stable_sort(by_birth.begin(), by_birth.end(), [&](NodeId a, NodeId b) { return birth[a] < birth[b]; });

  std::normal_distribution<double> unit_normal(0.0, 1.0);
  std::vector<std::vector<double>> prototype(2, std::vector<double>(cfg.feat_dim));
  std::vector<double> risk(cfg.feat_dim);
  for (auto& p : prototype) {
    for (double& v : p) v = unit_normal(rng) > 0.0 ? 1.0 : -1.0;
  }
  for (double& v : risk) v = unit_normal(rng);
  double risk_norm = 0.0;
  for (double v : risk) risk_norm += v * v;
  risk_norm = std::sqrt(risk_norm);
  for (double& v : risk) v *= 1.5 / std::max(risk_norm, 1e-12);

  Pool pools[2];
  Pool everyone;
  std::vector<NodeId> clean_sources;
  std::vector<NodeId> noisy_sources;
  std::vector<std::vector<NodeId>> partners(n);
  std::size_t next_birth = 0;

  std::bernoulli_distribution noisy_draw(cfg.overlap_noise_rate);
  std::bernoulli_distribution repeat_draw(cfg.reoccurrence_rate);
  std::exponential_distribution<double> gap(1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  std::vector<Event> events;
  events.reserve(cfg.num_events);
  out.annotations.reserve(cfg.num_events);
  double t = 0.0;
  for (std::size_t i = 0; i < cfg.num_events; ++i) {
    while (next_birth < n && birth[by_birth[next_birth]] <= i) {
      const NodeId v = by_birth[next_birth++];
      pools[out.community[v]].add(v, popularity[v]);
      everyone.add(v, 1.0);
      (out.noisy_source[v] ? noisy_sources : clean_sources).push_back(v);
    }
    bool noisy = noisy_draw(rng);
    if (noisy_sources.empty()) noisy = false;
    if (clean_sources.empty()) noisy = true;

    Event e;
    if (noisy) {
      e.src = pick(noisy_sources, rng);
      do {
        e.dst = everyone.draw(rng);
      } while (e.dst == e.src && everyone.nodes.size() > 1);
    } else {
      e.src = pick(clean_sources, rng);
      const bool repeat = repeat_draw(rng) && !partners[e.src].empty();
      if (repeat) {
        e.dst = pick(partners[e.src], rng);
      } else {
        const Pool& pool = pools[out.community[e.src]];
        do {
          e.dst = pool.draw(rng);
        } while (e.dst == e.src && pool.nodes.size() > 1);
        partners[e.src].push_back(e.dst);
      }
    }
    t += gap(rng);
    e.t = t;
    e.edge_feat.resize(cfg.feat_dim);
    const auto& proto = prototype[out.community[e.src]];
    for (std::size_t d = 0; d < cfg.feat_dim; ++d) {
      e.edge_feat[d] = proto[d] + cfg.feature_noise * unit_normal(rng) +
                       (out.minority_source[e.src] ? risk[d] : 0.0);
    }
    const double p_label = noisy ? cfg.minority_rate
                                 : (out.minority_source[e.src] ? out.p_minority_high : out.p_minority_low);
    e.state_label = unit(rng) < p_label ? 1 : 0;
    out.annotations.push_back({i, noisy, out.community[e.src], out.community[e.dst]});
    events.push_back(std::move(e));
  }
  out.stream = EventStream::from_events(std::move(events), n);
  return out;
}

void write_annotations(std::ostream& out, const std::vector<EventAnnotation>& rows) {
  out << "event_index,is_noisy,latent_community_src,latent_community_dst\n";
  for (const auto& r : rows) {
    out << r.event_index << ',' << (r.is_noisy ? 1 : 0) << ',' << r.community_src << ',' << r.community_dst
        << '\n';
  }
}

void write_annotations(const std::filesystem::path& path, const std::vector<EventAnnotation>& rows) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  write_annotations(out, rows);
  if (!out) throw Error("write failed: " + path.string());
}

std::vector<EventAnnotation> read_annotations(std::istream& in) {
  std::string line;
  if (!std::getline(in, line) || line.rfind("event_index,", 0) != 0) {
    throw ParseError(1, "missing annotation header");
  }
  std::vector<EventAnnotation> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ss(line);
    EventAnnotation r;
    char c1 = 0, c2 = 0, c3 = 0;
    int noisy = 0;
    if (!(ss >> r.event_index >> c1 >> noisy >> c2 >> r.community_src >> c3 >> r.community_dst) || c1 != ',' ||
        c2 != ',' || c3 != ',') {
      throw ParseError(line_no, "malformed annotation row");
    }
    r.is_noisy = noisy != 0;
    rows.push_back(r);
  }
  return rows;
}

}  // namespace ctdg::synth
