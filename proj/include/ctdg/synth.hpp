// SPDX-License-Identifier: Apache-2.0
//
// Synthetic interaction streams with planted structure.
//
// Nodes belong to one of two latent communities. Clean events link a source
// to a destination in its own community (popularity-skewed, optionally
// repeating an earlier partner). Noisy events come from a fixed set of noisy
// sources and pick a uniform destination, so they look exactly like random
// non-edges. Edge features depend only on the source (community prototype,
// Gaussian jitter, and a risk direction for minority-prone sources), which
// keeps noisy events indistinguishable from clean ones at the feature level.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <vector>

#include "ctdg/event_store.hpp"

namespace ctdg::synth {

struct SynthConfig {
  std::size_t num_nodes = 1000;
  std::size_t num_events = 10000;
  std::size_t feat_dim = 8;
  double overlap_noise_rate = 0.2;  // [0, 1]
  double minority_rate = 0.01;      // (0, 0.5]
  double reoccurrence_rate = 0.3;   // [0, 1]
  std::uint64_t seed = 0;

  double feature_noise = 0.5;
  double minority_source_fraction = 0.1;
  /// Nodes that first become active after the training span.
  double late_node_fraction = 0.15;
  double popularity_exponent = 1.0;

  /// Throws ConfigError on out-of-range fields or an infeasible combination.
  void validate() const;
};

struct EventAnnotation {
  std::size_t event_index = 0;
  bool is_noisy = false;
  int community_src = 0;
  int community_dst = 0;
};

struct SynthStream {
  EventStream stream;
  std::vector<EventAnnotation> annotations;  // one per event, in stream order
  std::vector<int> community;                // per node
  std::vector<bool> noisy_source;            // per node
  std::vector<bool> minority_source;         // per node
  double p_minority_high = 0.0;
  double p_minority_low = 0.0;
};

SynthStream generate(const SynthConfig& cfg);

/// `event_index,is_noisy,latent_community_src,latent_community_dst`
void write_annotations(std::ostream& out, const std::vector<EventAnnotation>& rows);
void write_annotations(const std::filesystem::path& path, const std::vector<EventAnnotation>& rows);
std::vector<EventAnnotation> read_annotations(std::istream& in);

}  // namespace ctdg::synth
