// SPDX-License-Identifier: Apache-2.0
//
// Run configuration. Files are JSON objects whose keys mirror the fields
// below; nested objects hold the loss, encoder and synth settings. Unknown
// keys are rejected.
#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctdg/encoders/encoder.hpp"
#include "ctdg/negative_sampler.hpp"
#include "ctdg/nn/optimizer.hpp"
#include "ctdg/selective.hpp"
#include "ctdg/synth.hpp"

namespace ctdg {

enum class Task { link_transductive, link_inductive, node_classification };
Task parse_task(const std::string& name);
std::string to_string(Task task);

struct RunConfig {
  /// CSV stream; when empty the synth settings generate one.
  std::filesystem::path dataset;
  bool csv_header = false;
  synth::SynthConfig synth;

  encoders::EncoderKind encoder = encoders::EncoderKind::memory;
  encoders::EncoderConfig dims;
  std::size_t head_hidden = 80;

  Task task = Task::link_transductive;
  NegativeStrategy nss = NegativeStrategy::random;
  selective::LossConfig loss;

  std::size_t batch_size = 200;
  std::size_t max_epochs = 75;
  std::size_t patience = 10;
  nn::OptimizerKind optimizer = nn::OptimizerKind::adam;
  double learning_rate = 1e-4;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4};
  std::vector<double> coverage_targets{1.0, 0.9, 0.8, 0.7, 0.6, 0.5};
  /// Train one model at loss.coverage_target and read every target off it,
  /// instead of one model per target.
  bool single_model = false;
  double train_frac = 0.7;
  double val_frac = 0.15;

  /// Pretrained link checkpoint for node classification; "{seed}" is
  /// replaced by the run seed.
  std::string pretrained;
  std::filesystem::path output_dir = "results";

  /// Throws ConfigError on inconsistent or out-of-range settings.
  void validate() const;
};

/// Applies the keys present in `json_text` on top of `cfg`.
void apply_json(RunConfig& cfg, const std::string& json_text);
RunConfig load_config(const std::filesystem::path& path);
/// Every field, including defaults.
std::string to_json(const RunConfig& cfg);

}  // namespace ctdg
