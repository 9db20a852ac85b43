// SPDX-License-Identifier: Apache-2.0
//
// Training and evaluation pipeline: chronological link training with early
// stopping, frozen-encoder node classification, multi-seed sweeps.
#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

#include "ctdg/calibration.hpp"
#include "ctdg/config.hpp"
#include "ctdg/encoders/encoder.hpp"
#include "ctdg/event_store.hpp"
#include "ctdg/nn/params.hpp"
#include "ctdg/selective.hpp"

namespace ctdg::harness {

/// A stream with its split and lookup structures.
struct Dataset {
  EventStream stream;
  SplitSpec split;
  TemporalNeighborIndex index;
  std::vector<NodeId> pool;          // negative destinations
  std::vector<bool> seen_in_train;   // per node: endpoint of a training event
};

Dataset prepare(EventStream stream, double train_frac, double val_frac);
/// Reads cfg.dataset, or generates the synth stream when no dataset is set.
EventStream load_stream(const RunConfig& cfg);

/// Encoder plus selective heads over [z_src | z_dst] (link) or z_src (node).
struct Model {
  std::unique_ptr<encoders::TemporalEncoder> encoder;
  nn::ParamSet head_params;
  selective::SelectiveHeads heads;
};

std::unique_ptr<Model> make_link_model(const RunConfig& cfg, const Dataset& data, std::uint64_t seed);
/// Fresh encoder (to be loaded from a link checkpoint) and node heads over z_src.
std::unique_ptr<Model> make_node_model(const RunConfig& cfg, const Dataset& data, std::uint64_t seed);

struct TrainOutcome {
  std::size_t best_epoch = 0;  // 1-based
  std::size_t epochs_run = 0;
  double best_validation = 0.0;
  std::vector<double> validation_history;
};

/// One scored query with its provenance.
struct ScoredEvent {
  eval::ScoredExample score;
  std::size_t event_index = 0;
  bool positive = true;  // false for sampled negatives
};

struct Evaluation {
  std::vector<ScoredEvent> validation;
  std::vector<ScoredEvent> test;
  std::size_t fallback_count = 0;
};

/// Mini-batch training on the training span with random negatives, epoch-wise
/// validation AP at full coverage, early stopping, best weights restored.
TrainOutcome fit_link(Model& model, const Dataset& data, const RunConfig& cfg,
                      const selective::LossConfig& loss, std::uint64_t seed);
/// Fresh chronological replay scoring validation and test under cfg.nss. The
/// inductive task keeps only events with an endpoint unseen in training.
Evaluation evaluate_link(Model& model, const Dataset& data, const RunConfig& cfg, std::uint64_t seed);

/// Source embeddings z_src(t) for every event from a frozen encoder.
nn::Tensor2 source_embeddings(encoders::TemporalEncoder& encoder, const Dataset& data,
                              std::size_t batch_size);
/// Head training on precomputed embeddings with the minority-weighted loss;
/// early stopping on validation AUC at full coverage. Throws Error when the
/// training span has no label-1 or no label-0 example.
TrainOutcome fit_node(Model& model, const nn::Tensor2& embeddings, const Dataset& data, const RunConfig& cfg,
                      const selective::LossConfig& loss, std::uint64_t seed);
Evaluation evaluate_node(Model& model, const nn::Tensor2& embeddings, const Dataset& data,
                         std::size_t batch_size);

/// Sweep rows for one trained model; node rows carry no AP.
std::vector<eval::CoverageReport> sweep(const Evaluation& ev, std::span<const double> targets, bool with_ap);

struct SeedResult {
  std::uint64_t seed = 0;
  bool failed = false;
  std::string error;
  std::vector<eval::CoverageReport> rows;
  std::vector<std::size_t> best_epochs;  // one per trained model
};

struct AggregateRow {
  double coverage_target = 0.0;
  std::size_t n_seeds = 0;  // seeds contributing to the row
  double realized_coverage_mean = 0.0;
  double ap_mean = 0.0, ap_std = 0.0;
  double auc_mean = 0.0, auc_std = 0.0;
  std::size_t ap_count = 0, auc_count = 0;
};

struct RunResult {
  std::vector<SeedResult> seeds;
  std::vector<AggregateRow> aggregate;
};

/// Mean and population standard deviation per coverage target over the
/// successful seeds; undefined metrics are skipped cell by cell.
std::vector<AggregateRow> aggregate(const std::vector<SeedResult>& seeds, std::span<const double> targets);

/// Link run for one seed: one model per coverage target, or a single model
/// when cfg.single_model. Saves checkpoints into `checkpoint_dir` when set.
SeedResult run_link_seed(const RunConfig& cfg, const Dataset& data, std::uint64_t seed,
                         const std::filesystem::path& checkpoint_dir = {});
/// Node run for one seed from an already trained encoder.
SeedResult run_node_seed(const RunConfig& cfg, const Dataset& data, encoders::TemporalEncoder& encoder,
                         std::uint64_t seed);

/// All configured seeds; a failing seed is recorded, not rethrown.
RunResult run_multiseed(const RunConfig& cfg, const Dataset& data,
                        const std::filesystem::path& checkpoint_dir = {});

/// Checkpoint holding encoder and head parameters back to back.
void save_model(const std::filesystem::path& path, const Model& model);
void load_model(const std::filesystem::path& path, Model& model);
/// Reads only the encoder section of a checkpoint.
void load_encoder(const std::filesystem::path& path, encoders::TemporalEncoder& encoder);
std::string checkpoint_name(std::uint64_t seed, double coverage_target);
std::string expand_seed(const std::string& pattern, std::uint64_t seed);

/// Progress lines (epochs, seeds) go here when set; silent by default.
void set_progress_stream(std::ostream* out);

/// "98.56 ± 0.06" (percent, two decimals); "n/a" when count is zero.
std::string format_cell(double mean, double std, std::size_t count);

/// Per-seed CSVs (seed_<s>.csv), seeds.csv, aggregate.csv and table.txt.
void write_report(const std::filesystem::path& dir, const RunResult& result);
void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows);
void write_aggregate_table(std::ostream& out, const std::vector<AggregateRow>& rows, bool with_ap);

}  // namespace ctdg::harness
