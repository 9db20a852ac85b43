// SPDX-License-Identifier: Apache-2.0
//
// ctdg: command-line front end for ingesting streams, generating synthetic
// ones, training link and node models, and emitting coverage reports.
#include <filesystem>
#include <fstream>
#include <iostream>
#include <regex>

#include "CLI11.hpp"
#include "ctdg/config.hpp"
#include "ctdg/error.hpp"
#include "ctdg/harness.hpp"
#include "ctdg/synth.hpp"

namespace fs = std::filesystem;
using namespace ctdg;

namespace {

struct Overrides {
  std::string config;
  std::string dataset;
  std::string encoder;
  std::string nss;
  std::string task;
  std::string optimizer;
  std::string output;
  std::string pretrained;
  std::vector<std::uint64_t> seeds;
  std::vector<double> targets;
  double coverage = -1, lambda = -1, alpha = -1, beta = -1, lr = -1;
  long epochs = -1, patience = -1, batch = -1;
  bool single_model = false;
  bool header = false;
  bool quiet = false;
};

void add_run_options(CLI::App* app, Overrides& o) {
  app->add_option("-c,--config", o.config, "JSON run configuration")->check(CLI::ExistingFile);
  app->add_option("--dataset", o.dataset, "event CSV (src,dst,t,label,features...)");
  app->add_flag("--header", o.header, "dataset CSV has a header row");
  app->add_option("--encoder", o.encoder, "memory | mixer");
  app->add_option("--task", o.task, "link_transductive | link_inductive | node_classification");
  app->add_option("--optimizer", o.optimizer, "adam | sgd");
  app->add_option("--lr", o.lr, "learning rate");
  app->add_option("--coverage", o.coverage, "coverage target c used in the loss");
  app->add_option("--lambda", o.lambda, "coverage penalty weight");
  app->add_option("--alpha", o.alpha, "selective/auxiliary mixing weight");
  app->add_option("--epochs", o.epochs, "maximum epochs");
  app->add_option("--patience", o.patience, "early stopping patience");
  app->add_option("--batch-size", o.batch, "events per batch");
  app->add_option("--seeds", o.seeds, "seed list");
  app->add_option("--targets", o.targets, "coverage targets of the sweep");
  app->add_flag("--single-model", o.single_model, "one model evaluated at every target");
  app->add_option("-o,--output", o.output, "output directory");
  app->add_flag("-q,--quiet", o.quiet, "no progress lines");
}

RunConfig resolve(const Overrides& o) {
  RunConfig cfg = o.config.empty() ? RunConfig{} : load_config(o.config);
  if (!o.dataset.empty()) cfg.dataset = o.dataset;
  if (o.header) cfg.csv_header = true;
  if (!o.encoder.empty()) cfg.encoder = encoders::parse_encoder(o.encoder);
  if (!o.nss.empty()) cfg.nss = parse_strategy(o.nss);
  if (!o.task.empty()) cfg.task = parse_task(o.task);
  if (!o.optimizer.empty()) cfg.optimizer = nn::parse_optimizer(o.optimizer);
  if (o.lr > 0) cfg.learning_rate = o.lr;
  if (o.coverage > 0) cfg.loss.coverage_target = o.coverage;
  if (o.lambda >= 0) cfg.loss.lambda = o.lambda;
  if (o.alpha >= 0) cfg.loss.alpha = o.alpha;
  if (o.beta >= 0) cfg.loss.beta = o.beta;
  if (o.epochs > 0) cfg.max_epochs = static_cast<std::size_t>(o.epochs);
  if (o.patience > 0) cfg.patience = static_cast<std::size_t>(o.patience);
  if (o.batch > 0) cfg.batch_size = static_cast<std::size_t>(o.batch);
  if (!o.seeds.empty()) cfg.seeds = o.seeds;
  if (!o.targets.empty()) cfg.coverage_targets = o.targets;
  if (o.single_model) cfg.single_model = true;
  if (!o.pretrained.empty()) cfg.pretrained = o.pretrained;
  if (!o.output.empty()) cfg.output_dir = o.output;
  cfg.validate();
  return cfg;
}

void print_summary(const harness::RunResult& result) {
  bool with_ap = false;
  for (const auto& s : result.seeds) {
    if (s.failed) std::cout << "seed " << s.seed << " FAILED: " << s.error << '\n';
    for (const auto& r : s.rows) with_ap = with_ap || r.ap_defined;
  }
  harness::write_aggregate_table(std::cout, result.aggregate, with_ap);
}

int run_training(const Overrides& o, bool node) {
  RunConfig cfg = resolve(o);
  if (node) {
    cfg.task = Task::node_classification;
  } else if (cfg.task == Task::node_classification) {
    throw ConfigError("train-link needs a link task");
  }
  if (!o.quiet) harness::set_progress_stream(&std::cerr);
  fs::create_directories(cfg.output_dir);
  {
    std::ofstream f(cfg.output_dir / "config.json");
    f << to_json(cfg) << '\n';
  }
  harness::Dataset data = harness::prepare(harness::load_stream(cfg), cfg.train_frac, cfg.val_frac);
  const fs::path ckpt = node ? fs::path{} : cfg.output_dir / "checkpoints";
  if (!ckpt.empty()) fs::create_directories(ckpt);
  const auto result = harness::run_multiseed(cfg, data, ckpt);
  harness::write_report(cfg.output_dir, result);
  print_summary(result);
  for (const auto& s : result.seeds) {
    if (s.failed) return 2;
  }
  return 0;
}

int run_ingest(const std::string& input, bool header, bool no_label, double train_frac, double val_frac,
               const std::string& output) {
  CsvOptions opts;
  opts.has_header = header;
  opts.has_state_label = !no_label;
  const EventStream s = ingest_csv(input, opts);
  const SplitSpec sp = chronological_split(s, train_frac, val_frac);
  std::size_t ones = 0;
  for (std::size_t i = 0; i < s.size(); ++i) ones += s.label(i) == 1;
  std::cout << "events      " << s.size() << '\n'
            << "nodes       " << s.num_nodes() << '\n'
            << "feat_dim    " << s.feat_dim() << '\n'
            << "time_span   " << s.time_span() << '\n'
            << "label_1     " << ones << '\n'
            << "split       " << sp.train_end << " / " << sp.val_end - sp.train_end << " / "
            << sp.total - sp.val_end << '\n';
  if (!output.empty()) write_csv(fs::path(output), s, true);
  return 0;
}

int run_evaluate(const Overrides& o, const std::string& checkpoint, std::uint64_t seed) {
  RunConfig cfg = resolve(o);
  if (cfg.task == Task::node_classification) throw ConfigError("evaluate supports link checkpoints");
  harness::Dataset data = harness::prepare(harness::load_stream(cfg), cfg.train_frac, cfg.val_frac);
  auto model = harness::make_link_model(cfg, data, seed);
  harness::load_model(checkpoint, *model);
  const auto ev = harness::evaluate_link(*model, data, cfg, seed);
  const auto rows = harness::sweep(ev, cfg.coverage_targets, true);
  eval::write_coverage_table(std::cout, rows);
  if (ev.fallback_count > 0) std::cout << "negatives drawn by fallback: " << ev.fallback_count << '\n';
  if (!o.output.empty()) {
    fs::create_directories(o.output);
    std::ofstream f(fs::path(o.output) / "evaluation.csv");
    eval::write_coverage_csv(f, rows);
  }
  return 0;
}

int run_report(const std::string& dir) {
  harness::RunResult result;
  std::vector<double> targets;
  const std::regex name(R"(seed_(\d+)\.csv)");
  std::vector<fs::path> files;
  for (const auto& entry : fs::directory_iterator(dir)) {
    if (std::regex_match(entry.path().filename().string(), name)) files.push_back(entry.path());
  }
  std::sort(files.begin(), files.end());
  for (const auto& p : files) {
    std::smatch m;
    const std::string fname = p.filename().string();
    std::regex_match(fname, m, name);
    std::ifstream in(p);
    harness::SeedResult s;
    s.seed = std::stoull(m[1]);
    s.rows = eval::read_coverage_csv(in);
    for (const auto& r : s.rows) {
      if (std::find(targets.begin(), targets.end(), r.coverage_target) == targets.end()) {
        targets.push_back(r.coverage_target);
      }
    }
    result.seeds.push_back(std::move(s));
  }
  if (result.seeds.empty()) throw Error("no seed_<n>.csv files in " + dir);
  result.aggregate = harness::aggregate(result.seeds, targets);
  print_summary(result);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Selective prediction on continuous-time dynamic graphs"};
  app.require_subcommand(1);

  std::string input, output;
  bool header = false, no_label = false;
  double train_frac = 0.7, val_frac = 0.15;
  auto* ingest = app.add_subcommand("ingest", "validate an event CSV and print its summary");
  ingest->add_option("input", input, "event CSV")->required()->check(CLI::ExistingFile);
  ingest->add_flag("--header", header, "first row is a header");
  ingest->add_flag("--no-label", no_label, "no state label column");
  ingest->add_option("--train-frac", train_frac);
  ingest->add_option("--val-frac", val_frac);
  ingest->add_option("-o,--output", output, "write the validated stream here");

  synth::SynthConfig sc;
  std::string synth_out, annotations, synth_config;
  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic stream");
  synth_cmd->add_option("-c,--config", synth_config, "JSON run configuration (its synth block)");
  synth_cmd->add_option("--num-nodes", sc.num_nodes);
  synth_cmd->add_option("--num-events", sc.num_events);
  synth_cmd->add_option("--feat-dim", sc.feat_dim);
  synth_cmd->add_option("--noise", sc.overlap_noise_rate, "overlap_noise_rate");
  synth_cmd->add_option("--minority", sc.minority_rate, "minority_rate");
  synth_cmd->add_option("--reoccurrence", sc.reoccurrence_rate, "reoccurrence_rate");
  synth_cmd->add_option("--seed", sc.seed);
  synth_cmd->add_option("-o,--output", synth_out, "stream CSV")->required();
  synth_cmd->add_option("--annotations", annotations, "annotation sidecar CSV");

  Overrides link_o;
  auto* link = app.add_subcommand("train-link", "train link models and write a coverage report");
  add_run_options(link, link_o);
  link->add_option("--nss", link_o.nss, "rnd | hist | ind (evaluation negatives)");

  Overrides node_o;
  auto* node = app.add_subcommand("train-node", "train node heads on a frozen pretrained encoder");
  add_run_options(node, node_o);
  node->add_option("--pretrained", node_o.pretrained, "link checkpoint; {seed} expands to the seed");
  node->add_option("--beta", node_o.beta, "minority weight of the auxiliary loss");

  Overrides eval_o;
  std::string checkpoint;
  std::uint64_t eval_seed = 0;
  auto* evaluate = app.add_subcommand("evaluate", "coverage sweep of a saved link checkpoint");
  add_run_options(evaluate, eval_o);
  evaluate->add_option("--nss", eval_o.nss, "rnd | hist | ind");
  evaluate->add_option("--checkpoint", checkpoint)->required()->check(CLI::ExistingFile);
  evaluate->add_option("--seed", eval_seed, "seed used for negatives");

  std::string report_dir;
  auto* report = app.add_subcommand("report", "aggregate the per-seed CSVs of a run directory");
  report->add_option("dir", report_dir)->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*ingest) return run_ingest(input, header, no_label, train_frac, val_frac, output);
    if (*synth_cmd) {
      if (!synth_config.empty()) sc = load_config(synth_config).synth;
      const auto s = synth::generate(sc);
      write_csv(fs::path(synth_out), s.stream, false);
      if (!annotations.empty()) synth::write_annotations(fs::path(annotations), s.annotations);
      std::cout << "wrote " << s.stream.size() << " events over " << s.stream.num_nodes() << " nodes\n";
      return 0;
    }
    if (*link) return run_training(link_o, false);
    if (*node) return run_training(node_o, true);
    if (*evaluate) return run_evaluate(eval_o, checkpoint, eval_seed);
    if (*report) return run_report(report_dir);
  } catch (const ctdg::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
