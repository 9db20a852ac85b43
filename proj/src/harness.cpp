// SPDX-License-Identifier: Apache-2.0
#include "ctdg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <random>
#include <sstream>

#include "ctdg/error.hpp"
#include "ctdg/negative_sampler.hpp"
#include "ctdg/nn/optimizer.hpp"
#include "ctdg/synth.hpp"

namespace ctdg::harness {

using encoders::Query;
using nn::Tape;
using nn::Tensor2;
using nn::Var;

namespace {

std::ostream* g_progress = nullptr;

std::uint64_t mix(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) { return mix(mix(a) ^ (b * 0x2545f4914f6cdd1dULL)); }
std::uint64_t mix(std::uint64_t a, std::uint64_t b, std::uint64_t c) { return mix(mix(a, b), c); }

enum Stream : std::uint64_t { kEncoderInit = 1, kHeadInit, kTrainNeg, kValNeg, kEvalNeg, kShuffle };

/// Selective logits for positives followed by their negatives.
struct PairScores {
  selective::SelectiveHeads::Logits logits;
  std::size_t rows = 0;
};

PairScores score_pairs(Model& model, Tape& tape, std::span<const PositiveEdge> pos,
                       std::span<const NegativeSample> neg) {
  std::vector<Query> queries;
  std::map<std::pair<NodeId, double>, std::size_t> row_of;
  auto row = [&](NodeId v, double t) {
    const auto [it, fresh] = row_of.emplace(std::make_pair(v, t), queries.size());
    if (fresh) queries.push_back({v, t});
    return it->second;
  };
  std::vector<std::size_t> left, right;
  for (const auto& p : pos) {
    left.push_back(row(p.src, p.t));
    right.push_back(row(p.dst, p.t));
  }
  for (const auto& n : neg) {
    left.push_back(row(n.src, n.t));
    right.push_back(row(n.dst, n.t));
  }
  Var z = model.encoder->embed(tape, queries);
  const Var parts[] = {nn::gather_rows(z, left), nn::gather_rows(z, right)};
  return {model.heads(tape, nn::concat_cols(parts)), left.size()};
}

std::vector<double> column(Var v) {
  const auto vals = v.value().values();
  return {vals.begin(), vals.end()};
}

double ap_of(const std::vector<eval::ScoredExample>& xs) {
  try {
    return eval::average_precision(xs);
  } catch (const MetricUndefinedError&) {
    return 0.0;
  }
}

double auc_of(const std::vector<eval::ScoredExample>& xs) {
  try {
    return eval::auc_roc(xs);
  } catch (const MetricUndefinedError&) {
    return 0.5;
  }
}

void progress(const std::string& line) {
  if (g_progress) *g_progress << line << std::endl;
}

/// Runs `body(begin, end)` over consecutive chunks of [begin, end).
template <class F>
void for_batches(std::size_t begin, std::size_t end, std::size_t batch, F&& body) {
  for (std::size_t b = begin; b < end; b += batch) body(b, std::min(end, b + batch));
}

/// Scores events [begin, end) under `strategy`, then commits them.
void score_span(Model& model, const Dataset& data, std::size_t begin, std::size_t end, std::size_t batch,
                NegativeStrategy strategy, const EdgeHistory& history, std::uint64_t seed,
                std::vector<ScoredEvent>& out, std::size_t& fallbacks) {
  std::size_t k = 0;
  for_batches(begin, end, batch, [&](std::size_t b, std::size_t e) {
    const auto pos = positives(data.stream, b, e);
    const auto neg = sample_negatives(strategy, pos, history, data.pool, mix(seed, k++));
    fallbacks += neg.fallback_count;
    Tape tape;
    const PairScores s = score_pairs(model, tape, pos, neg.samples);
    const auto f = s.logits.f.value().values();
    const auto a = s.logits.a.value().values();
    for (std::size_t i = 0; i < s.rows; ++i) {
      const bool is_pos = i < pos.size();
      out.push_back({{selective::logistic(f[i]), selective::logistic(a[i]), is_pos ? 1 : 0},
                     b + (is_pos ? i : i - pos.size()), is_pos});
    }
    model.encoder->commit(tape, b, e);
  });
}

void replay(encoders::TemporalEncoder& encoder, std::size_t begin, std::size_t end, std::size_t batch) {
  for_batches(begin, end, batch, [&](std::size_t b, std::size_t e) {
    Tape tape;
    encoder.commit(tape, b, e);
  });
}

std::vector<eval::ScoredExample> scores_only(const std::vector<ScoredEvent>& xs) {
  std::vector<eval::ScoredExample> out;
  out.reserve(xs.size());
  for (const auto& x : xs) out.push_back(x.score);
  return out;
}

void backward_heads(Tape& tape, const selective::SelectiveHeads::Logits& logits,
                    const selective::LossAndGrad& lg) {
  const std::pair<Var, Tensor2> seeds[] = {{logits.f, Tensor2::column_vector(lg.d_f)},
                                           {logits.a, Tensor2::column_vector(lg.d_a)},
                                           {logits.h, Tensor2::column_vector(lg.d_h)}};
  tape.backward(seeds);
}

}  // namespace

void set_progress_stream(std::ostream* out) { g_progress = out; }

Dataset prepare(EventStream stream, double train_frac, double val_frac) {
  Dataset d;
  d.split = chronological_split(stream, train_frac, val_frac);
  if (d.split.train_end == 0 || d.split.val_end == d.split.train_end || d.split.total == d.split.val_end) {
    throw ConfigError("stream of " + std::to_string(stream.size()) + " events leaves an empty split");
  }
  d.stream = std::move(stream);
  d.index = TemporalNeighborIndex(d.stream);
  d.pool = destination_pool(d.stream);
  d.seen_in_train.assign(d.stream.num_nodes(), false);
  for (std::size_t i = 0; i < d.split.train_end; ++i) {
    d.seen_in_train[d.stream.src(i)] = true;
    d.seen_in_train[d.stream.dst(i)] = true;
  }
  return d;
}

EventStream load_stream(const RunConfig& cfg) {
  if (!cfg.dataset.empty()) {
    CsvOptions opts;
    opts.has_header = cfg.csv_header;
    return ingest_csv(cfg.dataset, opts);
  }
  return synth::generate(cfg.synth).stream;
}

std::unique_ptr<Model> make_link_model(const RunConfig& cfg, const Dataset& data, std::uint64_t seed) {
  auto m = std::make_unique<Model>();
  m->encoder = encoders::make_encoder(cfg.encoder, cfg.dims, data.stream, data.index, mix(seed, kEncoderInit));
  std::mt19937_64 rng(mix(seed, kHeadInit));
  m->heads = selective::SelectiveHeads(m->head_params, "link", 2 * m->encoder->output_dim(), cfg.head_hidden, rng);
  return m;
}

std::unique_ptr<Model> make_node_model(const RunConfig& cfg, const Dataset& data, std::uint64_t seed) {
  auto m = std::make_unique<Model>();
  m->encoder = encoders::make_encoder(cfg.encoder, cfg.dims, data.stream, data.index, mix(seed, kEncoderInit));
  std::mt19937_64 rng(mix(seed, kHeadInit, 1));
  m->heads = selective::SelectiveHeads(m->head_params, "node", m->encoder->output_dim(), cfg.head_hidden, rng);
  return m;
}

TrainOutcome fit_link(Model& model, const Dataset& data, const RunConfig& cfg, const selective::LossConfig& loss,
                      std::uint64_t seed) {
  loss.validate();
  nn::Optimizer enc_opt(cfg.optimizer, cfg.learning_rate);
  nn::Optimizer head_opt(cfg.optimizer, cfg.learning_rate);
  const EdgeHistory none;
  TrainOutcome out;
  std::vector<Tensor2> best_enc = model.encoder->params().snapshot();
  std::vector<Tensor2> best_heads = model.head_params.snapshot();
  double best = -std::numeric_limits<double>::infinity();

  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    model.encoder->reset_state();
    std::size_t k = 0;
    double loss_sum = 0.0;
    for_batches(0, data.split.train_end, cfg.batch_size, [&](std::size_t b, std::size_t e) {
      const auto pos = positives(data.stream, b, e);
      const auto neg = sample_random(pos, data.pool, mix(seed, kTrainNeg, epoch * 1000003 + k++));
      Tape tape;
      const PairScores s = score_pairs(model, tape, pos, neg.samples);
      std::vector<int> labels(s.rows, 0);
      std::fill(labels.begin(), labels.begin() + static_cast<std::ptrdiff_t>(pos.size()), 1);
      const auto f = column(s.logits.f), a = column(s.logits.a), h = column(s.logits.h);
      const auto lg = selective::selective_loss_logits({f, a, h}, labels, loss, false);
      loss_sum += lg.value.loss;
      backward_heads(tape, s.logits, lg);
      enc_opt.step(model.encoder->params());
      head_opt.step(model.head_params);
      model.encoder->commit(tape, b, e);
    });

    std::vector<ScoredEvent> val;
    std::size_t fallbacks = 0;
    score_span(model, data, data.split.train_end, data.split.val_end, cfg.batch_size, NegativeStrategy::random,
               none, mix(seed, kValNeg), val, fallbacks);
    const double ap = ap_of(scores_only(val));
    out.validation_history.push_back(ap);
    out.epochs_run = epoch;
    progress("  epoch " + std::to_string(epoch) + " loss " + std::to_string(loss_sum / std::max<std::size_t>(k, 1)) +
             " val_ap " + std::to_string(ap));
    if (ap > best) {
      best = ap;
      out.best_epoch = epoch;
      best_enc = model.encoder->params().snapshot();
      best_heads = model.head_params.snapshot();
    } else if (epoch - out.best_epoch >= cfg.patience) {
      break;
    }
  }
  model.encoder->params().restore(best_enc);
  model.head_params.restore(best_heads);
  out.best_validation = best;
  return out;
}

Evaluation evaluate_link(Model& model, const Dataset& data, const RunConfig& cfg, std::uint64_t seed) {
  const auto& sp = data.split;
  Evaluation ev;
  model.encoder->reset_state();
  replay(*model.encoder, 0, sp.train_end, cfg.batch_size);
  const EdgeHistory val_hist(data.stream, sp.train_end, sp.train_end, sp.val_end);
  const EdgeHistory test_hist(data.stream, sp.train_end, sp.val_end, sp.total);
  score_span(model, data, sp.train_end, sp.val_end, cfg.batch_size, cfg.nss, val_hist, mix(seed, kEvalNeg, 1),
             ev.validation, ev.fallback_count);
  score_span(model, data, sp.val_end, sp.total, cfg.batch_size, cfg.nss, test_hist, mix(seed, kEvalNeg, 2), ev.test,
             ev.fallback_count);

  if (cfg.task == Task::link_inductive) {
    auto unseen = [&](const ScoredEvent& x) {
      return !data.seen_in_train[data.stream.src(x.event_index)] ||
             !data.seen_in_train[data.stream.dst(x.event_index)];
    };
    auto mask = [&](std::vector<ScoredEvent>& xs) {
      std::vector<ScoredEvent> kept;
      std::copy_if(xs.begin(), xs.end(), std::back_inserter(kept), unseen);
      return kept;
    };
    auto test = mask(ev.test);
    if (test.empty()) {
      throw ConfigError("inductive task: no test event touches a node unseen in training");
    }
    ev.test = std::move(test);
    auto val = mask(ev.validation);
    if (!val.empty()) ev.validation = std::move(val);
  }
  return ev;
}

Tensor2 source_embeddings(encoders::TemporalEncoder& encoder, const Dataset& data, std::size_t batch_size) {
  Tensor2 out(data.stream.size(), encoder.output_dim());
  encoder.reset_state();
  for_batches(0, data.stream.size(), batch_size, [&](std::size_t b, std::size_t e) {
    std::vector<Query> queries;
    for (std::size_t i = b; i < e; ++i) queries.push_back({data.stream.src(i), data.stream.t(i)});
    Tape tape;
    const Var z = encoder.embed(tape, queries);
    for (std::size_t i = b; i < e; ++i) {
      const auto r = z.value().row(i - b);
      std::copy(r.begin(), r.end(), out.row(i).begin());
    }
    encoder.commit(tape, b, e);
  });
  return out;
}

namespace {

Tensor2 rows_of(const Tensor2& all, std::size_t b, std::size_t e) {
  Tensor2 out(e - b, all.cols());
  std::copy(all.data() + b * all.cols(), all.data() + e * all.cols(), out.data());
  return out;
}

std::vector<ScoredEvent> score_nodes(Model& model, const Tensor2& emb, const Dataset& data, std::size_t begin,
                                     std::size_t end, std::size_t batch) {
  std::vector<ScoredEvent> out;
  for_batches(begin, end, batch, [&](std::size_t b, std::size_t e) {
    Tape tape;
    const auto logits = model.heads(tape, tape.constant(rows_of(emb, b, e)));
    const auto f = logits.f.value().values();
    const auto a = logits.a.value().values();
    for (std::size_t i = b; i < e; ++i) {
      if (data.stream.label(i) < 0) continue;
      out.push_back({{selective::logistic(f[i - b]), selective::logistic(a[i - b]), data.stream.label(i)}, i, true});
    }
  });
  return out;
}

}  // namespace

TrainOutcome fit_node(Model& model, const Tensor2& embeddings, const Dataset& data, const RunConfig& cfg,
                      const selective::LossConfig& loss, std::uint64_t seed) {
  loss.validate();
  if (!data.stream.has_labels()) throw Error("node classification: the stream carries no state labels");
  std::size_t minority = 0, majority = 0;
  for (std::size_t i = 0; i < data.split.train_end; ++i) {
    if (data.stream.label(i) == 1) ++minority;
    if (data.stream.label(i) == 0) ++majority;
  }
  if (minority == 0 || majority == 0) {
    throw Error("node classification: training span has " + std::to_string(minority) + " label-1 and " +
                std::to_string(majority) + " label-0 examples; both classes are required");
  }
  (void)seed;
  nn::Optimizer opt(cfg.optimizer, cfg.learning_rate);
  TrainOutcome out;
  std::vector<Tensor2> best_heads = model.head_params.snapshot();
  double best = -std::numeric_limits<double>::infinity();
  for (std::size_t epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    double loss_sum = 0.0;
    std::size_t steps = 0;
    for_batches(0, data.split.train_end, cfg.batch_size, [&](std::size_t b, std::size_t e) {
      std::vector<std::size_t> idx;
      std::vector<int> labels;
      for (std::size_t i = b; i < e; ++i) {
        if (data.stream.label(i) < 0) continue;
        idx.push_back(i - b);
        labels.push_back(data.stream.label(i));
      }
      if (idx.empty()) return;
      Tape tape;
      const Var x = nn::gather_rows(tape.constant(rows_of(embeddings, b, e)), idx);
      const auto logits = model.heads(tape, x);
      const auto f = column(logits.f), a = column(logits.a), h = column(logits.h);
      const auto lg = selective::selective_loss_logits({f, a, h}, labels, loss, true);
      loss_sum += lg.value.loss;
      ++steps;
      backward_heads(tape, logits, lg);
      opt.step(model.head_params);
    });
    const auto val = score_nodes(model, embeddings, data, data.split.train_end, data.split.val_end, cfg.batch_size);
    const double auc = auc_of(scores_only(val));
    out.validation_history.push_back(auc);
    out.epochs_run = epoch;
    progress("  epoch " + std::to_string(epoch) + " loss " + std::to_string(loss_sum / std::max<std::size_t>(steps, 1)) +
             " val_auc " + std::to_string(auc));
    if (auc > best) {
      best = auc;
      out.best_epoch = epoch;
      best_heads = model.head_params.snapshot();
    } else if (epoch - out.best_epoch >= cfg.patience) {
      break;
    }
  }
  model.head_params.restore(best_heads);
  out.best_validation = best;
  return out;
}

Evaluation evaluate_node(Model& model, const Tensor2& embeddings, const Dataset& data, std::size_t batch_size) {
  Evaluation ev;
  ev.validation = score_nodes(model, embeddings, data, data.split.train_end, data.split.val_end, batch_size);
  ev.test = score_nodes(model, embeddings, data, data.split.val_end, data.split.total, batch_size);
  return ev;
}

std::vector<eval::CoverageReport> sweep(const Evaluation& ev, std::span<const double> targets, bool with_ap) {
  if (ev.validation.empty()) throw Error("evaluation: no validation examples");
  const auto val = scores_only(ev.validation);
  const auto test = scores_only(ev.test);
  auto rows = eval::coverage_sweep(val, test, targets);
  if (!with_ap) {
    for (auto& r : rows) {
      r.ap = std::numeric_limits<double>::quiet_NaN();
      r.ap_defined = false;
      std::string kept;
      std::istringstream parts(r.note);
      std::string part;
      while (std::getline(parts, part, ';')) {
        const auto start = part.find_first_not_of(' ');
        if (start == std::string::npos || part.compare(start, 3, "AP:") == 0) continue;
        kept += (kept.empty() ? "" : "; ") + part.substr(start);
      }
      r.note = kept;
    }
  }
  return rows;
}

std::vector<AggregateRow> aggregate(const std::vector<SeedResult>& seeds, std::span<const double> targets) {
  std::vector<AggregateRow> out;
  for (double c : targets) {
    AggregateRow row;
    row.coverage_target = c;
    std::vector<double> aps, aucs, realized;
    for (const auto& s : seeds) {
      if (s.failed) continue;
      for (const auto& r : s.rows) {
        if (r.coverage_target != c) continue;
        realized.push_back(r.realized_coverage);
        if (r.ap_defined) aps.push_back(r.ap);
        if (r.auc_defined) aucs.push_back(r.auc);
      }
    }
    auto mean_std = [](const std::vector<double>& v, double& mean, double& sd) {
      mean = sd = 0.0;
      if (v.empty()) return;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      for (double x : v) sd += (x - mean) * (x - mean);
      sd = std::sqrt(sd / static_cast<double>(v.size()));
    };
    double unused = 0.0;
    row.n_seeds = realized.size();
    mean_std(realized, row.realized_coverage_mean, unused);
    mean_std(aps, row.ap_mean, row.ap_std);
    mean_std(aucs, row.auc_mean, row.auc_std);
    row.ap_count = aps.size();
    row.auc_count = aucs.size();
    out.push_back(row);
  }
  return out;
}

std::string checkpoint_name(std::uint64_t seed, double coverage_target) {
  return "model_seed" + std::to_string(seed) + "_c" +
         std::to_string(static_cast<int>(std::lround(coverage_target * 100.0))) + ".params";
}

std::string expand_seed(const std::string& pattern, std::uint64_t seed) {
  std::string out = pattern;
  const std::string key = "{seed}";
  for (auto pos = out.find(key); pos != std::string::npos; pos = out.find(key, pos)) {
    out.replace(pos, key.size(), std::to_string(seed));
  }
  return out;
}

void save_model(const std::filesystem::path& path, const Model& model) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  nn::write_params(out, model.encoder->params());
  nn::write_params(out, model.head_params);
  if (!out) throw Error("write failed: " + path.string());
}

void load_model(const std::filesystem::path& path, Model& model) {
  std::ifstream in(path);
  if (!in) throw Error("missing checkpoint '" + path.string() + "'");
  nn::read_params(in, model.encoder->params());
  nn::read_params(in, model.head_params);
}

void load_encoder(const std::filesystem::path& path, encoders::TemporalEncoder& encoder) {
  std::ifstream in(path);
  if (!in) throw Error("missing checkpoint '" + path.string() + "'");
  nn::read_params(in, encoder.params());
}

SeedResult run_link_seed(const RunConfig& cfg, const Dataset& data, std::uint64_t seed,
                         const std::filesystem::path& checkpoint_dir) {
  SeedResult res;
  res.seed = seed;
  auto train_one = [&](double c, std::span<const double> targets) {
    selective::LossConfig loss = cfg.loss;
    loss.coverage_target = c;
    auto model = make_link_model(cfg, data, seed);
    model->heads.set_initial_coverage(c);
    progress("seed " + std::to_string(seed) + " coverage target " + std::to_string(c));
    const TrainOutcome t = fit_link(*model, data, cfg, loss, seed);
    res.best_epochs.push_back(t.best_epoch);
    if (!checkpoint_dir.empty()) save_model(checkpoint_dir / checkpoint_name(seed, c), *model);
    const Evaluation ev = evaluate_link(*model, data, cfg, seed);
    for (auto& r : sweep(ev, targets, true)) res.rows.push_back(std::move(r));
  };
  if (cfg.single_model) {
    train_one(cfg.loss.coverage_target, cfg.coverage_targets);
  } else {
    for (double c : cfg.coverage_targets) train_one(c, std::span<const double>(&c, 1));
  }
  return res;
}

SeedResult run_node_seed(const RunConfig& cfg, const Dataset& data, encoders::TemporalEncoder& encoder,
                         std::uint64_t seed) {
  SeedResult res;
  res.seed = seed;
  const std::uint64_t before = encoder.params().checksum();
  const Tensor2 emb = source_embeddings(encoder, data, cfg.batch_size);
  auto train_one = [&](double c, std::span<const double> targets) {
    selective::LossConfig loss = cfg.loss;
    loss.coverage_target = c;
    Model heads;
    std::mt19937_64 rng(mix(seed, kHeadInit, 1));
    heads.heads = selective::SelectiveHeads(heads.head_params, "node", encoder.output_dim(), cfg.head_hidden, rng);
    heads.heads.set_initial_coverage(c);
    progress("seed " + std::to_string(seed) + " coverage target " + std::to_string(c));
    const TrainOutcome t = fit_node(heads, emb, data, cfg, loss, seed);
    res.best_epochs.push_back(t.best_epoch);
    const Evaluation ev = evaluate_node(heads, emb, data, cfg.batch_size);
    for (auto& r : sweep(ev, targets, false)) res.rows.push_back(std::move(r));
  };
  if (cfg.single_model) {
    train_one(cfg.loss.coverage_target, cfg.coverage_targets);
  } else {
    for (double c : cfg.coverage_targets) train_one(c, std::span<const double>(&c, 1));
  }
  if (encoder.params().checksum() != before) {
    throw ContractError("node classification modified the frozen encoder parameters");
  }
  return res;
}

RunResult run_multiseed(const RunConfig& cfg, const Dataset& data, const std::filesystem::path& checkpoint_dir) {
  cfg.validate();
  RunResult result;
  for (std::uint64_t seed : cfg.seeds) {
    SeedResult res;
    try {
      if (cfg.task == Task::node_classification) {
        if (cfg.pretrained.empty()) {
          throw Error("node classification needs a pretrained link checkpoint (key 'pretrained')");
        }
        auto model = make_node_model(cfg, data, seed);
        load_encoder(expand_seed(cfg.pretrained, seed), *model->encoder);
        res = run_node_seed(cfg, data, *model->encoder, seed);
      } else {
        res = run_link_seed(cfg, data, seed, checkpoint_dir);
      }
    } catch (const Error& e) {
      res = SeedResult{};
      res.seed = seed;
      res.failed = true;
      res.error = e.what();
      progress("seed " + std::to_string(seed) + " failed: " + res.error);
    }
    result.seeds.push_back(std::move(res));
  }
  result.aggregate = aggregate(result.seeds, cfg.coverage_targets);
  return result;
}

std::string format_cell(double mean, double std, std::size_t count) {
  if (count == 0) return "n/a";
  std::ostringstream s;
  s << std::fixed << std::setprecision(2) << 100.0 * mean << " ± " << 100.0 * std;
  return s.str();
}

void write_aggregate_csv(std::ostream& out, const std::vector<AggregateRow>& rows) {
  const auto precision = out.precision(17);
  out << "coverage_target,n_seeds,realized_coverage_mean,ap_mean,ap_std,auc_mean,auc_std\n";
  auto cell = [&](double v, std::size_t count) {
    if (count == 0) {
      out << "nan";
    } else {
      out << v;
    }
  };
  for (const auto& r : rows) {
    out << r.coverage_target << ',' << r.n_seeds << ',';
    cell(r.realized_coverage_mean, r.n_seeds);
    out << ',';
    cell(r.ap_mean, r.ap_count);
    out << ',';
    cell(r.ap_std, r.ap_count);
    out << ',';
    cell(r.auc_mean, r.auc_count);
    out << ',';
    cell(r.auc_std, r.auc_count);
    out << '\n';
  }
  out.precision(precision);
}

void write_aggregate_table(std::ostream& out, const std::vector<AggregateRow>& rows, bool with_ap) {
  out << std::left << std::setw(14) << "Coverage (%)" << std::setw(14) << "Realized (%)";
  if (with_ap) out << std::setw(18) << "AP";
  out << "AUC\n";
  for (const auto& r : rows) {
    std::ostringstream cov, real;
    cov << std::fixed << std::setprecision(0) << 100.0 * r.coverage_target;
    real << std::fixed << std::setprecision(2) << 100.0 * r.realized_coverage_mean;
    out << std::left << std::setw(14) << cov.str() << std::setw(14) << real.str();
    if (with_ap) out << std::setw(19) << format_cell(r.ap_mean, r.ap_std, r.ap_count);
    out << format_cell(r.auc_mean, r.auc_std, r.auc_count) << '\n';
  }
}

void write_report(const std::filesystem::path& dir, const RunResult& result) {
  std::filesystem::create_directories(dir);
  auto open = [&](const std::string& name) {
    std::ofstream f(dir / name);
    if (!f) throw Error("cannot open '" + (dir / name).string() + "' for writing");
    return f;
  };
  bool with_ap = false;
  for (const auto& s : result.seeds) {
    auto f = open("seed_" + std::to_string(s.seed) + ".csv");
    eval::write_coverage_csv(f, s.rows);
    for (const auto& r : s.rows) with_ap = with_ap || r.ap_defined;
  }
  {
    auto f = open("seeds.csv");
    f << "seed,status,best_epochs,error\n";
    for (const auto& s : result.seeds) {
      std::string epochs;
      for (std::size_t i = 0; i < s.best_epochs.size(); ++i) {
        epochs += (i ? ";" : "") + std::to_string(s.best_epochs[i]);
      }
      std::string err = s.error;
      std::replace(err.begin(), err.end(), ',', ';');
      std::replace(err.begin(), err.end(), '\n', ' ');
      f << s.seed << ',' << (s.failed ? "failed" : "ok") << ',' << epochs << ',' << err << '\n';
    }
  }
  {
    auto f = open("aggregate.csv");
    write_aggregate_csv(f, result.aggregate);
  }
  {
    auto f = open("table.txt");
    write_aggregate_table(f, result.aggregate, with_ap);
  }
}

}  // namespace ctdg::harness
