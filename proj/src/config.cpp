// SPDX-License-Identifier: Apache-2.0
#include "ctdg/config.hpp"

#include <fstream>
#include <sstream>

#include "ctdg/error.hpp"
#include "json.hpp"

namespace ctdg {

using nlohmann::json;

Task parse_task(const std::string& name) {
  if (name == "link_transductive") return Task::link_transductive;
  if (name == "link_inductive") return Task::link_inductive;
  if (name == "node_classification") return Task::node_classification;
  throw ConfigError("unknown task '" + name +
                    "' (expected link_transductive, link_inductive or node_classification)");
}

std::string to_string(Task task) {
  switch (task) {
    case Task::link_transductive:
      return "link_transductive";
    case Task::link_inductive:
      return "link_inductive";
    case Task::node_classification:
      return "node_classification";
  }
  return "?";
}

void RunConfig::validate() const {
  loss.validate();
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (max_epochs == 0) throw ConfigError("max_epochs must be positive");
  if (patience == 0) throw ConfigError("patience must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (seeds.empty()) throw ConfigError("at least one seed is required");
  if (coverage_targets.empty()) throw ConfigError("coverage_targets must not be empty");
  for (double c : coverage_targets) {
    if (!(c > 0.0 && c <= 1.0)) throw ConfigError("coverage targets must lie in (0, 1]");
  }
  if (!(train_frac > 0.0 && val_frac > 0.0 && train_frac + val_frac < 1.0)) {
    throw ConfigError("train_frac and val_frac must be positive with a non-empty test span");
  }
  if (head_hidden == 0) throw ConfigError("head_hidden must be positive");
  if (task == Task::node_classification && nss != NegativeStrategy::random) {
    throw ConfigError("nss applies to link tasks only");
  }
  if (dataset.empty()) synth.validate();
}

namespace {

template <class T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void check_keys(const json& j, std::initializer_list<const char*> allowed, const std::string& where) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError("unknown key '" + key + "' in " + where);
  }
}

}  // namespace

void apply_json(RunConfig& cfg, const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw ConfigError(std::string("config is not valid JSON: ") + e.what());
  }
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  try {
    check_keys(j,
               {"dataset", "csv_header", "synth", "encoder", "dims", "head_hidden", "task", "nss", "loss",
                "batch_size", "max_epochs", "patience", "optimizer", "learning_rate", "seeds",
                "coverage_targets", "single_model", "train_frac", "val_frac", "pretrained", "output_dir"},
               "config");
    if (j.contains("dataset")) cfg.dataset = j.at("dataset").get<std::string>();
    take(j, "csv_header", cfg.csv_header);
    if (j.contains("synth")) {
      const json& s = j.at("synth");
      check_keys(s,
                 {"num_nodes", "num_events", "feat_dim", "overlap_noise_rate", "minority_rate",
                  "reoccurrence_rate", "seed", "feature_noise", "minority_source_fraction",
                  "late_node_fraction", "popularity_exponent"},
                 "synth");
      auto& c = cfg.synth;
      take(s, "num_nodes", c.num_nodes);
      take(s, "num_events", c.num_events);
      take(s, "feat_dim", c.feat_dim);
      take(s, "overlap_noise_rate", c.overlap_noise_rate);
      take(s, "minority_rate", c.minority_rate);
      take(s, "reoccurrence_rate", c.reoccurrence_rate);
      take(s, "seed", c.seed);
      take(s, "feature_noise", c.feature_noise);
      take(s, "minority_source_fraction", c.minority_source_fraction);
      take(s, "late_node_fraction", c.late_node_fraction);
      take(s, "popularity_exponent", c.popularity_exponent);
    }
    if (j.contains("encoder")) cfg.encoder = encoders::parse_encoder(j.at("encoder").get<std::string>());
    if (j.contains("dims")) {
      const json& d = j.at("dims");
      check_keys(d,
                 {"time_dim", "memory_dim", "embedding_dim", "num_neighbors", "mixer_tokens", "mixer_channels",
                  "mixer_layers"},
                 "dims");
      take(d, "time_dim", cfg.dims.time_dim);
      take(d, "memory_dim", cfg.dims.memory_dim);
      take(d, "embedding_dim", cfg.dims.embedding_dim);
      take(d, "num_neighbors", cfg.dims.num_neighbors);
      take(d, "mixer_tokens", cfg.dims.mixer_tokens);
      take(d, "mixer_channels", cfg.dims.mixer_channels);
      take(d, "mixer_layers", cfg.dims.mixer_layers);
    }
    take(j, "head_hidden", cfg.head_hidden);
    if (j.contains("task")) cfg.task = parse_task(j.at("task").get<std::string>());
    if (j.contains("nss")) cfg.nss = parse_strategy(j.at("nss").get<std::string>());
    if (j.contains("loss")) {
      const json& l = j.at("loss");
      check_keys(l, {"coverage_target", "lambda", "alpha", "beta"}, "loss");
      take(l, "coverage_target", cfg.loss.coverage_target);
      take(l, "lambda", cfg.loss.lambda);
      take(l, "alpha", cfg.loss.alpha);
      take(l, "beta", cfg.loss.beta);
    }
    take(j, "batch_size", cfg.batch_size);
    take(j, "max_epochs", cfg.max_epochs);
    take(j, "patience", cfg.patience);
    if (j.contains("optimizer")) cfg.optimizer = nn::parse_optimizer(j.at("optimizer").get<std::string>());
    take(j, "learning_rate", cfg.learning_rate);
    take(j, "seeds", cfg.seeds);
    take(j, "coverage_targets", cfg.coverage_targets);
    take(j, "single_model", cfg.single_model);
    take(j, "train_frac", cfg.train_frac);
    take(j, "val_frac", cfg.val_frac);
    take(j, "pretrained", cfg.pretrained);
    if (j.contains("output_dir")) cfg.output_dir = j.at("output_dir").get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
}

RunConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  RunConfig cfg;
  apply_json(cfg, ss.str());
  return cfg;
}

std::string to_json(const RunConfig& cfg) {
  const auto& s = cfg.synth;
  const auto& d = cfg.dims;
  json j = {
      {"dataset", cfg.dataset.string()},
      {"csv_header", cfg.csv_header},
      {"synth",
       {{"num_nodes", s.num_nodes},
        {"num_events", s.num_events},
        {"feat_dim", s.feat_dim},
        {"overlap_noise_rate", s.overlap_noise_rate},
        {"minority_rate", s.minority_rate},
        {"reoccurrence_rate", s.reoccurrence_rate},
        {"seed", s.seed},
        {"feature_noise", s.feature_noise},
        {"minority_source_fraction", s.minority_source_fraction},
        {"late_node_fraction", s.late_node_fraction},
        {"popularity_exponent", s.popularity_exponent}}},
      {"encoder", encoders::to_string(cfg.encoder)},
      {"dims",
       {{"time_dim", d.time_dim},
        {"memory_dim", d.memory_dim},
        {"embedding_dim", d.embedding_dim},
        {"num_neighbors", d.num_neighbors},
        {"mixer_tokens", d.mixer_tokens},
        {"mixer_channels", d.mixer_channels},
        {"mixer_layers", d.mixer_layers}}},
      {"head_hidden", cfg.head_hidden},
      {"task", to_string(cfg.task)},
      {"nss", to_string(cfg.nss)},
      {"loss",
       {{"coverage_target", cfg.loss.coverage_target},
        {"lambda", cfg.loss.lambda},
        {"alpha", cfg.loss.alpha},
        {"beta", cfg.loss.beta}}},
      {"batch_size", cfg.batch_size},
      {"max_epochs", cfg.max_epochs},
      {"patience", cfg.patience},
      {"optimizer", nn::to_string(cfg.optimizer)},
      {"learning_rate", cfg.learning_rate},
      {"seeds", cfg.seeds},
      {"coverage_targets", cfg.coverage_targets},
      {"single_model", cfg.single_model},
      {"train_frac", cfg.train_frac},
      {"val_frac", cfg.val_frac},
      {"pretrained", cfg.pretrained},
      {"output_dir", cfg.output_dir.string()},
  };
  return j.dump(2);
}

}  // namespace ctdg
