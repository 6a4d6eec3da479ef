#pragma once

#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "alpn/agent.hpp"
#include "alpn/akt.hpp"
#include "alpn/catalog.hpp"
#include "alpn/env.hpp"
#include "alpn/errors.hpp"
#include "alpn/student.hpp"

namespace alpn {

namespace detail {

// Strict section reader: every key must be consumed, so typos in
// hyperparameter names fail loudly instead of silently using defaults.
class SectionReader {
 public:
  SectionReader(const nlohmann::json& j, std::string path)
      : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) {
      throw ConfigError(path_ + ": expected an object");
    }
  }

  template <typename T>
  T get(const std::string& key, T fallback) {
    seen_.insert(key);
    if (!j_.contains(key)) return fallback;
    try {
      return j_.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
      throw ConfigError(path_ + "." + key + ": wrong type");
    }
  }

  bool has(const std::string& key) {
    seen_.insert(key);
    return j_.contains(key);
  }

  void finish() const {
    for (const auto& [key, value] : j_.items()) {
      if (seen_.find(key) == seen_.end()) {
        throw ConfigError(path_ + "." + key + ": unknown key");
      }
    }
  }

 private:
  const nlohmann::json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

}  // namespace detail

struct CatalogConfig {
  int exercises = 20;
  int topics = 10;
  int areas = 7;
  std::string file;  // when set, overrides the synthetic catalog

  ExerciseCatalog build() const {
    if (!file.empty()) return load_catalog(file);
    return make_catalog(exercises, topics, areas);
  }
};

struct EnvironmentSection {
  std::string backing = "analytic";  // analytic | akt
  std::string akt_checkpoint;
  int seed_history_length = 10;
  double d_floor = 0.05;
  AnalyticParams analytic{};
};

struct AktSection {
  int embed_dim = 16;
  int window = 128;
  AktHyper hyper{};
};

struct RunSection {
  int episodes = 3000;
  std::vector<std::uint64_t> seeds = {1, 2, 3, 4, 5};
  std::string out_dir = "runs/default";
  int rollout_threads = 1;
  bool export_trajectories = false;
  int ma_window = 50;
  int checkpoint_every = 1000;  // episodes between resume checkpoints
};

struct EvalSection {
  std::string mode = "sampled";  // sampled | greedy
  int students = 50;
};

struct ExperimentConfig {
  CatalogConfig catalog{};
  EnvironmentSection environment{};
  GoalConfig goal{};
  AgentVariant variant = AgentVariant::kEPPO;
  AgentHyper agent{};
  AktSection akt{};
  RunSection run{};
  EvalSection eval{};

  static ExperimentConfig from_json(const nlohmann::json& j);
  static ExperimentConfig from_file(const std::string& path);

  nlohmann::json to_json() const;
  std::string canonical_string() const { return to_json().dump(); }
  std::string hash() const;
  void validate() const;
};

inline ExperimentConfig ExperimentConfig::from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config: top level must be an object");
  ExperimentConfig cfg;
  static const std::set<std::string> known_sections = {
      "catalog", "environment", "goal", "agent", "akt", "run", "eval"};
  for (const auto& [key, value] : j.items()) {
    if (known_sections.find(key) == known_sections.end()) {
      throw ConfigError("config." + key + ": unknown section");
    }
  }
  if (j.contains("catalog")) {
    detail::SectionReader r(j.at("catalog"), "catalog");
    cfg.catalog.exercises = r.get("exercises", cfg.catalog.exercises);
    cfg.catalog.topics = r.get("topics", cfg.catalog.topics);
    cfg.catalog.areas = r.get("areas", cfg.catalog.areas);
    cfg.catalog.file = r.get("file", cfg.catalog.file);
    r.finish();
  }
  if (j.contains("environment")) {
    detail::SectionReader r(j.at("environment"), "environment");
    cfg.environment.backing = r.get("backing", cfg.environment.backing);
    cfg.environment.akt_checkpoint =
        r.get("akt_checkpoint", cfg.environment.akt_checkpoint);
    cfg.environment.seed_history_length =
        r.get("seed_history_length", cfg.environment.seed_history_length);
    cfg.environment.d_floor = r.get("d_floor", cfg.environment.d_floor);
    AnalyticParams& a = cfg.environment.analytic;
    a.eta_correct = r.get("eta_correct", a.eta_correct);
    a.eta_wrong = r.get("eta_wrong", a.eta_wrong);
    a.kappa = r.get("kappa", a.kappa);
    a.slip = r.get("slip", a.slip);
    a.guess = r.get("guess", a.guess);
    a.profile.ability_mean = r.get("ability_mean", a.profile.ability_mean);
    a.profile.ability_std = r.get("ability_std", a.profile.ability_std);
    a.profile.exercise_std = r.get("exercise_std", a.profile.exercise_std);
    r.finish();
  }
  if (j.contains("goal")) {
    detail::SectionReader r(j.at("goal"), "goal");
    cfg.goal.beta = r.get("beta", cfg.goal.beta);
    cfg.goal.t_max = r.get("t_max", cfg.goal.t_max);
    r.finish();
  }
  if (j.contains("agent")) {
    detail::SectionReader r(j.at("agent"), "agent");
    cfg.variant = variant_from_name(
        r.get<std::string>("variant", variant_name(cfg.variant)));
    AgentHyper& h = cfg.agent;
    h.gamma = r.get("gamma", h.gamma);
    h.clip_eps = r.get("clip_eps", h.clip_eps);
    h.alpha = r.get("alpha", h.alpha);
    h.vf_coef = r.get("vf_coef", h.vf_coef);
    h.lr = r.get("lr", h.lr);
    h.update_epochs = r.get("update_epochs", h.update_epochs);
    h.minibatch_size = r.get("minibatch_size", h.minibatch_size);
    h.episodes_per_update = r.get("episodes_per_update", h.episodes_per_update);
    h.buffer_capacity = r.get("buffer_capacity", h.buffer_capacity);
    h.normalize_advantages =
        r.get("normalize_advantages", h.normalize_advantages);
    h.hidden = r.get("hidden", h.hidden);
    r.finish();
  }
  if (j.contains("akt")) {
    detail::SectionReader r(j.at("akt"), "akt");
    cfg.akt.embed_dim = r.get("embed_dim", cfg.akt.embed_dim);
    cfg.akt.window = r.get("window", cfg.akt.window);
    cfg.akt.hyper.lr = r.get("lr", cfg.akt.hyper.lr);
    cfg.akt.hyper.epochs = r.get("epochs", cfg.akt.hyper.epochs);
    cfg.akt.hyper.batch = r.get("batch", cfg.akt.hyper.batch);
    r.finish();
  }
  if (j.contains("run")) {
    detail::SectionReader r(j.at("run"), "run");
    cfg.run.episodes = r.get("episodes", cfg.run.episodes);
    cfg.run.seeds = r.get("seeds", cfg.run.seeds);
    cfg.run.out_dir = r.get("out_dir", cfg.run.out_dir);
    cfg.run.rollout_threads = r.get("rollout_threads", cfg.run.rollout_threads);
    cfg.run.export_trajectories =
        r.get("export_trajectories", cfg.run.export_trajectories);
    cfg.run.ma_window = r.get("ma_window", cfg.run.ma_window);
    cfg.run.checkpoint_every = r.get("checkpoint_every", cfg.run.checkpoint_every);
    r.finish();
  }
  if (j.contains("eval")) {
    detail::SectionReader r(j.at("eval"), "eval");
    cfg.eval.mode = r.get("mode", cfg.eval.mode);
    cfg.eval.students = r.get("students", cfg.eval.students);
    r.finish();
  }
  cfg.validate();
  return cfg;
}

inline ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("config: cannot open '" + path + "'");
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
  }
  return from_json(j);
}

inline nlohmann::json ExperimentConfig::to_json() const {
  nlohmann::json j;
  j["catalog"] = {{"exercises", catalog.exercises},
                  {"topics", catalog.topics},
                  {"areas", catalog.areas},
                  {"file", catalog.file}};
  j["environment"] = {{"backing", environment.backing},
                      {"akt_checkpoint", environment.akt_checkpoint},
                      {"seed_history_length", environment.seed_history_length},
                      {"d_floor", environment.d_floor},
                      {"eta_correct", environment.analytic.eta_correct},
                      {"eta_wrong", environment.analytic.eta_wrong},
                      {"kappa", environment.analytic.kappa},
                      {"slip", environment.analytic.slip},
                      {"guess", environment.analytic.guess},
                      {"ability_mean", environment.analytic.profile.ability_mean},
                      {"ability_std", environment.analytic.profile.ability_std},
                      {"exercise_std", environment.analytic.profile.exercise_std}};
  j["goal"] = {{"beta", goal.beta}, {"t_max", goal.t_max}};
  j["agent"] = {{"variant", variant_name(variant)},
                {"gamma", agent.gamma},
                {"clip_eps", agent.clip_eps},
                {"alpha", agent.alpha},
                {"vf_coef", agent.vf_coef},
                {"lr", agent.lr},
                {"update_epochs", agent.update_epochs},
                {"minibatch_size", agent.minibatch_size},
                {"episodes_per_update", agent.episodes_per_update},
                {"buffer_capacity", agent.buffer_capacity},
                {"normalize_advantages", agent.normalize_advantages},
                {"hidden", agent.hidden}};
  j["akt"] = {{"embed_dim", akt.embed_dim},
              {"window", akt.window},
              {"lr", akt.hyper.lr},
              {"epochs", akt.hyper.epochs},
              {"batch", akt.hyper.batch}};
  j["run"] = {{"episodes", run.episodes},
              {"seeds", run.seeds},
              {"out_dir", run.out_dir},
              {"rollout_threads", run.rollout_threads},
              {"export_trajectories", run.export_trajectories},
              {"ma_window", run.ma_window},
              {"checkpoint_every", run.checkpoint_every}};
  j["eval"] = {{"mode", eval.mode}, {"students", eval.students}};
  return j;
}

// FNV-1a over the canonical JSON serialization of the effective config.
inline std::string ExperimentConfig::hash() const {
  const std::string s = canonical_string();
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  std::ostringstream out;
  out << std::hex << h;
  return out.str();
}

inline void ExperimentConfig::validate() const {
  if (catalog.file.empty()) {
    if (catalog.exercises < 1) {
      throw ConfigError("catalog.exercises must be >= 1");
    }
    if (catalog.topics < 1 || catalog.areas < 1) {
      throw ConfigError("catalog.topics and catalog.areas must be >= 1");
    }
  }
  if (environment.backing != "analytic" && environment.backing != "akt") {
    throw ConfigError("environment.backing must be 'analytic' or 'akt', got '" +
                      environment.backing + "'");
  }
  if (environment.backing == "akt" && environment.akt_checkpoint.empty()) {
    throw ConfigError("environment.akt_checkpoint is required for akt backing");
  }
  environment.analytic.validate();
  goal.validate();
  agent.validate();
  if (akt.embed_dim < 1) throw ConfigError("akt.embed_dim must be >= 1");
  if (akt.window < 1) throw ConfigError("akt.window must be >= 1");
  if (akt.hyper.epochs < 0) throw ConfigError("akt.epochs must be >= 0");
  if (akt.hyper.batch < 1) throw ConfigError("akt.batch must be >= 1");
  if (akt.hyper.lr <= 0.0) throw ConfigError("akt.lr must be > 0");
  if (run.episodes < 0) throw ConfigError("run.episodes must be >= 0");
  if (run.seeds.empty()) throw ConfigError("run.seeds must not be empty");
  if (run.rollout_threads < 1) {
    throw ConfigError("run.rollout_threads must be >= 1");
  }
  if (run.ma_window < 1) throw ConfigError("run.ma_window must be >= 1");
  if (run.checkpoint_every < 1) {
    throw ConfigError("run.checkpoint_every must be >= 1");
  }
  if (eval.mode != "sampled" && eval.mode != "greedy") {
    throw ConfigError("eval.mode must be 'sampled' or 'greedy'");
  }
  if (eval.students < 1) throw ConfigError("eval.students must be >= 1");
}

}  // namespace alpn
