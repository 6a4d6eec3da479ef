#pragma once

#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "alpn/agent.hpp"
#include "alpn/akt.hpp"
#include "alpn/errors.hpp"
#include "alpn/tensor.hpp"

namespace alpn {

// Shortest exact decimal representation of a double (%.17g round-trips).
inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Checkpoint container: versioned text layout with a magic header, ordered
// metadata and named tensors.
//
//   ALPN-CHECKPOINT 1
//   kind <agent|akt|resume>
//   meta <key> <value>
//   tensor <name> <rows> <cols>
//   <rows*cols values, row-major, one line>
//   end
// ---------------------------------------------------------------------------

struct CheckpointData {
  std::string kind;
  std::map<std::string, std::string> meta;
  std::vector<ParamTensor> tensors;

  const std::string& require_meta(const std::string& key) const {
    auto it = meta.find(key);
    if (it == meta.end()) {
      throw DataError("checkpoint: missing metadata key '" + key + "'");
    }
    return it->second;
  }

  const ParamTensor* find(const std::string& name) const {
    for (const ParamTensor& t : tensors) {
      if (t.name == name) return &t;
    }
    return nullptr;
  }
};

inline void save_checkpoint(
    const std::string& path, const std::string& kind,
    const std::vector<std::pair<std::string, std::string>>& meta,
    const std::vector<const ParamTensor*>& tensors) {
  std::ofstream out(path);
  if (!out) throw IoError("checkpoint: cannot write '" + path + "'");
  out << "ALPN-CHECKPOINT 1\n";
  out << "kind " << kind << '\n';
  for (const auto& [k, v] : meta) out << "meta " << k << ' ' << v << '\n';
  for (const ParamTensor* t : tensors) {
    out << "tensor " << t->name << ' ' << t->rows() << ' ' << t->cols()
        << '\n';
    for (Eigen::Index r = 0; r < t->rows(); ++r) {
      for (Eigen::Index c = 0; c < t->cols(); ++c) {
        if (r != 0 || c != 0) out << ' ';
        out << fmt_double(t->value(r, c));
      }
    }
    out << '\n';
  }
  out << "end\n";
  if (!out) throw IoError("checkpoint: write failure on '" + path + "'");
}

inline CheckpointData load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != "ALPN-CHECKPOINT 1") {
    throw DataError("checkpoint: '" + path +
                    "' lacks the 'ALPN-CHECKPOINT 1' header");
  }
  CheckpointData data;
  bool ended = false;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ls(line);
    std::string tag;
    ls >> tag;
    if (tag == "kind") {
      ls >> data.kind;
    } else if (tag == "meta") {
      std::string key, value;
      ls >> key;
      std::getline(ls, value);
      if (!value.empty() && value.front() == ' ') value.erase(0, 1);
      data.meta[key] = value;
    } else if (tag == "tensor") {
      std::string name;
      Eigen::Index rows = 0, cols = 0;
      ls >> name >> rows >> cols;
      if (name.empty() || rows <= 0 || cols <= 0) {
        throw DataError("checkpoint: malformed tensor declaration in '" +
                        path + "'");
      }
      ParamTensor t(name, rows, cols);
      std::string values;
      if (!std::getline(in, values)) {
        throw DataError("checkpoint: missing values for tensor '" + name +
                        "'");
      }
      std::istringstream vs(values);
      for (Eigen::Index r = 0; r < rows; ++r) {
        for (Eigen::Index c = 0; c < cols; ++c) {
          if (!(vs >> t.value(r, c))) {
            throw DataError("checkpoint: tensor '" + name + "' has fewer than " +
                            std::to_string(rows * cols) + " values");
          }
        }
      }
      data.tensors.push_back(std::move(t));
    } else if (tag == "end") {
      ended = true;
      break;
    } else {
      throw DataError("checkpoint: unknown record '" + tag + "' in '" + path +
                      "'");
    }
  }
  if (!ended) throw DataError("checkpoint: '" + path + "' is truncated");
  if (data.kind.empty()) {
    throw DataError("checkpoint: '" + path + "' has no kind record");
  }
  return data;
}

// Copies stored values into live tensors, matching by name and shape.
inline void restore_params(const CheckpointData& data,
                           const std::vector<ParamTensor*>& params) {
  for (ParamTensor* p : params) {
    const ParamTensor* stored = data.find(p->name);
    if (stored == nullptr) {
      throw DataError("checkpoint: missing tensor '" + p->name + "'");
    }
    if (stored->rows() != p->rows() || stored->cols() != p->cols()) {
      throw DataError("checkpoint: tensor '" + p->name + "' has shape " +
                      std::to_string(stored->rows()) + "x" +
                      std::to_string(stored->cols()) + ", expected " +
                      std::to_string(p->rows()) + "x" +
                      std::to_string(p->cols()));
    }
    p->value = stored->value;
  }
}

// ---------------------------------------------------------------------------
// Model-level helpers
// ---------------------------------------------------------------------------

inline void save_agent_checkpoint(const std::string& path,
                                  const ActorCriticNet& net) {
  std::vector<const ParamTensor*> tensors = net.params();
  save_checkpoint(path, "agent",
                  {{"actions", std::to_string(net.action_count())},
                   {"hidden", std::to_string(net.hidden_width())}},
                  tensors);
}

inline ActorCriticNet load_agent_checkpoint(const std::string& path) {
  const CheckpointData data = load_checkpoint(path);
  if (data.kind != "agent") {
    throw DataError("checkpoint: '" + path + "' is kind '" + data.kind +
                    "', expected 'agent'");
  }
  const int actions = std::stoi(data.require_meta("actions"));
  const int hidden = std::stoi(data.require_meta("hidden"));
  RngStream rng(0, 0);
  ActorCriticNet net(actions, hidden, rng);
  restore_params(data, net.params());
  return net;
}

inline void save_akt_checkpoint(const std::string& path,
                                const AktLiteModel& model) {
  auto mut = const_cast<AktLiteModel&>(model).params();
  std::vector<const ParamTensor*> tensors(mut.begin(), mut.end());
  save_checkpoint(path, "akt",
                  {{"exercises", std::to_string(model.exercise_count())},
                   {"embed_dim", std::to_string(model.embed_dim())},
                   {"window", std::to_string(model.window())}},
                  tensors);
}

inline AktLiteModel load_akt_checkpoint(const std::string& path) {
  const CheckpointData data = load_checkpoint(path);
  if (data.kind != "akt") {
    throw DataError("checkpoint: '" + path + "' is kind '" + data.kind +
                    "', expected 'akt'");
  }
  const int exercises = std::stoi(data.require_meta("exercises"));
  const int embed_dim = std::stoi(data.require_meta("embed_dim"));
  const int window = std::stoi(data.require_meta("window"));
  RngStream rng(0, 0);
  AktLiteModel model(exercises, embed_dim, rng, window);
  restore_params(data, model.params());
  return model;
}

// ---------------------------------------------------------------------------
// Resume state: parameters, optimizer moments and loop counters, written at
// update-window boundaries so a continued run replays identically.
// ---------------------------------------------------------------------------

inline void save_resume_checkpoint(const std::string& path, Trainer& trainer,
                                   const std::string& config_hash) {
  std::vector<ParamTensor*> params = trainer.net().params();
  std::vector<ParamTensor> moments;
  moments.reserve(2 * params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    ParamTensor m("adam.m." + params[i]->name, params[i]->rows(),
                  params[i]->cols());
    m.value = trainer.adam().first_moment(i);
    moments.push_back(std::move(m));
    ParamTensor v("adam.v." + params[i]->name, params[i]->rows(),
                  params[i]->cols());
    v.value = trainer.adam().second_moment(i);
    moments.push_back(std::move(v));
  }
  std::vector<const ParamTensor*> tensors;
  for (ParamTensor* p : params) tensors.push_back(p);
  for (const ParamTensor& m : moments) tensors.push_back(&m);
  save_checkpoint(
      path, "resume",
      {{"actions", std::to_string(trainer.net().action_count())},
       {"hidden", std::to_string(trainer.net().hidden_width())},
       {"variant", variant_name(trainer.variant())},
       {"seed", std::to_string(trainer.seed())},
       {"episodes_done", std::to_string(trainer.episodes_done())},
       {"update_count", std::to_string(trainer.update_count())},
       {"adam_step", std::to_string(trainer.adam().step_count())},
       {"config_hash", config_hash}},
      tensors);
}

// Restores trainer state in place; returns the episode index to continue at.
inline int load_resume_checkpoint(const std::string& path, Trainer& trainer,
                                  const std::string& expected_config_hash) {
  const CheckpointData data = load_checkpoint(path);
  if (data.kind != "resume") {
    throw DataError("checkpoint: '" + path + "' is kind '" + data.kind +
                    "', expected 'resume'");
  }
  if (data.require_meta("config_hash") != expected_config_hash) {
    throw ConfigError("resume: checkpoint '" + path +
                      "' was produced by a different configuration");
  }
  if (data.require_meta("variant") != variant_name(trainer.variant()) ||
      std::stoull(data.require_meta("seed")) != trainer.seed()) {
    throw ConfigError("resume: checkpoint '" + path +
                      "' does not match the requested variant/seed");
  }
  restore_params(data, trainer.net().params());
  std::vector<ParamTensor*> params = trainer.net().params();
  for (std::size_t i = 0; i < params.size(); ++i) {
    const ParamTensor* m = data.find("adam.m." + params[i]->name);
    const ParamTensor* v = data.find("adam.v." + params[i]->name);
    if (m == nullptr || v == nullptr) {
      throw DataError("resume: optimizer moments missing for '" +
                      params[i]->name + "'");
    }
    trainer.adam().restore(i, m->value, v->value);
  }
  trainer.adam().restore_step_count(
      std::stoll(data.require_meta("adam_step")));
  const int episodes_done = std::stoi(data.require_meta("episodes_done"));
  trainer.restore_progress(episodes_done,
                           std::stoll(data.require_meta("update_count")));
  return episodes_done;
}

}  // namespace alpn
