#pragma once

#include <algorithm>
#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "alpn/errors.hpp"
#include "alpn/tensor.hpp"

namespace alpn {

// ---------------------------------------------------------------------------
// Exercise catalog
// ---------------------------------------------------------------------------

struct ExerciseInfo {
  int exercise_id = 0;
  int topic_id = 0;
  int area_id = 0;
};

// The J exercises with their topic/area labels; defines the agent's action
// space. Exercise ids are dense 0..J-1 and each topic belongs to exactly one
// area.
class ExerciseCatalog {
 public:
  ExerciseCatalog(std::vector<ExerciseInfo> exercises, int topic_count,
                  int area_count)
      : exercises_(std::move(exercises)),
        topic_count_(topic_count),
        area_count_(area_count) {
    validate();
  }

  int size() const { return static_cast<int>(exercises_.size()); }
  int topic_count() const { return topic_count_; }
  int area_count() const { return area_count_; }
  const std::vector<ExerciseInfo>& exercises() const { return exercises_; }
  const ExerciseInfo& exercise(int id) const { return exercises_[id]; }

  // Exercise ids sharing a topic with `id`, excluding `id` itself.
  std::vector<int> topic_siblings(int id) const {
    std::vector<int> out;
    const int topic = exercises_[id].topic_id;
    for (const ExerciseInfo& e : exercises_) {
      if (e.topic_id == topic && e.exercise_id != id) {
        out.push_back(e.exercise_id);
      }
    }
    return out;
  }

 private:
  void validate() const {
    if (exercises_.empty()) {
      throw ConfigError("catalog: at least one exercise is required");
    }
    if (topic_count_ < 1 || area_count_ < 1) {
      throw ConfigError("catalog: topic and area counts must be positive");
    }
    std::vector<char> seen(exercises_.size(), 0);
    std::vector<int> topic_area(topic_count_, -1);
    for (const ExerciseInfo& e : exercises_) {
      if (e.exercise_id < 0 || e.exercise_id >= size() || seen[e.exercise_id]) {
        throw ConfigError("catalog: exercise ids must be exactly 0.." +
                          std::to_string(size() - 1) + " without duplicates");
      }
      seen[e.exercise_id] = 1;
      if (e.topic_id < 0 || e.topic_id >= topic_count_) {
        throw ConfigError("catalog: topic id " + std::to_string(e.topic_id) +
                          " out of range for exercise " +
                          std::to_string(e.exercise_id));
      }
      if (e.area_id < 0 || e.area_id >= area_count_) {
        throw ConfigError("catalog: area id " + std::to_string(e.area_id) +
                          " out of range for exercise " +
                          std::to_string(e.exercise_id));
      }
      if (topic_area[e.topic_id] == -1) {
        topic_area[e.topic_id] = e.area_id;
      } else if (topic_area[e.topic_id] != e.area_id) {
        throw ConfigError("catalog: topic " + std::to_string(e.topic_id) +
                          " maps to more than one area");
      }
    }
  }

  std::vector<ExerciseInfo> exercises_;
  int topic_count_;
  int area_count_;
};

// Synthesizes a deterministic catalog: exercise j gets topic j % topics and
// topic t lives in area t % areas.
inline ExerciseCatalog make_catalog(int exercise_count, int topic_count,
                                    int area_count) {
  if (topic_count > exercise_count) topic_count = exercise_count;
  if (area_count > topic_count) area_count = topic_count;
  std::vector<ExerciseInfo> ex;
  ex.reserve(exercise_count);
  for (int j = 0; j < exercise_count; ++j) {
    const int topic = j % topic_count;
    ex.push_back({j, topic, topic % area_count});
  }
  return ExerciseCatalog(std::move(ex), topic_count, area_count);
}

// Catalog file format: tab- or comma-delimited with a mandatory header row
// "exercise_id  topic_id  area_id".
inline ExerciseCatalog load_catalog(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("catalog: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("catalog: '" + path + "' is empty (header row required)");
  }
  auto split = [](const std::string& s) {
    std::vector<std::string> f;
    std::string cur;
    for (char ch : s) {
      if (ch == '\t' || ch == ',') {
        f.push_back(cur);
        cur.clear();
      } else if (ch != '\r') {
        cur += ch;
      }
    }
    f.push_back(cur);
    return f;
  };
  const auto header = split(line);
  if (header.size() != 3 || header[0] != "exercise_id" ||
      header[1] != "topic_id" || header[2] != "area_id") {
    throw DataError(
        "catalog: header row must be 'exercise_id, topic_id, area_id'");
  }
  std::vector<ExerciseInfo> ex;
  int topic_max = -1, area_max = -1;
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto f = split(line);
    if (f.size() != 3) {
      throw DataError("catalog: line " + std::to_string(line_no) +
                      ": expected 3 fields, got " + std::to_string(f.size()));
    }
    try {
      ExerciseInfo info{std::stoi(f[0]), std::stoi(f[1]), std::stoi(f[2])};
      topic_max = std::max(topic_max, info.topic_id);
      area_max = std::max(area_max, info.area_id);
      ex.push_back(info);
    } catch (const std::exception&) {
      throw DataError("catalog: line " + std::to_string(line_no) +
                      ": non-integer field");
    }
  }
  return ExerciseCatalog(std::move(ex), topic_max + 1, area_max + 1);
}

inline void save_catalog(const ExerciseCatalog& catalog,
                         const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("catalog: cannot write '" + path + "'");
  out << "exercise_id\ttopic_id\tarea_id\n";
  for (const ExerciseInfo& e : catalog.exercises()) {
    out << e.exercise_id << '\t' << e.topic_id << '\t' << e.area_id << '\n';
  }
}

// ---------------------------------------------------------------------------
// Knowledge state
// ---------------------------------------------------------------------------

// Length-J vector of per-exercise correct-answer probabilities. Elements are
// clamped into [kEpsilon, 1 - kEpsilon] at construction so saturated model
// outputs cannot leave the open interval (0, 1).
class KnowledgeState {
 public:
  static constexpr double kEpsilon = 1e-6;

  KnowledgeState() = default;

  explicit KnowledgeState(Vector probs) : s_(std::move(probs)) {
    if (s_.size() == 0) {
      throw ConfigError("knowledge state: empty probability vector");
    }
    for (Eigen::Index i = 0; i < s_.size(); ++i) {
      if (!std::isfinite(s_[i])) {
        throw NumericsError("knowledge state: non-finite probability");
      }
      s_[i] = std::clamp(s_[i], kEpsilon, 1.0 - kEpsilon);
    }
  }

  const Vector& probs() const { return s_; }
  double operator[](Eigen::Index i) const { return s_[i]; }
  int size() const { return static_cast<int>(s_.size()); }

  friend bool operator==(const KnowledgeState& a, const KnowledgeState& b) {
    return a.s_.size() == b.s_.size() && a.s_ == b.s_;
  }

 private:
  Vector s_;
};

// ---------------------------------------------------------------------------
// Interaction log
// ---------------------------------------------------------------------------

// Time-ordered (exercise, correctness) pairs; append-only within an episode.
struct InteractionLog {
  struct Entry {
    int exercise_id;
    int correctness;  // 0 or 1
  };
  std::vector<Entry> entries;

  void append(int exercise_id, int correctness) {
    if (correctness != 0 && correctness != 1) {
      throw DataError("interaction log: correctness must be 0 or 1");
    }
    entries.push_back({exercise_id, correctness});
  }
  std::size_t size() const { return entries.size(); }
  bool empty() const { return entries.empty(); }
};

// ---------------------------------------------------------------------------
// Learning goal
// ---------------------------------------------------------------------------

struct GoalConfig {
  double beta = 0.8;  // pass-rate threshold in (0, 1)
  int t_max = 100;    // maximum learning-path length

  void validate() const {
    if (!(beta > 0.0 && beta < 1.0)) {
      throw ConfigError("goal.beta must be in (0, 1)");
    }
    if (t_max < 1) throw ConfigError("goal.t_max must be >= 1");
  }
};

// ---------------------------------------------------------------------------
// Scalar quantities
// ---------------------------------------------------------------------------

// Average pass rate: the mean of the knowledge state.
inline double apr(const KnowledgeState& state) {
  return state.probs().mean();
}

inline double learning_gain(double apr_now, double apr_prev) {
  return apr_now - apr_prev;
}

inline double distance_to_goal(double beta, double apr_now) {
  return beta - apr_now;
}

// Inclusive comparison: reaching the threshold exactly counts.
inline bool goal_reached(double apr_now, double beta) {
  return apr_now >= beta;
}

}  // namespace alpn
