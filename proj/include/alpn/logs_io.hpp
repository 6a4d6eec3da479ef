#pragma once

#include <algorithm>
#include <cstdint>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "alpn/catalog.hpp"
#include "alpn/errors.hpp"
#include "alpn/rng.hpp"
#include "alpn/student.hpp"

namespace alpn {

// Log file schema: tab-delimited rows of
//   student_id  step  exercise_id  correctness
// with a mandatory header row.

inline constexpr const char* kLogHeader =
    "student_id\tstep\texercise_id\tcorrectness";

// Simulates `students` fresh analytic students answering `steps` uniformly
// random exercises each, learning as they go.
inline std::vector<InteractionLog> generate_student_logs(
    const ExerciseCatalog& catalog, const AnalyticParams& params, int students,
    int steps, std::uint64_t seed) {
  std::vector<InteractionLog> logs;
  logs.reserve(students);
  for (int sidx = 0; sidx < students; ++sidx) {
    RngStream rng(seed, streams::kLogGen + static_cast<std::uint64_t>(sidx));
    AnalyticStudent student =
        AnalyticStudent::sample(catalog.size(), params.profile, rng);
    InteractionLog log;
    for (int t = 0; t < steps; ++t) {
      const int a = static_cast<int>(rng.uniform_int(catalog.size()));
      const KnowledgeState s = student.observe(params);
      const int c = rng.bernoulli(s[a]) ? 1 : 0;
      student.learn(catalog, a, c, params);
      log.append(a, c);
    }
    logs.push_back(std::move(log));
  }
  return logs;
}

inline void write_logs(const std::string& path,
                       const std::vector<InteractionLog>& logs) {
  std::ofstream out(path);
  if (!out) throw IoError("logs: cannot write '" + path + "'");
  out << kLogHeader << '\n';
  for (std::size_t sidx = 0; sidx < logs.size(); ++sidx) {
    for (std::size_t t = 0; t < logs[sidx].size(); ++t) {
      const auto& e = logs[sidx].entries[t];
      out << sidx << '\t' << t << '\t' << e.exercise_id << '\t'
          << e.correctness << '\n';
    }
  }
  if (!out) throw IoError("logs: write failure on '" + path + "'");
}

// Parses the documented schema, grouping rows by student (in order of first
// appearance) and ordering each student's rows by step. Every malformed row
// is rejected with its line number.
inline std::vector<InteractionLog> ingest_logs(const std::string& path,
                                               const ExerciseCatalog& catalog) {
  std::ifstream in(path);
  if (!in) throw IoError("logs: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) {
    throw DataError("logs: '" + path + "' is empty (header row required)");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kLogHeader) {
    throw DataError("logs: header row must be '" + std::string(kLogHeader) +
                    "'");
  }
  struct Row {
    long step;
    int exercise_id;
    int correctness;
  };
  std::vector<long> student_order;
  std::map<long, std::vector<Row>> by_student;
  long line_no = 1;
  auto fail = [&](const std::string& msg) -> void {
    throw DataError("logs: line " + std::to_string(line_no) + ": " + msg);
  };
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
      if (ch == '\t') {
        fields.push_back(cur);
        cur.clear();
      } else {
        cur += ch;
      }
    }
    fields.push_back(cur);
    if (fields.size() != 4) {
      fail("expected 4 tab-separated fields, got " +
           std::to_string(fields.size()));
    }
    long student = 0, step = 0, exercise = 0, correctness = 0;
    try {
      std::size_t pos = 0;
      student = std::stol(fields[0], &pos);
      if (pos != fields[0].size()) throw std::invalid_argument("");
      step = std::stol(fields[1], &pos);
      if (pos != fields[1].size()) throw std::invalid_argument("");
      exercise = std::stol(fields[2], &pos);
      if (pos != fields[2].size()) throw std::invalid_argument("");
      correctness = std::stol(fields[3], &pos);
      if (pos != fields[3].size()) throw std::invalid_argument("");
    } catch (const std::exception&) {
      fail("non-integer field");
    }
    if (correctness != 0 && correctness != 1) {
      fail("correctness must be 0 or 1, got '" + fields[3] + "'");
    }
    if (exercise < 0 || exercise >= catalog.size()) {
      fail("unknown exercise_id " + std::to_string(exercise) +
           " (catalog has " + std::to_string(catalog.size()) + " exercises)");
    }
    if (by_student.find(student) == by_student.end()) {
      student_order.push_back(student);
    }
    by_student[student].push_back(
        {step, static_cast<int>(exercise), static_cast<int>(correctness)});
  }
  std::vector<InteractionLog> logs;
  logs.reserve(student_order.size());
  for (long sid : student_order) {
    auto& rows = by_student[sid];
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.step < b.step; });
    InteractionLog log;
    for (const Row& r : rows) log.append(r.exercise_id, r.correctness);
    logs.push_back(std::move(log));
  }
  return logs;
}

}  // namespace alpn
