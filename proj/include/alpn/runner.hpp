#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "alpn/agent.hpp"
#include "alpn/akt.hpp"
#include "alpn/checkpoint.hpp"
#include "alpn/config.hpp"
#include "alpn/env.hpp"
#include "alpn/errors.hpp"
#include "alpn/logs_io.hpp"
#include "alpn/metrics.hpp"
#include "alpn/version.hpp"

namespace alpn {

namespace fs = std::filesystem;

// ---------------------------------------------------------------------------
// Environment construction
// ---------------------------------------------------------------------------

inline Environment build_environment(const ExperimentConfig& cfg) {
  auto catalog = std::make_shared<const ExerciseCatalog>(cfg.catalog.build());
  EnvConfig env;
  env.analytic = cfg.environment.analytic;
  env.seed_history_length = cfg.environment.seed_history_length;
  env.d_floor = cfg.environment.d_floor;
  if (cfg.environment.backing == "akt") {
    env.backing = EnvBacking::kAkt;
    env.akt = std::make_shared<const AktLiteModel>(
        load_akt_checkpoint(cfg.environment.akt_checkpoint));
  }
  return Environment(std::move(catalog), std::move(env), cfg.goal);
}

// ---------------------------------------------------------------------------
// History and curve files
// ---------------------------------------------------------------------------

inline constexpr const char* kHistoryHeader =
    "episode\tseed\tvariant\tfinal_apr\tpath_length\tcumulative_reward";

inline void write_history_row(std::ostream& out, const EpisodeRecord& r) {
  out << r.episode << '\t' << r.seed << '\t' << variant_name(r.variant) << '\t'
      << fmt_double(r.final_apr) << '\t' << r.path_length << '\t'
      << fmt_double(r.cumulative_reward) << '\n';
}

inline std::vector<EpisodeRecord> read_history(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("history: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) {
    throw DataError("history: '" + path + "' has an unexpected header");
  }
  std::vector<EpisodeRecord> out;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream ls(line);
    EpisodeRecord r;
    std::string variant;
    if (!(ls >> r.episode >> r.seed >> variant >> r.final_apr >>
          r.path_length >> r.cumulative_reward)) {
      throw DataError("history: line " + std::to_string(line_no) +
                      ": malformed row");
    }
    r.variant = variant_from_name(variant);
    out.push_back(std::move(r));
  }
  return out;
}

inline void write_curves(const std::string& path,
                         const std::vector<EpisodeRecord>& history,
                         int ma_window) {
  std::ofstream out(path);
  if (!out) throw IoError("curves: cannot write '" + path + "'");
  out << "episode\tfinal_apr\tma_final_apr\tpath_length\tma_path_length"
         "\tcumulative_reward\tma_cumulative_reward\n";
  if (history.empty()) return;
  const TrainingCurves c = training_curves(history, ma_window);
  for (std::size_t i = 0; i < history.size(); ++i) {
    out << history[i].episode << '\t' << fmt_double(c.final_apr[i]) << '\t'
        << fmt_double(c.ma_final_apr[i]) << '\t'
        << fmt_double(c.path_length[i]) << '\t'
        << fmt_double(c.ma_path_length[i]) << '\t'
        << fmt_double(c.cumulative_reward[i]) << '\t'
        << fmt_double(c.ma_cumulative_reward[i]) << '\n';
  }
}

inline constexpr const char* kTrajectoryHeader =
    "episode\tt\taction\tcorrectness\treward\tapr\tlg\td\tlambda\tn_action"
    "\tpenalty_applied";

inline void write_trace_rows(std::ostream& out, const EpisodeRecord& r) {
  for (const StepTrace& s : r.trace) {
    out << r.episode << '\t' << s.t << '\t' << s.action << '\t'
        << s.correctness << '\t' << fmt_double(s.reward) << '\t'
        << fmt_double(s.apr) << '\t' << fmt_double(s.lg) << '\t'
        << fmt_double(s.d) << '\t' << fmt_double(s.lambda) << '\t'
        << s.n_action << '\t' << (s.penalty_applied ? 1 : 0) << '\n';
  }
}

// ---------------------------------------------------------------------------
// cmd: train
// ---------------------------------------------------------------------------

struct TrainOverrides {
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out_dir;
  std::optional<std::string> variant;
  // Stops each seed's run after this many episodes (resume state is kept);
  // negative means run to completion.
  int stop_after = -1;
};

struct SeedArtifacts {
  std::uint64_t seed = 0;
  std::string history_path;
  std::string curves_path;
  std::string checkpoint_path;
  std::string resume_path;
  std::string trajectories_path;
  bool complete = false;
};

struct TrainOutcome {
  std::string out_dir;
  std::vector<SeedArtifacts> seeds;
  bool complete = false;
};

namespace detail {

// Keeps the first `keep` data rows of an existing history file, dropping any
// partially written tail from an interrupted run.
inline std::vector<std::string> salvage_history_rows(const std::string& path,
                                                     int keep) {
  std::vector<std::string> rows;
  std::ifstream in(path);
  if (!in) return rows;
  std::string line;
  if (!std::getline(in, line) || line != kHistoryHeader) return rows;
  while (static_cast<int>(rows.size()) < keep && std::getline(in, line)) {
    if (!line.empty()) rows.push_back(line);
  }
  return rows;
}

}  // namespace detail

inline TrainOutcome run_train(ExperimentConfig cfg,
                              const TrainOverrides& overrides = {}) {
  if (overrides.seed) cfg.run.seeds = {*overrides.seed};
  if (overrides.out_dir) cfg.run.out_dir = *overrides.out_dir;
  if (overrides.variant) cfg.variant = variant_from_name(*overrides.variant);
  cfg.validate();

  const Environment env = build_environment(cfg);
  const std::string hash = cfg.hash();
  TrainOutcome outcome;
  outcome.out_dir = cfg.run.out_dir;
  std::error_code ec;
  fs::create_directories(cfg.run.out_dir, ec);
  if (ec) {
    throw IoError("train: cannot create output directory '" + cfg.run.out_dir +
                  "'");
  }

  const int target = overrides.stop_after >= 0
                         ? std::min(cfg.run.episodes, overrides.stop_after)
                         : cfg.run.episodes;

  for (std::uint64_t seed : cfg.run.seeds) {
    SeedArtifacts art;
    art.seed = seed;
    const std::string stem = cfg.run.out_dir + "/";
    const std::string tag = "_seed" + std::to_string(seed);
    art.history_path = stem + "history" + tag + ".tsv";
    art.curves_path = stem + "curves" + tag + ".tsv";
    art.checkpoint_path = stem + "checkpoint" + tag + ".txt";
    art.resume_path = stem + "resume" + tag + ".txt";
    if (cfg.run.export_trajectories) {
      art.trajectories_path = stem + "trajectories" + tag + ".tsv";
    }

    Trainer trainer(&env, cfg.variant, cfg.agent, seed);
    int start_episode = 0;
    if (fs::exists(art.resume_path)) {
      try {
        start_episode = load_resume_checkpoint(art.resume_path, trainer, hash);
      } catch (const Error&) {
        // Stale or foreign resume state: start over.
        start_episode = 0;
        trainer = Trainer(&env, cfg.variant, cfg.agent, seed);
      }
    }
    if (start_episode > target) {
      // The resume state is ahead of the requested stop point; rerun fresh so
      // the produced files are exactly the requested prefix.
      start_episode = 0;
      trainer = Trainer(&env, cfg.variant, cfg.agent, seed);
    }

    std::vector<std::string> kept;
    if (start_episode > 0) {
      kept = detail::salvage_history_rows(art.history_path, start_episode);
      if (static_cast<int>(kept.size()) < start_episode) {
        // History lost; replay from scratch rather than emit a gap.
        kept.clear();
        start_episode = 0;
        trainer = Trainer(&env, cfg.variant, cfg.agent, seed);
      }
    }

    std::ofstream history(art.history_path);
    if (!history) {
      throw IoError("train: cannot write '" + art.history_path + "'");
    }
    history << kHistoryHeader << '\n';
    for (const std::string& row : kept) history << row << '\n';
    history.flush();

    std::ofstream traj;
    if (cfg.run.export_trajectories) {
      traj.open(art.trajectories_path);
      if (!traj) {
        throw IoError("train: cannot write '" + art.trajectories_path + "'");
      }
      traj << kTrajectoryHeader << '\n';
    }

    std::size_t written = 0;
    const int checkpoint_every = cfg.run.checkpoint_every;
    auto on_window = [&](Trainer& t) {
      for (; written < t.history().size(); ++written) {
        write_history_row(history, t.history()[written]);
        if (cfg.run.export_trajectories) {
          write_trace_rows(traj, t.history()[written]);
        }
      }
      history.flush();
      if (cfg.run.export_trajectories) traj.flush();
      const int done = start_episode + t.episodes_done();
      if (done % checkpoint_every < cfg.agent.episodes_per_update ||
          done >= target) {
        save_resume_checkpoint(art.resume_path, t, hash);
      }
    };

    try {
      // The trainer counts episodes from zero within this process; offset the
      // per-episode rng streams by fast-forwarding its counter when resuming.
      trainer.restore_progress(start_episode, trainer.update_count());
      trainer.run_until(target, cfg.run.rollout_threads,
                        cfg.run.export_trajectories, on_window);
    } catch (const NumericsError& e) {
      // Leave the last resume checkpoint on disk for diagnosis.
      save_agent_checkpoint(art.checkpoint_path, trainer.net());
      throw NumericsError(std::string(e.what()) + " (seed " +
                          std::to_string(seed) + "; last checkpoint kept at '" +
                          art.checkpoint_path + "')");
    }

    // Rebuild curve files from the on-disk history so resumed runs cover the
    // full episode range.
    save_agent_checkpoint(art.checkpoint_path, trainer.net());
    save_resume_checkpoint(art.resume_path, trainer, hash);
    history.flush();
    write_curves(art.curves_path, read_history(art.history_path),
                 cfg.run.ma_window);
    art.complete = start_episode + trainer.episodes_done() >= cfg.run.episodes;
    outcome.seeds.push_back(art);
  }

  outcome.complete = true;
  for (const SeedArtifacts& a : outcome.seeds) {
    outcome.complete = outcome.complete && a.complete;
  }

  nlohmann::json manifest;
  manifest["version"] = kVersion;
  manifest["config_hash"] = hash;
  manifest["config"] = cfg.to_json();
  manifest["complete"] = outcome.complete;
  std::vector<std::string> files;
  for (const SeedArtifacts& a : outcome.seeds) {
    files.push_back(fs::path(a.history_path).filename().string());
    files.push_back(fs::path(a.curves_path).filename().string());
    files.push_back(fs::path(a.checkpoint_path).filename().string());
    if (!a.trajectories_path.empty()) {
      files.push_back(fs::path(a.trajectories_path).filename().string());
    }
  }
  manifest["files"] = files;
  std::ofstream mf(cfg.run.out_dir + "/manifest.json");
  if (!mf) throw IoError("train: cannot write manifest");
  mf << manifest.dump(2) << '\n';
  return outcome;
}

// ---------------------------------------------------------------------------
// cmd: eval
// ---------------------------------------------------------------------------

struct EvalStudent {
  int student = 0;
  double initial_apr = 0.0;
  double final_apr = 0.0;
  int path_length = 0;
  double cumulative_reward = 0.0;
  bool truncated = false;
};

struct EvalOutcome {
  double div = 0.0;
  int students = 0;
  std::vector<EvalStudent> rows;
  std::vector<LearningPath> paths;
};

inline EvalOutcome evaluate_policy(const Environment& env,
                                   const ActorCriticNet& net, int students,
                                   bool greedy, std::uint64_t seed,
                                   std::vector<RolloutResult>* rollouts_out =
                                       nullptr) {
  EvalOutcome out;
  out.students = students;
  for (int i = 0; i < students; ++i) {
    RolloutOptions opt;
    opt.greedy = greedy;
    opt.record_trace = true;
    opt.record_states = true;
    RngStream rng(seed, streams::kEval + static_cast<std::uint64_t>(i));
    RolloutResult r = run_episode(env, net, std::move(rng), opt);
    EvalStudent row{i,           r.initial_apr,       r.final_apr,
                    r.length,    r.cumulative_reward, r.truncated};
    out.rows.push_back(row);
    if (!r.actions.empty()) out.paths.push_back(LearningPath{r.actions});
    if (rollouts_out != nullptr) rollouts_out->push_back(std::move(r));
  }
  out.div = out.paths.size() >= 2 ? div_metric(out.paths) : 0.0;
  return out;
}

inline EvalOutcome run_eval(const std::string& checkpoint_path,
                            const ExperimentConfig& cfg,
                            const std::string& out_dir,
                            std::optional<int> students_override = {},
                            std::optional<std::uint64_t> seed_override = {}) {
  const Environment env = build_environment(cfg);
  const ActorCriticNet net = load_agent_checkpoint(checkpoint_path);
  if (net.action_count() != env.catalog().size()) {
    throw CatalogMismatchError(
        "eval: checkpoint covers " + std::to_string(net.action_count()) +
        " exercises but the catalog has " +
        std::to_string(env.catalog().size()));
  }
  const int students = students_override.value_or(cfg.eval.students);
  const bool greedy = cfg.eval.mode == "greedy";
  const std::uint64_t seed = seed_override.value_or(cfg.run.seeds.front());

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("eval: cannot create output directory '" + out_dir + "'");

  std::vector<RolloutResult> rollouts;
  EvalOutcome out = evaluate_policy(env, net, students, greedy, seed, &rollouts);

  std::ofstream report(out_dir + "/eval_report.tsv");
  if (!report) throw IoError("eval: cannot write report");
  report << "student\tinitial_apr\tfinal_apr\tpath_length\tcumulative_reward"
            "\ttruncated\n";
  for (const EvalStudent& r : out.rows) {
    report << r.student << '\t' << fmt_double(r.initial_apr) << '\t'
           << fmt_double(r.final_apr) << '\t' << r.path_length << '\t'
           << fmt_double(r.cumulative_reward) << '\t' << (r.truncated ? 1 : 0)
           << '\n';
  }

  std::ofstream paths(out_dir + "/eval_paths.tsv");
  if (!paths) throw IoError("eval: cannot write paths");
  paths << "student\tt\taction\tcorrectness\treward\tapr\tlg\td\tlambda"
           "\tn_action\tpenalty_applied\n";
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    for (const StepTrace& s : rollouts[i].trace) {
      paths << i << '\t' << s.t << '\t' << s.action << '\t' << s.correctness
            << '\t' << fmt_double(s.reward) << '\t' << fmt_double(s.apr)
            << '\t' << fmt_double(s.lg) << '\t' << fmt_double(s.d) << '\t'
            << fmt_double(s.lambda) << '\t' << s.n_action << '\t'
            << (s.penalty_applied ? 1 : 0) << '\n';
    }
  }

  std::ofstream areas(out_dir + "/eval_area_mastery.tsv");
  if (!areas) throw IoError("eval: cannot write area mastery");
  areas << "student\tarea\tt\tmean_state\n";
  for (std::size_t i = 0; i < rollouts.size(); ++i) {
    if (rollouts[i].states.empty()) continue;
    const Matrix m = area_mastery_matrix(rollouts[i].states, env.catalog());
    for (Eigen::Index a = 0; a < m.rows(); ++a) {
      for (Eigen::Index t = 0; t < m.cols(); ++t) {
        areas << i << '\t' << a << '\t' << t << '\t' << fmt_double(m(a, t))
              << '\n';
      }
    }
  }

  std::ofstream summary(out_dir + "/eval_summary.tsv");
  if (!summary) throw IoError("eval: cannot write summary");
  double mean_final = 0.0, mean_len = 0.0, mean_reward = 0.0;
  for (const EvalStudent& r : out.rows) {
    mean_final += r.final_apr;
    mean_len += r.path_length;
    mean_reward += r.cumulative_reward;
  }
  const double n = std::max<double>(1.0, static_cast<double>(out.rows.size()));
  summary << "metric\tvalue\n";
  summary << "students\t" << out.rows.size() << '\n';
  summary << "div\t" << fmt_double(out.div) << '\n';
  summary << "mean_final_apr\t" << fmt_double(mean_final / n) << '\n';
  summary << "mean_path_length\t" << fmt_double(mean_len / n) << '\n';
  summary << "mean_cumulative_reward\t" << fmt_double(mean_reward / n) << '\n';
  return out;
}

// ---------------------------------------------------------------------------
// cmd: compare
// ---------------------------------------------------------------------------

struct VariantSummary {
  std::string variant;
  std::string out_dir;
  struct PerSeed {
    std::uint64_t seed = 0;
    double final_apr = 0.0;
    double attempts = 0.0;
    double reward = 0.0;
  };
  std::vector<PerSeed> per_seed;
  double final_apr_mean = 0.0, final_apr_std = 0.0;
  double attempts_mean = 0.0, attempts_std = 0.0;
  double reward_mean = 0.0, reward_std = 0.0;
  double div = 0.0;
};

namespace detail {

inline std::pair<double, double> mean_std(const std::vector<double>& xs) {
  if (xs.empty()) return {0.0, 0.0};
  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(xs.size());
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  var /= static_cast<double>(xs.size());
  return {mean, std::sqrt(var)};
}

// Mean over the trailing `window` episodes of a per-episode series.
inline double tail_mean(const std::vector<double>& xs, std::size_t window) {
  if (xs.empty()) return 0.0;
  const std::size_t n = std::min(window, xs.size());
  double acc = 0.0;
  for (std::size_t i = xs.size() - n; i < xs.size(); ++i) acc += xs[i];
  return acc / static_cast<double>(n);
}

}  // namespace detail

// The window over which "final" training statistics are aggregated.
inline constexpr std::size_t kFinalWindow = 100;

inline std::vector<VariantSummary> run_compare(
    const std::vector<std::string>& config_paths, const std::string& out_dir) {
  if (config_paths.size() < 2) {
    throw ConfigError("compare: at least two configurations are required");
  }
  std::vector<ExperimentConfig> configs;
  for (const std::string& p : config_paths) {
    configs.push_back(ExperimentConfig::from_file(p));
  }
  for (std::size_t i = 1; i < configs.size(); ++i) {
    const CatalogConfig& a = configs[0].catalog;
    const CatalogConfig& b = configs[i].catalog;
    if (a.file != b.file || a.exercises != b.exercises ||
        a.topics != b.topics || a.areas != b.areas) {
      throw CatalogMismatchError(
          "compare: '" + config_paths[i] +
          "' uses a different catalog than '" + config_paths[0] + "'");
    }
  }

  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) {
    throw IoError("compare: cannot create output directory '" + out_dir + "'");
  }

  std::vector<VariantSummary> summaries;
  std::vector<std::vector<std::vector<EpisodeRecord>>> histories;  // [cfg][seed]
  for (const ExperimentConfig& cfg : configs) {
    // Reuse completed runs; train otherwise.
    bool have = fs::exists(cfg.run.out_dir + "/manifest.json");
    if (have) {
      try {
        std::ifstream mf(cfg.run.out_dir + "/manifest.json");
        nlohmann::json m;
        mf >> m;
        have = m.value("complete", false) &&
               m.value("config_hash", "") == cfg.hash();
      } catch (...) {
        have = false;
      }
    }
    if (!have) run_train(cfg);

    VariantSummary s;
    s.variant = variant_name(cfg.variant);
    s.out_dir = cfg.run.out_dir;
    std::vector<double> aprs, lens, rewards;
    std::vector<std::vector<EpisodeRecord>> seed_histories;
    for (std::uint64_t seed : cfg.run.seeds) {
      const std::string path =
          cfg.run.out_dir + "/history_seed" + std::to_string(seed) + ".tsv";
      std::vector<EpisodeRecord> h = read_history(path);
      std::vector<double> apr_series, len_series, reward_series;
      for (const EpisodeRecord& r : h) {
        apr_series.push_back(r.final_apr);
        len_series.push_back(static_cast<double>(r.path_length));
        reward_series.push_back(r.cumulative_reward);
      }
      VariantSummary::PerSeed ps;
      ps.seed = seed;
      ps.final_apr = detail::tail_mean(apr_series, kFinalWindow);
      ps.attempts = detail::tail_mean(len_series, kFinalWindow);
      ps.reward = detail::tail_mean(reward_series, kFinalWindow);
      s.per_seed.push_back(ps);
      aprs.push_back(ps.final_apr);
      lens.push_back(ps.attempts);
      rewards.push_back(ps.reward);
      seed_histories.push_back(std::move(h));
    }
    std::tie(s.final_apr_mean, s.final_apr_std) = detail::mean_std(aprs);
    std::tie(s.attempts_mean, s.attempts_std) = detail::mean_std(lens);
    std::tie(s.reward_mean, s.reward_std) = detail::mean_std(rewards);

    // Path diversity from fresh evaluation rollouts of the first seed's
    // trained policy.
    const std::string ckpt = cfg.run.out_dir + "/checkpoint_seed" +
                             std::to_string(cfg.run.seeds.front()) + ".txt";
    const Environment env = build_environment(cfg);
    const ActorCriticNet net = load_agent_checkpoint(ckpt);
    const EvalOutcome ev =
        evaluate_policy(env, net, cfg.eval.students, cfg.eval.mode == "greedy",
                        cfg.run.seeds.front());
    s.div = ev.div;
    summaries.push_back(std::move(s));
    histories.push_back(std::move(seed_histories));
  }

  std::ofstream summary(out_dir + "/compare_summary.tsv");
  if (!summary) throw IoError("compare: cannot write summary");
  summary << "variant\tseed\tfinal_apr\tattempts\tcumulative_reward\tdiv\n";
  for (const VariantSummary& s : summaries) {
    for (const auto& ps : s.per_seed) {
      summary << s.variant << '\t' << ps.seed << '\t'
              << fmt_double(ps.final_apr) << '\t' << fmt_double(ps.attempts)
              << '\t' << fmt_double(ps.reward) << '\t' << "" << '\n';
    }
    summary << s.variant << "\tmean\t" << fmt_double(s.final_apr_mean) << '\t'
            << fmt_double(s.attempts_mean) << '\t'
            << fmt_double(s.reward_mean) << '\t' << fmt_double(s.div) << '\n';
    summary << s.variant << "\tstddev\t" << fmt_double(s.final_apr_std) << '\t'
            << fmt_double(s.attempts_std) << '\t' << fmt_double(s.reward_std)
            << '\t' << "" << '\n';
  }

  // Aligned per-episode curves: per-variant mean over seeds, trailing moving
  // average window 50.
  std::size_t max_eps = 0;
  for (const auto& seed_histories : histories) {
    for (const auto& h : seed_histories) max_eps = std::max(max_eps, h.size());
  }
  std::ofstream curves(out_dir + "/compare_curves.tsv");
  if (!curves) throw IoError("compare: cannot write curves");
  curves << "episode";
  for (const VariantSummary& s : summaries) {
    curves << '\t' << s.variant << "_final_apr_ma" << '\t' << s.variant
           << "_attempts_ma" << '\t' << s.variant << "_reward_ma";
  }
  curves << '\n';
  std::vector<std::vector<std::vector<double>>> ma(histories.size());
  for (std::size_t v = 0; v < histories.size(); ++v) {
    std::vector<double> apr(max_eps, 0.0), len(max_eps, 0.0), rew(max_eps, 0.0);
    std::vector<double> denom(max_eps, 0.0);
    for (const auto& h : histories[v]) {
      for (std::size_t i = 0; i < h.size(); ++i) {
        apr[i] += h[i].final_apr;
        len[i] += h[i].path_length;
        rew[i] += h[i].cumulative_reward;
        denom[i] += 1.0;
      }
    }
    for (std::size_t i = 0; i < max_eps; ++i) {
      const double d = denom[i] > 0 ? denom[i] : 1.0;
      apr[i] /= d;
      len[i] /= d;
      rew[i] /= d;
    }
    ma[v] = {moving_average(apr, 50), moving_average(len, 50),
             moving_average(rew, 50)};
  }
  for (std::size_t i = 0; i < max_eps; ++i) {
    curves << i;
    for (std::size_t v = 0; v < histories.size(); ++v) {
      curves << '\t' << fmt_double(ma[v][0][i]) << '\t'
             << fmt_double(ma[v][1][i]) << '\t' << fmt_double(ma[v][2][i]);
    }
    curves << '\n';
  }
  return summaries;
}

// ---------------------------------------------------------------------------
// cmd: gen-logs / ingest-check / train-akt
// ---------------------------------------------------------------------------

inline void run_gen_logs(const ExperimentConfig& cfg, int students, int steps,
                         const std::string& out_path, std::uint64_t seed) {
  if (cfg.environment.backing != "analytic") {
    throw ConfigError("gen-logs: requires the analytic environment backing");
  }
  if (students < 0 || steps < 0) {
    throw ConfigError("gen-logs: students and steps must be >= 0");
  }
  const ExerciseCatalog catalog = cfg.catalog.build();
  const std::vector<InteractionLog> logs = generate_student_logs(
      catalog, cfg.environment.analytic, students, steps, seed);
  write_logs(out_path, logs);
}

struct IngestReport {
  std::size_t students = 0;
  std::size_t rows = 0;
  std::size_t min_length = 0;
  std::size_t max_length = 0;
};

inline IngestReport run_ingest_check(const ExperimentConfig& cfg,
                                     const std::string& path) {
  const ExerciseCatalog catalog = cfg.catalog.build();
  const std::vector<InteractionLog> logs = ingest_logs(path, catalog);
  IngestReport rep;
  rep.students = logs.size();
  for (const InteractionLog& log : logs) {
    rep.rows += log.size();
    rep.min_length = rep.min_length == 0
                         ? log.size()
                         : std::min(rep.min_length, log.size());
    rep.max_length = std::max(rep.max_length, log.size());
  }
  return rep;
}

inline std::vector<double> run_train_akt(const ExperimentConfig& cfg,
                                         const std::string& logs_path,
                                         const std::string& out_checkpoint,
                                         std::uint64_t seed) {
  const ExerciseCatalog catalog = cfg.catalog.build();
  const std::vector<InteractionLog> logs = ingest_logs(logs_path, catalog);
  if (logs.empty()) {
    throw DataError("train-akt: '" + logs_path + "' contains no interactions");
  }
  RngStream init(seed, streams::kNetInit);
  AktLiteModel model(catalog.size(), cfg.akt.embed_dim, init, cfg.akt.window);
  const std::vector<double> curve = train_akt(model, logs, cfg.akt.hyper, seed);
  save_akt_checkpoint(out_checkpoint, model);
  const std::string curve_path =
      fs::path(out_checkpoint).replace_extension(".loss.tsv").string();
  std::ofstream out(curve_path);
  if (!out) throw IoError("train-akt: cannot write '" + curve_path + "'");
  out << "epoch\tloss\n";
  for (std::size_t i = 0; i < curve.size(); ++i) {
    out << i << '\t' << fmt_double(curve[i]) << '\n';
  }
  return curve;
}

}  // namespace alpn
