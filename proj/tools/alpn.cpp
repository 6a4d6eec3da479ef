// Command-line front end: train agents, compare variants, evaluate trained
// policies, and generate or validate interaction-log files.

#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "alpn/config.hpp"
#include "alpn/errors.hpp"
#include "alpn/runner.hpp"
#include "alpn/version.hpp"

namespace {

int error_exit(const std::string& tag, const std::string& what) {
  std::cerr << "error: " << tag << ": " << what << std::endl;
  if (tag == "usage") return 2;
  if (tag == "config-invalid") return 3;
  if (tag == "data-malformed") return 4;
  if (tag == "io-error") return 5;
  if (tag == "catalog-mismatch") return 6;
  if (tag == "run-failed") return 7;
  return 1;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<std::string> variant;
};

alpn::ExperimentConfig load_config(const CommonOpts& opts) {
  alpn::ExperimentConfig cfg =
      alpn::ExperimentConfig::from_file(opts.config_path);
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"adaptive learning path navigation experiments"};
  app.set_version_flag("--version", std::string(alpn::kVersion));
  app.require_subcommand(1);

  CommonOpts opts;
  int stop_after = -1;

  auto add_common = [&](CLI::App* sub, bool with_variant = true) {
    sub->add_option("--config", opts.config_path, "experiment config file")
        ->required();
    sub->add_option("--seed", opts.seed, "override the config seed list");
    sub->add_option("--out", opts.out, "override the output directory");
    if (with_variant) {
      sub->add_option("--variant", opts.variant,
                      "override the agent variant (a2c|ppo|eppo)");
    }
  };

  CLI::App* train = app.add_subcommand("train", "train an agent per seed");
  add_common(train);
  train->add_option("--stop-after", stop_after,
                    "stop each seed after N episodes, keeping resume state");

  CLI::App* compare =
      app.add_subcommand("compare", "train/compare several variants");
  std::vector<std::string> compare_configs;
  std::string compare_out = "runs/compare";
  compare
      ->add_option("--config", compare_configs,
                   "config files, one per variant (two or more)")
      ->required()
      ->expected(-2);
  compare->add_option("--out", compare_out, "comparison output directory");

  CLI::App* eval =
      app.add_subcommand("eval", "roll out a trained policy without learning");
  std::string eval_checkpoint;
  std::optional<int> eval_students;
  add_common(eval, /*with_variant=*/false);
  eval->add_option("--checkpoint", eval_checkpoint, "agent checkpoint file")
      ->required();
  eval->add_option("--students", eval_students, "number of evaluated students");

  CLI::App* gen = app.add_subcommand("gen-logs", "generate synthetic logs");
  int gen_students = 100;
  int gen_steps = 50;
  std::string gen_out = "logs.tsv";
  std::uint64_t gen_seed = 1;
  gen->add_option("--config", opts.config_path, "experiment config file")
      ->required();
  gen->add_option("--students", gen_students, "number of simulated students");
  gen->add_option("--steps", gen_steps, "interactions per student");
  gen->add_option("--out", gen_out, "output log file");
  gen->add_option("--seed", gen_seed, "generation seed");

  CLI::App* ingest =
      app.add_subcommand("ingest-check", "validate an interaction-log file");
  std::string ingest_path;
  ingest->add_option("--config", opts.config_path, "experiment config file")
      ->required();
  ingest->add_option("--logs", ingest_path, "log file to validate")
      ->required();

  CLI::App* takt =
      app.add_subcommand("train-akt", "train the knowledge tracer on logs");
  std::string takt_logs;
  std::string takt_out = "akt_checkpoint.txt";
  std::uint64_t takt_seed = 1;
  takt->add_option("--config", opts.config_path, "experiment config file")
      ->required();
  takt->add_option("--logs", takt_logs, "training log file")->required();
  takt->add_option("--out", takt_out, "checkpoint output path");
  takt->add_option("--seed", takt_seed, "training seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help / --version
    std::cerr << "error: usage: " << e.what() << std::endl;
    return 2;
  }

  try {
    if (train->parsed()) {
      alpn::TrainOverrides ov;
      ov.seed = opts.seed;
      ov.out_dir = opts.out;
      ov.variant = opts.variant;
      ov.stop_after = stop_after;
      const alpn::TrainOutcome out = alpn::run_train(load_config(opts), ov);
      std::cout << "train: wrote " << out.seeds.size() << " seed run(s) to "
                << out.out_dir << (out.complete ? "" : " (partial)")
                << std::endl;
    } else if (compare->parsed()) {
      const auto summaries = alpn::run_compare(compare_configs, compare_out);
      for (const alpn::VariantSummary& s : summaries) {
        std::cout << "compare: " << s.variant
                  << " final_apr=" << s.final_apr_mean
                  << " attempts=" << s.attempts_mean
                  << " reward=" << s.reward_mean << " div=" << s.div
                  << std::endl;
      }
      std::cout << "compare: report written to " << compare_out << std::endl;
    } else if (eval->parsed()) {
      alpn::ExperimentConfig cfg = load_config(opts);
      const std::string out_dir = opts.out.value_or(cfg.run.out_dir + "/eval");
      const alpn::EvalOutcome out =
          alpn::run_eval(eval_checkpoint, cfg, out_dir, eval_students,
                         opts.seed);
      std::cout << "eval: " << out.students << " students, div=" << out.div
                << ", report written to " << out_dir << std::endl;
    } else if (gen->parsed()) {
      alpn::run_gen_logs(load_config(opts), gen_students, gen_steps, gen_out,
                         gen_seed);
      std::cout << "gen-logs: wrote " << gen_out << std::endl;
    } else if (ingest->parsed()) {
      const alpn::IngestReport rep =
          alpn::run_ingest_check(load_config(opts), ingest_path);
      std::cout << "ingest-check: ok, " << rep.students << " students, "
                << rep.rows << " rows, lengths " << rep.min_length << ".."
                << rep.max_length << std::endl;
    } else if (takt->parsed()) {
      const std::vector<double> curve =
          alpn::run_train_akt(load_config(opts), takt_logs, takt_out,
                              takt_seed);
      std::cout << "train-akt: loss " << curve.front() << " -> "
                << curve.back() << ", checkpoint written to " << takt_out
                << std::endl;
    }
  } catch (const alpn::Error& e) {
    return error_exit(e.tag(), e.what());
  } catch (const std::exception& e) {
    return error_exit("internal", e.what());
  }
  return 0;
}
