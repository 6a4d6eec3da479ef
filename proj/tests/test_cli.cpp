#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "alpn/config.hpp"
#include "alpn/runner.hpp"
#include "test_util.hpp"

namespace alpn {
namespace {

namespace fs = std::filesystem;

// Small, fast configuration used by the CLI round trips.
std::string tiny_config(const std::string& dir, const std::string& out_dir,
                        const std::string& variant = "eppo",
                        int episodes = 60) {
  nlohmann::json j;
  j["catalog"] = {{"exercises", 8}, {"topics", 4}, {"areas", 2}};
  j["goal"] = {{"beta", 0.8}, {"t_max", 30}};
  j["agent"] = {{"variant", variant}, {"episodes_per_update", 4},
                {"minibatch_size", 64}, {"hidden", 16}};
  j["run"] = {{"episodes", episodes},
              {"seeds", {11}},
              {"out_dir", out_dir},
              {"checkpoint_every", 20},
              {"ma_window", 10}};
  j["eval"] = {{"mode", "sampled"}, {"students", 6}};
  const std::string path = dir + "/config.json";
  std::ofstream out(path);
  out << j.dump(2);
  return path;
}

TEST(Cli, HelpAndVersionSucceed) {
  EXPECT_EQ(test::run_cli("--help").exit_code, 0);
  const auto v = test::run_cli("--version");
  EXPECT_EQ(v.exit_code, 0);
}

TEST(Cli, MissingConfigIsIoError) {
  const auto r = test::run_cli("train --config /does/not/exist.json");
  EXPECT_EQ(r.exit_code, 5);
  EXPECT_NE(r.output.find("io-error"), std::string::npos);
}

TEST(Cli, InvalidConfigNamesFieldAndClass) {
  const std::string dir = test::scratch_dir("cli_badcfg");
  {
    std::ofstream out(dir + "/bad.json");
    out << R"({"agent": {"gama": 0.5}})";
  }
  const auto r = test::run_cli("train --config " + dir + "/bad.json");
  EXPECT_EQ(r.exit_code, 3);
  EXPECT_NE(r.output.find("config-invalid"), std::string::npos);
  EXPECT_NE(r.output.find("agent.gama"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, TrainIsByteDeterministicAcrossRunsAndThreads) {
  const std::string dir = test::scratch_dir("cli_det");
  const std::string cfg = tiny_config(dir, dir + "/run_a");
  ASSERT_EQ(test::run_cli("train --config " + cfg).exit_code, 0);
  ASSERT_EQ(test::run_cli("train --config " + cfg + " --out " + dir + "/run_b")
                .exit_code,
            0);
  const std::string ha = test::read_file(dir + "/run_a/history_seed11.tsv");
  const std::string hb = test::read_file(dir + "/run_b/history_seed11.tsv");
  ASSERT_FALSE(ha.empty());
  EXPECT_EQ(ha, hb);
  EXPECT_EQ(test::read_file(dir + "/run_a/checkpoint_seed11.txt"),
            test::read_file(dir + "/run_b/checkpoint_seed11.txt"));
  fs::remove_all(dir);
}

TEST(Cli, ZeroEpisodesExitZeroWithEmptyHistory) {
  const std::string dir = test::scratch_dir("cli_zero");
  const std::string cfg = tiny_config(dir, dir + "/run", "eppo", 0);
  const auto r = test::run_cli("train --config " + cfg);
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(test::read_file(dir + "/run/history_seed11.tsv"),
            std::string(kHistoryHeader) + "\n");
  fs::remove_all(dir);
}

TEST(Cli, InterruptedTrainResumesToIdenticalArtifacts) {
  const std::string dir = test::scratch_dir("cli_resume");
  const std::string cfg_full = tiny_config(dir, dir + "/full");
  ASSERT_EQ(test::run_cli("train --config " + cfg_full).exit_code, 0);

  // Same config, separate directory: stop mid-run, then continue.
  nlohmann::json j;
  {
    std::ifstream in(cfg_full);
    in >> j;
  }
  j["run"]["out_dir"] = dir + "/resumed";
  const std::string cfg_resumed = dir + "/config_resumed.json";
  {
    std::ofstream out(cfg_resumed);
    out << j.dump(2);
  }
  ASSERT_EQ(
      test::run_cli("train --config " + cfg_resumed + " --stop-after 20")
          .exit_code,
      0);
  ASSERT_TRUE(fs::exists(dir + "/resumed/resume_seed11.txt"));
  ASSERT_EQ(test::run_cli("train --config " + cfg_resumed).exit_code, 0);

  // The histories differ only in the out_dir, which is not part of any row.
  EXPECT_EQ(test::read_file(dir + "/full/history_seed11.tsv"),
            test::read_file(dir + "/resumed/history_seed11.tsv"));
  EXPECT_EQ(test::read_file(dir + "/full/checkpoint_seed11.txt"),
            test::read_file(dir + "/resumed/checkpoint_seed11.txt"));
  fs::remove_all(dir);
}

TEST(Cli, EvalWritesReportsAndChecksCatalog) {
  const std::string dir = test::scratch_dir("cli_eval");
  const std::string cfg = tiny_config(dir, dir + "/run");
  ASSERT_EQ(test::run_cli("train --config " + cfg).exit_code, 0);
  const auto r = test::run_cli("eval --config " + cfg + " --checkpoint " +
                               dir + "/run/checkpoint_seed11.txt --out " +
                               dir + "/eval --students 5");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(dir + "/eval/eval_report.tsv"));
  EXPECT_TRUE(fs::exists(dir + "/eval/eval_paths.tsv"));
  EXPECT_TRUE(fs::exists(dir + "/eval/eval_area_mastery.tsv"));
  EXPECT_TRUE(fs::exists(dir + "/eval/eval_summary.tsv"));

  // Same checkpoint and seed reproduce the same report.
  const auto r2 = test::run_cli("eval --config " + cfg + " --checkpoint " +
                                dir + "/run/checkpoint_seed11.txt --out " +
                                dir + "/eval2 --students 5");
  EXPECT_EQ(r2.exit_code, 0);
  EXPECT_EQ(test::read_file(dir + "/eval/eval_report.tsv"),
            test::read_file(dir + "/eval2/eval_report.tsv"));

  // A mismatched catalog is rejected with the dedicated class.
  nlohmann::json j;
  {
    std::ifstream in(cfg);
    in >> j;
  }
  j["catalog"]["exercises"] = 12;
  j["catalog"]["topics"] = 6;
  const std::string cfg_bad = dir + "/bad_catalog.json";
  {
    std::ofstream out(cfg_bad);
    out << j.dump(2);
  }
  const auto rbad = test::run_cli("eval --config " + cfg_bad +
                                  " --checkpoint " + dir +
                                  "/run/checkpoint_seed11.txt --out " + dir +
                                  "/eval3");
  EXPECT_EQ(rbad.exit_code, 6);
  EXPECT_NE(rbad.output.find("catalog-mismatch"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, GenIngestRoundTripAndValidation) {
  const std::string dir = test::scratch_dir("cli_logs");
  const std::string cfg = tiny_config(dir, dir + "/run");
  const std::string logs = dir + "/logs.tsv";
  ASSERT_EQ(test::run_cli("gen-logs --config " + cfg + " --students 12 " +
                          "--steps 9 --seed 3 --out " + logs)
                .exit_code,
            0);
  const auto ok = test::run_cli("ingest-check --config " + cfg + " --logs " +
                                logs);
  EXPECT_EQ(ok.exit_code, 0);
  EXPECT_NE(ok.output.find("12 students"), std::string::npos);
  EXPECT_NE(ok.output.find("108 rows"), std::string::npos);

  {
    std::ofstream out(logs, std::ios::app);
    out << "3\t9\t2\t7\n";  // correctness outside {0,1}
  }
  const auto bad = test::run_cli("ingest-check --config " + cfg + " --logs " +
                                 logs);
  EXPECT_EQ(bad.exit_code, 4);
  EXPECT_NE(bad.output.find("data-malformed"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, TrainAktProducesLoadableCheckpoint) {
  const std::string dir = test::scratch_dir("cli_akt");
  std::string cfg;
  {
    nlohmann::json j;
    j["catalog"] = {{"exercises", 8}, {"topics", 4}, {"areas", 2}};
    j["akt"] = {{"embed_dim", 4}, {"epochs", 3}, {"batch", 8}};
    j["run"] = {{"out_dir", dir + "/run"}};
    cfg = dir + "/config.json";
    std::ofstream out(cfg);
    out << j.dump(2);
  }
  const std::string logs = dir + "/logs.tsv";
  ASSERT_EQ(test::run_cli("gen-logs --config " + cfg +
                          " --students 20 --steps 8 --seed 2 --out " + logs)
                .exit_code,
            0);
  const std::string ckpt = dir + "/akt.txt";
  const auto r = test::run_cli("train-akt --config " + cfg + " --logs " +
                               logs + " --out " + ckpt + " --seed 4");
  EXPECT_EQ(r.exit_code, 0) << r.output;
  EXPECT_TRUE(fs::exists(ckpt));
  EXPECT_TRUE(fs::exists(dir + "/akt.loss.tsv"));
  const AktLiteModel model = load_akt_checkpoint(ckpt);
  EXPECT_EQ(model.exercise_count(), 8);

  // The trained tracer can back the environment end to end.
  nlohmann::json j;
  {
    std::ifstream in(cfg);
    in >> j;
  }
  j["environment"] = {{"backing", "akt"},
                      {"akt_checkpoint", ckpt},
                      {"seed_history_length", 5}};
  j["goal"] = {{"beta", 0.8}, {"t_max", 15}};
  j["agent"] = {{"variant", "eppo"}, {"episodes_per_update", 4},
                {"hidden", 8}};
  j["run"] = {{"episodes", 8}, {"seeds", {1}}, {"out_dir", dir + "/akt_run"}};
  const std::string cfg_env = dir + "/config_env.json";
  {
    std::ofstream out(cfg_env);
    out << j.dump(2);
  }
  const auto rt = test::run_cli("train --config " + cfg_env);
  EXPECT_EQ(rt.exit_code, 0) << rt.output;
  EXPECT_TRUE(fs::exists(dir + "/akt_run/history_seed1.tsv"));
  fs::remove_all(dir);
}

TEST(Cli, CompareAgainstItselfShowsNoDifferences) {
  const std::string dir = test::scratch_dir("cli_cmp");
  const std::string cfg_a = tiny_config(dir, dir + "/runA", "eppo", 40);
  // Same settings, different directory: summaries must coincide.
  nlohmann::json j;
  {
    std::ifstream in(cfg_a);
    in >> j;
  }
  j["run"]["out_dir"] = dir + "/runB";
  const std::string cfg_b = dir + "/config_b.json";
  {
    std::ofstream out(cfg_b);
    out << j.dump(2);
  }
  const auto summaries =
      run_compare({cfg_a, cfg_b}, dir + "/cmp");
  ASSERT_EQ(summaries.size(), 2u);
  EXPECT_DOUBLE_EQ(summaries[0].final_apr_mean, summaries[1].final_apr_mean);
  EXPECT_DOUBLE_EQ(summaries[0].attempts_mean, summaries[1].attempts_mean);
  EXPECT_DOUBLE_EQ(summaries[0].reward_mean, summaries[1].reward_mean);
  EXPECT_DOUBLE_EQ(summaries[0].div, summaries[1].div);
  EXPECT_TRUE(fs::exists(dir + "/cmp/compare_summary.tsv"));
  EXPECT_TRUE(fs::exists(dir + "/cmp/compare_curves.tsv"));

  // Mismatched catalogs are rejected.
  j["catalog"]["exercises"] = 10;
  j["catalog"]["topics"] = 5;
  const std::string cfg_bad = dir + "/config_bad.json";
  {
    std::ofstream out(cfg_bad);
    out << j.dump(2);
  }
  EXPECT_THROW(run_compare({cfg_a, cfg_bad}, dir + "/cmp2"),
               CatalogMismatchError);
  fs::remove_all(dir);
}

}  // namespace
}  // namespace alpn
