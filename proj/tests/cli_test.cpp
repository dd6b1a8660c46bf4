#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "mixattack/io.hpp"

#ifndef MIXATTACK_CLI_PATH
#error "MIXATTACK_CLI_PATH must point at the CLI binary"
#endif

namespace {

namespace fs = std::filesystem;

struct RunResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr combined
};

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("mixattack_cli_" + std::to_string(::getpid()));
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string path(const std::string& name) { return (dir_ / name).string(); }

  RunResult run(const std::string& args) {
    std::string out_file = path("cmd_output.txt");
    std::string cmd = std::string(MIXATTACK_CLI_PATH) + " " + args + " > " +
                      out_file + " 2>&1";
    int status = std::system(cmd.c_str());
    RunResult res;
    res.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    std::ifstream in(out_file);
    std::stringstream ss;
    ss << in.rdbuf();
    res.output = ss.str();
    return res;
  }

  std::string slurp(const std::string& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  fs::path dir_;
};

TEST_F(CliTest, HelpExitsZero) {
  EXPECT_EQ(run("--help").exit_code, 0);
  EXPECT_EQ(run("attack --help").exit_code, 0);
}

TEST_F(CliTest, MissingSubcommandOrUnknownFlagExitsTwo) {
  EXPECT_EQ(run("").exit_code, 2);
  EXPECT_EQ(run("attack --no-such-flag").exit_code, 2);
}

TEST_F(CliTest, GenAttackOracleRoundTrip) {
  RunResult gen = run("gen --kind angle --r 0.9 --theta 0.5 --out " +
                      path("inst.json"));
  ASSERT_EQ(gen.exit_code, 0) << gen.output;
  ASSERT_TRUE(fs::exists(path("inst.json")));

  RunResult atk =
      run("attack --in " + path("inst.json") + " --attack lca --eps 1.0");
  ASSERT_EQ(atk.exit_code, 0) << atk.output;
  EXPECT_NE(atk.output.find("attack=lca"), std::string::npos);
  EXPECT_NE(atk.output.find("score=1"), std::string::npos);
  EXPECT_NE(atk.output.find("fooled={0,1}"), std::string::npos);

  RunResult orc = run("oracle --in " + path("inst.json") + " --eps 1.0 --out " +
                      path("report.json"));
  ASSERT_EQ(orc.exit_code, 0) << orc.output;
  EXPECT_NE(orc.output.find("optimal_score=1"), std::string::npos);
  ASSERT_TRUE(fs::exists(path("report.json")));
  auto report = nlohmann::json::parse(slurp(path("report.json")));
  EXPECT_EQ(report["m"], 2);
  EXPECT_EQ(report["oracle_grade"], true);
  EXPECT_DOUBLE_EQ(report["optimal_score"].get<double>(), 1.0);
}

TEST_F(CliTest, AttackAcceptsPgdOverridesAndWritesCsv) {
  ASSERT_EQ(run("gen --kind random --d 4 --m 2 --seed 3 --out " +
                path("rand.json"))
                .exit_code,
            0);
  RunResult atk = run("attack --in " + path("rand.json") +
                      " --attack apgd --eps 0.5 --steps 20 --restarts 2 " +
                      "--momentum 0.5 --csv " + path("row.csv"));
  ASSERT_EQ(atk.exit_code, 0) << atk.output;
  ASSERT_TRUE(fs::exists(path("row.csv")));
  std::string csv = mixattack::strip_timestamp_lines(slurp(path("row.csv")));
  EXPECT_NE(csv.find("attack"), std::string::npos);
  EXPECT_NE(csv.find("apgd"), std::string::npos);
}

TEST_F(CliTest, MulticlassInstanceUpgradesLcaAutomatically) {
  // Hand-written two-class softmax instance equivalent to a vulnerable
  // linear classifier; plain "lca" must transparently run the multiclass
  // variant instead of failing.
  std::ofstream f(path("mc.json"));
  f << R"({"kind":"softmax_linear","d":2,"k":2,
          "classifiers":[{"W":[[0.5,0.0],[-0.5,0.0]],"c":[-0.25,0.25]}],
          "weights":[1.0],
          "point":{"x":[0.0,0.0],"y":1}})";
  f.close();
  RunResult atk =
      run("attack --in " + path("mc.json") + " --attack lca --eps 0.8");
  ASSERT_EQ(atk.exit_code, 0) << atk.output;
  EXPECT_NE(atk.output.find("attack=lca_multiclass"), std::string::npos);
  EXPECT_NE(atk.output.find("score=1"), std::string::npos);
}

TEST_F(CliTest, BadInputsExitTwo) {
  EXPECT_EQ(run("attack --in " + path("nope.json") + " --attack lca --eps 1")
                .exit_code,
            2);
  ASSERT_EQ(run("gen --kind angle --r 0.9 --theta 0.5 --out " +
                path("inst.json"))
                .exit_code,
            0);
  EXPECT_EQ(run("attack --in " + path("inst.json") +
                " --attack sorcery --eps 1")
                .exit_code,
            2);
  EXPECT_EQ(run("attack --in " + path("inst.json") + " --attack lca --eps -1")
                .exit_code,
            2);
  EXPECT_EQ(run("gen --kind angle --r 0.9 --theta 9.0 --out " +
                path("bad.json"))
                .exit_code,
            2);
}

TEST_F(CliTest, OracleSizeCapExitsThree) {
  ASSERT_EQ(run("gen --kind random --d 2 --m 20 --seed 1 --out " +
                path("big.json"))
                .exit_code,
            0);
  RunResult orc = run("oracle --in " + path("big.json") + " --eps 0.5");
  EXPECT_EQ(orc.exit_code, 3);
  RunResult orc2 =
      run("oracle --in " + path("big.json") + " --eps 0.5 --max-m 4");
  EXPECT_EQ(orc2.exit_code, 3);
}

TEST_F(CliTest, SweepAngleWritesDeterministicCsv) {
  std::string base = " sweep-angle --r 0.9 --eps 1.0 --points 5 "
                     "--attacks lca,arc --seed 11 --workers 1 --out ";
  ASSERT_EQ(run(base + path("sweep1.csv")).exit_code, 0);
  ASSERT_EQ(run(base + path("sweep2.csv")).exit_code, 0);
  std::string a = mixattack::strip_timestamp_lines(slurp(path("sweep1.csv")));
  std::string b = mixattack::strip_timestamp_lines(slurp(path("sweep2.csv")));
  EXPECT_EQ(a, b);
  EXPECT_NE(a.find("theta,attack,score"), std::string::npos);
  EXPECT_NE(a.find("# theta_star="), std::string::npos);
  // 5 grid points x 2 attacks = 10 data rows.
  int data_rows = 0;
  std::istringstream lines(a);
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty() && line[0] != '#' && line.find("theta,") != 0)
      ++data_rows;
  EXPECT_EQ(data_rows, 10);
}

TEST_F(CliTest, BenchRandomWritesAggregatesAndReplayableRaw) {
  std::string cmd = "bench-random --d 2 --ms 1,2 --trials 2 --eps 1.0 "
                    "--attacks lca,arc --seed 5 --workers 1 --out " +
                    path("agg.csv") + " --raw-out " + path("raw.csv");
  RunResult bench = run(cmd);
  ASSERT_EQ(bench.exit_code, 0) << bench.output;
  EXPECT_NE(bench.output.find("m=1 attack=arc"), std::string::npos);
  EXPECT_NE(bench.output.find("m=2 attack=lca"), std::string::npos);
  ASSERT_TRUE(fs::exists(path("agg.csv")));
  ASSERT_TRUE(fs::exists(path("raw.csv")));
  std::string raw = slurp(path("raw.csv"));
  EXPECT_NE(raw.find("instance_seed"), std::string::npos);
  EXPECT_NE(raw.find("attack_seed"), std::string::npos);
  // 2 sizes x 2 attacks x 2 trials.
  int data_rows = 0;
  std::istringstream lines(raw);
  std::string line;
  while (std::getline(lines, line))
    if (!line.empty() && line[0] != '#' && line.find("m,") != 0) ++data_rows;
  EXPECT_EQ(data_rows, 8);
}

}  // namespace
