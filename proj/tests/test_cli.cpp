// SPDX-License-Identifier: Apache-2.0
#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "support.hpp"

namespace {

struct Result {
  int code = -1;
  std::string out;
};

Result cli(const std::string& args) {
  const std::string cmd = std::string(FTSIM_CLI_PATH) + " " + args + " 2>&1";
  Result r;
  FILE* p = popen(cmd.c_str(), "r");
  if (!p) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, p)) > 0) r.out.append(buf, n);
  const int status = pclose(p);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string scen(const char* name) { return "--scenario " + ftsim::test::scenario_path(name); }

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST(Cli, ValidateOk) {
  auto r = cli("validate " + scen("fig3"));
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, ValidationErrorsExitOne) {
  auto r = cli("validate " + scen("fig3") + " --set tile_groups.0.members.1=C9 --set horizon=0");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.out.find("unknown tile 'C9'"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("horizon must be > 0"), std::string::npos) << r.out;
  EXPECT_EQ(cli("run --scenario /nonexistent.scenario").code, 1);
}

TEST(Cli, LossOfMissionExitTwo) {
  const std::string loss = scen("fig3") +
                           " --set 'faults.events=[{\"at\":1500,\"kind\":\"permanent-cell\",\"partition\":\"shared\",\"cell\":0}]'"
                           " --set fabric.shared_variant_count=1 --quiet";
  EXPECT_EQ(cli("run " + loss).code, 0);
  EXPECT_EQ(cli("run " + loss + " --fail-on-loss").code, 2);
  EXPECT_EQ(cli("run " + scen("fig3") + " --quiet --fail-on-loss").code, 0);
}

TEST(Cli, RunWritesTraceAndMetricsThatAgree) {
  const std::string dir = ::testing::TempDir();
  const std::string trace = dir + "/cli_fig6.jsonl", metrics = dir + "/cli_fig6.json",
                    again = dir + "/cli_fig6_again.json";
  ASSERT_EQ(cli("run " + scen("fig6") + " --quiet --trace-out " + trace + " --metrics-out " + metrics).code, 0);
  ASSERT_EQ(cli("metrics --trace " + trace + " --quiet --metrics-out " + again).code, 0);
  EXPECT_FALSE(slurp(metrics).empty());
  EXPECT_EQ(slurp(metrics), slurp(again));
}

TEST(Cli, SeedAndUntilFlags) {
  const std::string dir = ::testing::TempDir();
  const std::string a = dir + "/cli_storm_a.jsonl", b = dir + "/cli_storm_b.jsonl";
  ASSERT_EQ(cli("run " + scen("storm") + " --seed 5 --until 20000 --quiet --trace-out " + a).code, 0);
  ASSERT_EQ(cli("run " + scen("storm") + " --seed 6 --until 20000 --quiet --trace-out " + b).code, 0);
  EXPECT_NE(slurp(a), slurp(b));
  EXPECT_NE(slurp(a).find("\"seed\":5"), std::string::npos);
}

TEST(Cli, ReplayCheck) {
  auto r = cli("replay-check " + scen("fig3"));
  EXPECT_EQ(r.code, 0) << r.out;
}

TEST(Cli, SweepCsv) {
  const std::string csv = ::testing::TempDir() + "/cli_sweep.csv";
  auto r = cli("sweep " + scen("fig3") + " --grid tile_groups.0.base_period=1000,2000 --seeds 1,2 --quiet --csv-out " + csv);
  ASSERT_EQ(r.code, 0) << r.out;
  const auto text = slurp(csv);
  EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 5);
  EXPECT_EQ(cli("sweep " + scen("fig3") + " --grid name=1,2 --quiet").code, 1);
}
