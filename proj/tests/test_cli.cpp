// Copyright 2026 The pmean Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli.hpp"
#include "pmean/cost.hpp"

namespace pmean {
namespace {

namespace fs = std::filesystem;

const std::string kConfigs = PMEAN_CONFIG_DIR;

struct Result {
  int code;
  std::string out, err;
};

Result cli(std::vector<std::string> args) {
  std::ostringstream out, err;
  int code = cli::run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

nlohmann::json json_file(const fs::path& p) { return nlohmann::json::parse(slurp(p)); }

fs::path scratch(const std::string& name) {
  fs::path dir = fs::path("cli_out") / name;
  fs::remove_all(dir);
  return dir;
}

std::vector<std::string> quick_anneal(const fs::path& out) {
  return {"anneal", "-c", kConfigs + "/two_atom.toml", "--out", out.string(), "--set", "run.t_end=20",
          "--set", "run.output_times=[5.0, 20.0]", "--set", "run.n_runs=30", "--set", "run.trajectories=3"};
}

TEST(Cli, MissingConfigFile) {
  auto r = cli({"oracle", "-c", "does/not/exist.toml"});
  EXPECT_EQ(r.code, cli::kExitConfig);
  EXPECT_NE(r.err.find("config: file not found"), std::string::npos) << r.err;
}

TEST(Cli, ConfigErrorsNameTheField) {
  const std::string cfg = kConfigs + "/two_atom.toml";
  struct Case {
    std::string set, field;
  };
  for (const auto& c : {Case{"p=0.5", "p"}, Case{"schedule.kk=3", "schedule.kk"}, Case{"manifold=\"cube\"", "manifold"},
                        Case{"run.h_max=-1", "run.h_max"}, Case{"run.output_times=[1e9]", "run.output_times"},
                        Case{"schedule.mode=\"fast\"", "schedule.mode"}, Case{"measure.weights=[1.0]", "measure.weights"}}) {
    auto r = cli({"oracle", "-c", cfg, "--out", scratch("bad").string(), "--set", c.set});
    EXPECT_EQ(r.code, cli::kExitConfig) << c.set;
    EXPECT_NE(r.err.find("config: " + c.field + ":"), std::string::npos) << c.set << " -> " << r.err;
  }
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(cli({}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"bogus"}).code, cli::kExitUsage);
  EXPECT_EQ(cli({"oracle"}).code, cli::kExitUsage);
  auto help = cli({"--help"});
  EXPECT_EQ(help.code, cli::kExitOk);
  EXPECT_NE(help.out.find("anneal"), std::string::npos);
}

TEST(Cli, IoErrorExitCode) {
  fs::create_directories("cli_out");
  std::ofstream("cli_out/blocker") << "x";
  auto r = cli({"oracle", "-c", kConfigs + "/two_atom.toml", "--out", "cli_out/blocker/sub"});
  EXPECT_EQ(r.code, cli::kExitIo) << r.err;
}

TEST(Cli, DryRunResolvesAutoK) {
  auto out = scratch("dry");
  auto r = cli({"anneal", "-c", kConfigs + "/two_atom.toml", "--out", out.string(), "--dry-run"});
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  auto j = nlohmann::json::parse(r.out);
  EXPECT_NEAR(j["resolved"]["c_U"].get<double>(), 0.08, 2e-4);
  EXPECT_NEAR(j["resolved"]["k"].get<double>(), 1.1 * j["resolved"]["c_U"].get<double>() + 0.1, 1e-15);
  EXPECT_NEAR(j["resolved"]["neighborhood"]["center"][0].get<double>(), 0.2, 1e-8);
  EXPECT_EQ(j["config"]["schedule"]["k"], "auto");
  EXPECT_FALSE(fs::exists(out / "ensemble.json"));
}

TEST(Cli, AnnealWritesArtifacts) {
  auto out = scratch("anneal");
  auto r = cli(quick_anneal(out));
  ASSERT_EQ(r.code, cli::kExitOk) << r.err;
  for (const char* f : {"runs_000.csv", "runs_001.csv", "runs_002.csv", "ensemble.json", "hitrate.svg"}) {
    EXPECT_TRUE(fs::exists(out / f)) << f;
  }
  EXPECT_FALSE(fs::exists(out / "runs_003.csv"));
  auto j = json_file(out / "ensemble.json");
  EXPECT_EQ(j["n_runs"], 30);
  EXPECT_EQ(j["checkpoints"].size(), 2u);
  EXPECT_EQ(j["fractions"].size(), 2u);
  EXPECT_TRUE(j.contains("wilson_lo") && j.contains("wilson_hi") && j.contains("seed"));
  EXPECT_EQ(j["version"], PMEAN_VERSION);
  EXPECT_EQ(j["config"]["run"]["t_end"], 20.0);
  const std::string csv = slurp(out / "runs_000.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,theta_0,y_0,beta,s,jumps");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 4);
  EXPECT_NE(slurp(out / "hitrate.svg").find("<svg"), std::string::npos);
}

TEST(Cli, OracleExamples) {
  auto out = scratch("oracle");
  ASSERT_EQ(cli({"oracle", "-c", kConfigs + "/two_atom.toml", "--out", out.string()}).code, 0);
  auto j = json_file(out / "oracle.json");
  EXPECT_NEAR(j["argmin"][0].get<double>(), 0.2, 1e-8);
  EXPECT_NEAR(j["gap"].get<double>(), 0.05, 1e-9);
  EXPECT_FALSE(j["ambiguous"].get<bool>());
  EXPECT_TRUE(fs::exists(out / "landscape.csv"));

  ASSERT_EQ(cli({"oracle", "-c", kConfigs + "/two_atom.toml", "--out", out.string(), "--set",
                 "measure.atoms=[0.63]"}).code, 0);
  j = json_file(out / "oracle.json");
  EXPECT_NEAR(j["argmin"][0].get<double>(), 0.63, 1e-8);
  EXPECT_EQ(j["gap"], "inf");

  ASSERT_EQ(cli({"oracle", "-c", kConfigs + "/antipodal.toml", "--out", out.string()}).code, 0);
  EXPECT_TRUE(json_file(out / "oracle.json")["ambiguous"].get<bool>());
}

TEST(Cli, LandscapeReportsElevation) {
  auto out = scratch("landscape");
  ASSERT_EQ(cli({"landscape", "-c", kConfigs + "/two_atom.toml", "--out", out.string()}).code, 0);
  auto j = json_file(out / "elevation.json");
  EXPECT_NEAR(j["c_U"].get<double>(), 0.08, 2e-4);
  // A constant offset in the cost does not change c(U): shift every atom by
  // the same rotation instead, which leaves the landscape shape unchanged.
  ASSERT_EQ(cli({"landscape", "-c", kConfigs + "/two_atom.toml", "--out", out.string(), "--set",
                 "measure.atoms=[0.25, 0.65]"}).code, 0);
  EXPECT_NEAR(json_file(out / "elevation.json")["c_U"].get<double>(), j["c_U"].get<double>(), 1e-12);
}

TEST(Cli, ExchangeCheckWithinTolerance) {
  auto out = scratch("lemma2");
  auto r = cli({"lemma2", "-c", kConfigs + "/two_atom.toml", "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  auto j = json_file(out / "lemma2.json");
  EXPECT_LE(j["max_discrepancy"].get<double>(), 1e-6);
  EXPECT_EQ(j["points"].size(), 50u);
}

TEST(Cli, ExchangeCheckSymmetricPair) {
  // Single atom at 0: U is even in theta.
  auto m = Manifold::circle();
  auto nu = uniform_empirical({Point{{0.0, 0.0, 0.0}}});
  for (double th : {0.05, 0.21, 0.37}) {
    EXPECT_NEAR(U_smoothed(m, nu, 1.5, 0.05, 0.05, Point{{th, 0, 0}}),
                U_smoothed(m, nu, 1.5, 0.05, 0.05, Point{{1.0 - th, 0, 0}}), 1e-12);
  }
}

TEST(Cli, EmpiricalOutputs) {
  auto out = scratch("empirical");
  auto r = cli({"empirical", "-c", kConfigs + "/two_atom.toml", "--out", out.string(), "--set", "empirical.streams=2",
                "--set", "empirical.n_max=20", "--set", "empirical.trials=10"});
  ASSERT_EQ(r.code, 0) << r.err;
  const std::string csv = slurp(out / "mean_process.csv");
  EXPECT_EQ(csv.substr(0, csv.find('\n')), "stream,n,e_pn_0,H_value,gap,ambiguous,basin_id,jumped,method");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 41);
  auto j = json_file(out / "probe.json");
  EXPECT_EQ(j["trials"], 10);
  EXPECT_EQ(j["exact_ties"], 0);

  auto warn = cli({"empirical", "-c", kConfigs + "/two_atom.toml", "--out", out.string(), "--set", "p=1.0", "--set",
                   "empirical.probe_n=2", "--set", "empirical.streams=1", "--set", "empirical.n_max=2", "--set",
                   "empirical.trials=4"});
  ASSERT_EQ(warn.code, 0);
  EXPECT_NE(warn.err.find("warning"), std::string::npos);
}

TEST(Cli, RerunsAreByteIdentical) {
  const std::string cfg = kConfigs + "/two_atom.toml";
  const std::vector<std::vector<std::string>> commands = {
      {"oracle"}, {"landscape"}, {"lemma2", "--set", "lemma2.points=5"},
      {"empirical", "--set", "empirical.streams=2", "--set", "empirical.n_max=15", "--set", "empirical.trials=8"}};
  for (const auto& base : commands) {
    std::vector<fs::path> dirs = {scratch("det_a"), scratch("det_b")};
    for (const auto& d : dirs) {
      auto args = base;
      args.insert(args.begin() + 1, {"-c", cfg, "--out", d.string(), "--seed", "77"});
      ASSERT_EQ(cli(args).code, 0) << base[0];
    }
    for (const auto& e : fs::directory_iterator(dirs[0])) {
      EXPECT_EQ(slurp(e.path()), slurp(dirs[1] / e.path().filename())) << base[0] << " " << e.path().filename();
    }
  }
  auto a = scratch("det_anneal_a"), b = scratch("det_anneal_b");
  ASSERT_EQ(cli(quick_anneal(a)).code, 0);
  ASSERT_EQ(cli(quick_anneal(b)).code, 0);
  for (const auto& e : fs::directory_iterator(a)) EXPECT_EQ(slurp(e.path()), slurp(b / e.path().filename()));
}

TEST(Cli, SeedChangesOutput) {
  auto a = scratch("seed_a"), b = scratch("seed_b");
  auto args_a = quick_anneal(a), args_b = quick_anneal(b);
  args_b.insert(args_b.end(), {"--seed", "5"});
  ASSERT_EQ(cli(args_a).code, 0);
  ASSERT_EQ(cli(args_b).code, 0);
  EXPECT_NE(slurp(a / "runs_000.csv"), slurp(b / "runs_000.csv"));
}

}  // namespace
}  // namespace pmean
