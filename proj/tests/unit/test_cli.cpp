#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <unistd.h>

#include "semroute/csv.hpp"
#include "semroute_cli/cli.hpp"

namespace semroute::cli {
namespace {

namespace fs = std::filesystem;

std::string tiny() {
  const char* dir = std::getenv("SEMROUTE_TEST_DATA");
  return (fs::path(dir ? dir : "tests/data") / "tiny.jsonl").string();
}

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome call(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  auto dir = fs::temp_directory_path() / ("semroute_cli_" + name + "_" + std::to_string(::getpid()));
  fs::remove_all(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(call({}).code, kUsage);
  EXPECT_EQ(call({"frobnicate"}).code, kUsage);
  EXPECT_EQ(call({"match"}).code, kUsage);  // --dataset is required
  EXPECT_EQ(call({"match", "--dataset", "/no/such/file.jsonl"}).code, kUsage);
  EXPECT_EQ(call({"match", "--dataset", tiny(), "--preset", "A9"}).code, kUsage);
  EXPECT_EQ(call({"match", "--dataset", tiny(), "--seeds", "1,x"}).code, kUsage);
  EXPECT_EQ(call({"match", "--dataset", tiny(), "--backend", "gpt"}).code, kUsage);
  EXPECT_EQ(call({"cost", "--rho", "1.5"}).code, kUsage);
  EXPECT_EQ(call({"cost", "--w-cross", "--k", "1"}).code, kUsage);
  EXPECT_EQ(call({"calibrate", "--dataset", tiny(), "--strategy", "random"}).code, kUsage);
  EXPECT_EQ(call({"invariants", "--fixture", "nope"}).code, kUsage);
  EXPECT_EQ(call({"--help"}).code, kOk);
}

TEST(Cli, MatchWritesResultTables) {
  const auto dir = scratch("match");
  const auto r = call({"match", "--dataset", tiny(), "--preset", "A0", "--preset", "A2", "--seeds", "1,2,3",
                       "--out", dir.string()});
  ASSERT_EQ(r.code, kOk) << r.err;

  std::istringstream in(slurp(dir / "results.csv"));
  const auto table = csv::read(in);
  // Per preset and variant: three seeds plus mean and ci95.
  EXPECT_EQ(table.rows.size(), 2u * 2u * 5u);
  bool saw_mean = false;
  for (const auto& row : table.rows) {
    if (table.get(row, "preset") == "A0" && table.get(row, "seed") == "mean(n=3)" &&
        table.get(row, "variant") == "id") {
      EXPECT_EQ(table.get(row, "f1"), "1");
      saw_mean = true;
    }
  }
  EXPECT_TRUE(saw_mean);
  EXPECT_EQ(r.out, slurp(dir / "results.csv"));
  EXPECT_TRUE(fs::exists(dir / "cells.csv"));
  EXPECT_TRUE(fs::exists(dir / "decisions.jsonl"));
  fs::remove_all(dir);
}

TEST(Cli, MatchReportsBackendFailures) {
  const auto dir = scratch("fail");
  const auto r = call({"match", "--dataset", tiny(), "--backend", "http:http://127.0.0.1:1/x", "--seeds", "1",
                       "--out", dir.string()});
  EXPECT_EQ(r.code, kFailure);
  EXPECT_NE(r.err.find("seed 1 failed"), std::string::npos);
  EXPECT_NE(slurp(dir / "results.csv").find("A0,1,failed"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, CostWorkedExample) {
  const auto r = call({"cost", "--rho", "1", "--rho", "0.6"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out,
            "rho,n_subs,b_max,delta_b,m_c,I_c,I,R,L\n"
            "1,25,27,0,600,23,230,230,230\n"
            "0.6,15,43,16,600,14,140,140,140\n");
}

TEST(Cli, CostCrossover) {
  const auto r = call({"cost", "--w-cross", "--t-e", "30", "--clusters", "1", "--subs", "19", "--rho", "0.5",
                       "--k", "9"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out, "n_subs,rho,k,w_cross\n19,0.5,9,2315\n");
}

TEST(Cli, CostValidate) {
  const auto dir = scratch("validate");
  fs::create_directories(dir);
  {
    std::ofstream f(dir / "cells.csv");
    f << "m_c,b_max,I_meas\n600,27,23\n10,27,1\n";
  }
  const auto r = call({"cost", "--validate", (dir / "cells.csv").string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out.rfind("stratum,cells,median_ratio,fraction_in_band,under_predictions,exact\n", 0), 0u);
  EXPECT_NE(r.out.find("all,2,1,1,0,2"), std::string::npos);
  fs::remove_all(dir);
}

TEST(Cli, CalibrateRoundRobinMakesNoCalls) {
  // The HTTP endpoint is unreachable, so any backend call would fail.
  const auto r = call({"calibrate", "--dataset", tiny(), "--strategy", "round_robin", "--preset", "A1", "--k", "2",
                       "--backend", "sim:oracle", "--backend", "http:http://127.0.0.1:1/x"});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_EQ(r.out.rfind("cluster,backend,strategy,weights,fraction,disjoint\n", 0), 0u);
  EXPECT_NE(r.out.find("0,sim:oracle,round_robin"), std::string::npos);
  EXPECT_NE(r.out.find("1,http:http://127.0.0.1:1/x,round_robin"), std::string::npos);
}

TEST(Cli, CalibrateFullFractionIsNotDisjoint) {
  const auto dir = scratch("calibrate");
  const auto r = call({"calibrate", "--dataset", tiny(), "--preset", "A1", "--k", "2", "--fraction", "1",
                       "--backend", "sim:oracle", "--backend", "sim:collapse,D=1", "--out", dir.string()});
  ASSERT_EQ(r.code, kOk) << r.err;
  EXPECT_NE(r.out.find(",1,false\n"), std::string::npos);
  EXPECT_EQ(r.out.find(",true\n"), std::string::npos);
  EXPECT_TRUE(fs::exists(dir / "assignment.csv"));
  EXPECT_TRUE(fs::exists(dir / "calibration.csv"));
  fs::remove_all(dir);
}

TEST(Cli, Invariants) {
  auto r = call({"invariants"});
  EXPECT_EQ(r.code, kOk) << r.out;
  EXPECT_NE(r.out.find("oracle I1 PASS"), std::string::npos);
  EXPECT_NE(r.out.find("collapse I5 PASS"), std::string::npos);

  r = call({"invariants", "--fixture", "broken-I3"});
  EXPECT_EQ(r.code, kFailure);
  EXPECT_NE(r.out.find("broken-I3 FAILED I3\n"), std::string::npos);
}

TEST(Cli, GenerateIsDeterministic) {
  const auto a = call({"generate", "--subs", "6", "--events", "8", "--seed", "3"});
  const auto b = call({"generate", "--subs", "6", "--events", "8", "--seed", "3"});
  ASSERT_EQ(a.code, kOk);
  EXPECT_EQ(a.out, b.out);
  const auto grown = call({"generate", "--subs", "6", "--events", "8", "--duplicate-to", "20"});
  std::size_t subs = 0;
  std::istringstream lines(grown.out);
  for (std::string line; std::getline(lines, line);) subs += line.find("\"subscription\"") != std::string::npos;
  EXPECT_EQ(subs, 20u);
}

}  // namespace
}  // namespace semroute::cli
