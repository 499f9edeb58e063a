#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "ysm/cli.hpp"

using ysm::cli::main_entry;
using json = nlohmann::ordered_json;

namespace {

struct Outcome {
  int code;
  std::string out;
  std::string err;
};

Outcome invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = main_entry(std::move(args), out, err);
  return {code, out.str(), err.str()};
}

std::string temp_path(const std::string& name) {
  return (std::filesystem::temp_directory_path() / ("ysm_cli_test_" + name)).string();
}

}  // namespace

TEST(Cli, MissingRequiredOptionIsUsageError) {
  const auto r = invoke({"simulate", "--n", "10"});
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("--p"), std::string::npos);
}

TEST(Cli, UnknownOptionOrCommandIsUsageError) {
  EXPECT_EQ(invoke({"simulate", "--p", "0.5", "--n", "10", "--bogus", "1"}).code, 2);
  EXPECT_EQ(invoke({"frobnicate"}).code, 2);
  EXPECT_EQ(invoke({}).code, 2);
  EXPECT_EQ(invoke({"simulate", "--p", "1.5", "--n", "10"}).code, 2);
  EXPECT_EQ(invoke({"csbp", "extinction", "--b", "0.5"}).code, 2);
}

TEST(Cli, HelpExitsCleanly) {
  const auto r = invoke({"--help"});
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("simulate"), std::string::npos);
}

TEST(Cli, OracleCsv) {
  const auto r = invoke({"oracle", "--p", "0.5", "--alpha", "1", "--n", "3"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("ell,expected_nu\n1,1.25\n2,0.5\n3,0.25\n"), std::string::npos) << r.out;
  EXPECT_EQ(r.out.rfind("# {\"schema\":\"ysm/1\"", 0), 0u);
}

TEST(Cli, SimulateIsThreadInvariant) {
  const std::vector<std::string> base{"simulate", "--p", "0.5", "--alpha", "0", "--n", "20000", "--replicates", "20",
                                      "--seed", "7"};
  auto one = base, eight = base;
  one.insert(one.end(), {"--threads", "1"});
  eight.insert(eight.end(), {"--threads", "8"});
  const auto a = invoke(one), b = invoke(eight);
  ASSERT_EQ(a.code, 0) << a.err;
  EXPECT_EQ(a.out, b.out);
  EXPECT_EQ(ysm::cli::determinism_probe(3, 1), ysm::cli::determinism_probe(3, 8));
}

TEST(Cli, SimulateJsonCountsConserveMass) {
  const auto r = invoke({"simulate", "--p", "0.3", "--alpha", "1", "--n", "5000", "--replicates", "3", "--format",
                         "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_EQ(j["schema"], "ysm/1");
  std::uint64_t mass = 0;
  for (const auto& row : j["counts"]) mass += row["ell"].get<std::uint64_t>() * row["count"].get<std::uint64_t>();
  EXPECT_EQ(mass, 15000u);
}

TEST(Cli, TaggedTrajectoriesCsv) {
  const auto r = invoke({"simulate", "--p", "0.5", "--alpha", "1", "--n", "100", "--tags", "0.5", "--grid",
                         "0.25,0.5,1"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("u,t,A,N\n0.5,0.25,0,0\n0.5,0.5,1,1\n"), std::string::npos) << r.out;
  EXPECT_EQ(invoke({"simulate", "--p", "0.5", "--n", "100", "--tags", "0.5"}).code, 2);
}

TEST(Cli, ConfigFileWithFlagOverride) {
  const auto cfg = temp_path("cfg.toml");
  {
    std::ofstream f(cfg);
    f << "p=0.5\nalpha=1\nn=3\n";
  }
  const auto r = invoke({"oracle", "--config", cfg, "--n", "2"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("\"n\":2"), std::string::npos) << r.out;
  EXPECT_NE(r.out.find("1,1\n2,0.5\n"), std::string::npos) << r.out;

  const auto bad = temp_path("bad.toml");
  {
    std::ofstream f(bad);
    f << "p=0.5\nnot_an_option=3\n";
  }
  EXPECT_EQ(invoke({"oracle", "--config", bad, "--n", "3"}).code, 2);
  std::filesystem::remove(cfg);
  std::filesystem::remove(bad);
}

TEST(Cli, CsbpMomentsJson) {
  const auto r = invoke({"csbp", "moments", "--b", "0", "--t", "1", "--ell-max", "2", "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  const double e = std::exp(1.0);
  EXPECT_NEAR(j["estimates"]["moments"][0].get<double>(), e, 1e-9);
  EXPECT_NEAR(j["estimates"]["moments"][1].get<double>(), 2 * e * e - e, 1e-8);
}

TEST(Cli, CsbpPathCsvAndSummary) {
  const auto path = invoke({"csbp", "z", "--b", "0.5", "--t", "2", "--seed", "4"});
  ASSERT_EQ(path.code, 0) << path.err;
  EXPECT_NE(path.out.find("t_jump,z_after\n0,1\n"), std::string::npos);
  const auto summary = invoke({"csbp", "extinction", "--b", "2", "--samples", "2000", "--format", "json"});
  ASSERT_EQ(summary.code, 0) << summary.err;
  const auto j = json::parse(summary.out);
  EXPECT_LT(j["estimates"]["max_identity_error"].get<double>(), 1e-9);
  EXPECT_EQ(j["n_paths"], 2000);
}

TEST(Cli, TailfitFromInputFile) {
  const auto in = temp_path("samples.txt");
  {
    std::ofstream f(in);
    f << "B\n";
    ysm::Rng rng(5);
    for (int i = 0; i < 200000; ++i) {
      const double u = rng.uniform();
      f << static_cast<std::uint64_t>(std::max(1.0, std::floor((-1.0 + std::sqrt(1.0 + 8.0 / u)) / 2.0))) << '\n';
    }
  }
  const auto r = invoke({"tailfit", "--input", in, "--format", "json"});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto j = json::parse(r.out);
  EXPECT_NEAR(j["tailfit"]["exponent"].get<double>(), 2.0, 0.3);
  std::filesystem::remove(in);

  const auto flat = temp_path("flat.txt");
  {
    std::ofstream f(flat);
    for (int i = 0; i < 1000; ++i) f << "4\n";
  }
  EXPECT_EQ(invoke({"tailfit", "--input", flat}).code, 1);
  std::filesystem::remove(flat);
}

TEST(Cli, ValidateSelectedCriterion) {
  const auto r = invoke({"validate", "--only", "11"});
  EXPECT_EQ(r.code, 0) << r.out << r.err;
  EXPECT_NE(r.out.find(",pass,"), std::string::npos);
}
