#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include "fixtures.hpp"

using namespace qjoint;
namespace jio = qjoint::json_io;
using jio::Json;

namespace {

struct CliRun {
  int exit_code = -1;
  std::string out;
};

CliRun run_cli(const std::string& args, const std::string& env = "") {
  const std::string cmd = env + " " + std::string(QJOINT_CLI) + " " + args + " 2>/dev/null";
  CliRun r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n = 0;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string temp_file(const std::string& name, const std::string& contents) {
  const auto path = std::filesystem::temp_directory_path() / ("qjoint_cli_" + name);
  std::ofstream(path) << contents;
  return path.string();
}

std::string appendix_path() { return std::string(QJOINT_DATA_DIR) + "/appendix_a.json"; }

}  // namespace

TEST(Cli, VerifyBundledInstancePasses) {
  const CliRun r = run_cli("verify-appendix --json");
  EXPECT_EQ(r.exit_code, 0);
  const Json doc = jio::parse(r.out);
  EXPECT_TRUE(doc.at("passed").get<bool>());
  const Json& m = doc.at("manifest");
  EXPECT_EQ(m.at("command"), "verify-appendix");
  EXPECT_EQ(m.at("version"), std::string(version));
  for (const char* key : {"config", "inputs", "seed", "wall_time_seconds"}) EXPECT_TRUE(m.contains(key)) << key;
  EXPECT_NEAR(doc.at("result").at("defect").get<double>(), 0.25, 1e-4);
}

TEST(Cli, VerifyFromFileRecordsHash) {
  const CliRun r = run_cli("verify-appendix --input " + appendix_path() + " --json");
  EXPECT_EQ(r.exit_code, 0);
  const Json inputs = jio::parse(r.out).at("manifest").at("inputs");
  ASSERT_EQ(inputs.size(), 1U);
  const std::string hash = inputs[0].at("sha256");
  EXPECT_EQ(hash.size(), 64U);
  EXPECT_EQ(hash.find_first_not_of("0123456789abcdef"), std::string::npos);
}

TEST(Cli, TightToleranceIsSemanticFailure) {
  const CliRun r = run_cli("verify-appendix --tol 1e-12");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_NE(r.out.find("FAIL"), std::string::npos);
}

TEST(Cli, UsageErrors) {
  EXPECT_EQ(run_cli("").exit_code, 1);
  EXPECT_EQ(run_cli("frobnicate").exit_code, 1);
  EXPECT_EQ(run_cli("check").exit_code, 1);
  EXPECT_EQ(run_cli("check --input /nonexistent/file.json").exit_code, 1);
  EXPECT_EQ(run_cli("check --input " + temp_file("bad.json", "{oops")).exit_code, 1);
  EXPECT_EQ(run_cli("check --input " + appendix_path() + " --properties bogus").exit_code, 1);
  EXPECT_EQ(run_cli("search --restarts 0").exit_code, 1);
  EXPECT_EQ(run_cli("search --ranks 1,x").exit_code, 1);
  EXPECT_EQ(run_cli("search --dim 4 --ranks 1,2").exit_code, 1);
  EXPECT_EQ(run_cli("verify-appendix --tol -1").exit_code, 1);
}

TEST(Cli, CheckReportsSequentialIndependenceFailure) {
  const CliRun r = run_cli("check --input " + appendix_path() + " --tol 1e-6 --properties sequential_independence --json");
  EXPECT_EQ(r.exit_code, 2);
  const Json reports = jio::parse(r.out).at("result").at("reports");
  ASSERT_EQ(reports.size(), 1U);
  EXPECT_FALSE(reports[0].at("passed").get<bool>());
  EXPECT_FALSE(reports[0].at("witnesses").empty());
}

TEST(Cli, CheckPassesOnCommutingFamily) {
  Json family{{"dim", 2},
              {"measurements", Json::array({{{"projector", jio::to_json(fixtures::ket0_projector())}},
                                            {{"projector", jio::to_json(fixtures::ket0_projector())}}})},
              {"states", Json::array({{{"vector", jio::to_json(StateVector::normalized(Vector::Ones(2)).amplitudes())}}})}};
  const CliRun r = run_cli("check --input " + temp_file("family.json", family.dump()) + " --json");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_EQ(jio::parse(r.out).at("result").at("joint_distribution"), true);
}

TEST(Cli, JordanAndRepair) {
  const Json pair{{"p1", jio::to_json(fixtures::ket0_projector())},
                  {"p2", jio::to_json(fixtures::angled_projector(0.3))},
                  {"state", jio::to_json(StateVector::basis(2, 0).amplitudes())}};
  const std::string path = temp_file("pair.json", pair.dump());
  const CliRun j = run_cli("jordan --input " + path + " --json");
  EXPECT_EQ(j.exit_code, 0);
  EXPECT_NEAR(jio::parse(j.out).at("result").at("two_dim_blocks")[0].at("theta").get<double>(), 0.3, 1e-12);

  const auto out = std::filesystem::temp_directory_path() / "qjoint_cli_repair_out.json";
  std::filesystem::remove(out);
  const CliRun r = run_cli("repair --input " + path + " --output " + out.string());
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("PASS"), std::string::npos);
  const Json doc = jio::parse(jio::read_file(out.string()));
  EXPECT_NEAR(doc.at("result").at("on_state_distance").get<double>(), std::sin(0.3), 1e-12);

  const Json no_state{{"p1", pair.at("p1")}, {"p2", pair.at("p2")}};
  EXPECT_EQ(run_cli("repair --input " + temp_file("nostate.json", no_state.dump())).exit_code, 1);
  Json bad = pair;
  bad["p1"] = jio::to_json(Matrix(0.7 * identity(2)));
  EXPECT_EQ(run_cli("jordan --input " + temp_file("notproj.json", bad.dump())).exit_code, 2);
}

TEST(Cli, SearchWithoutFeasiblePointExitsTwo) {
  const CliRun r = run_cli("search --dim 2 --n 2 --ranks 1,1 --restarts 1 --iterations 50 --json");
  EXPECT_EQ(r.exit_code, 2);
  EXPECT_EQ(jio::parse(r.out).at("result").at("error"), "NoFeasiblePointFound");
}

TEST(Cli, SearchIsReproducibleAcrossThreadCaps) {
  const std::string args = "search --dim 4 --n 4 --ranks 1,2,2,1 --restarts 2 --iterations 100 --seed 5 --json";
  const Json a = jio::parse(run_cli(args, "QJOINT_THREADS=1").out);
  const Json b = jio::parse(run_cli(args, "QJOINT_THREADS=2").out);
  EXPECT_EQ(a.at("result").at("objective"), b.at("result").at("objective"));
  EXPECT_EQ(a.at("result").at("instance"), b.at("result").at("instance"));
  EXPECT_EQ(a.at("manifest").at("seed"), 5);
}
