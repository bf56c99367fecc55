#include <sys/wait.h>

#include <array>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string output;
};

Result RunCli(const std::string& args) {
  const std::string cmd = std::string(SAFESYNTH_CLI) + " " + args + " 2>&1";
  Result r;
  FILE* pipe = popen(cmd.c_str(), "r");
  std::array<char, 4096> buf{};
  while (std::fgets(buf.data(), buf.size(), pipe) != nullptr) r.output += buf.data();
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

fs::path FreshDir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / "safesynth_cli" / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

fs::path WriteConfig(const fs::path& dir, const std::string& from, const std::string& to) {
  std::ifstream in(std::string(SOURCE_DIR) + "/configs/room-temp-desk.cfg");
  std::string text((std::istreambuf_iterator<char>(in)), {});
  if (!from.empty()) text.replace(text.find(from), from.size(), to);
  const fs::path p = dir / "cfg.yaml";
  std::ofstream(p) << text;
  return p;
}

fs::path OnlyRunDir(const fs::path& base) {
  fs::path found;
  int count = 0;
  for (const auto& e : fs::directory_iterator(base)) {
    if (e.is_directory()) {
      found = e.path();
      ++count;
    }
  }
  EXPECT_EQ(count, 1);
  return found;
}

nlohmann::json ReadJson(const fs::path& p) {
  std::ifstream in(p);
  return nlohmann::json::parse(in);
}

}  // namespace

TEST(Cli, BoundsKappa) {
  const Result r = RunCli("bounds kappa --N 140000 --N0 70000 --Nstar 1 --R 0 --beta 0.05");
  EXPECT_EQ(r.code, 0);
  EXPECT_NE(r.output.find("0.9999723"), std::string::npos) << r.output;
}

TEST(Cli, BoundsPrior) {
  const Result r = RunCli("bounds prior --eps 0.1 --beta 0.5 --dim 0");
  EXPECT_EQ(r.code, 0);
  EXPECT_EQ(r.output, "7\n");
}

TEST(Cli, VacuousBoundIsInconclusive) {
  EXPECT_EQ(RunCli("bounds kappa --N 5 --N0 5 --Nstar 5 --R 5").code, 2);
}

TEST(Cli, OverlappingRegionsExitThree) {
  const fs::path dir = FreshDir("overlap");
  const fs::path cfg = WriteConfig(dir, "initial: [[24, 25]]", "initial: [[22.8, 25]]");
  const Result r = RunCli("synthesize --config " + cfg.string() + " --out " + (dir / "runs").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("disjoint"), std::string::npos) << r.output;
}

TEST(Cli, MissingBetaExitThree) {
  const fs::path dir = FreshDir("nobeta");
  const fs::path cfg = WriteConfig(dir, "  beta: 0.05\n", "");
  const Result r = RunCli("synthesize --config " + cfg.string() + " --out " + (dir / "runs").string());
  EXPECT_EQ(r.code, 3);
  EXPECT_NE(r.output.find("confidence.beta"), std::string::npos) << r.output;
}

TEST(Cli, BadArgumentsExitThree) {
  EXPECT_EQ(RunCli("bounds kappa --N 10").code, 3);
  EXPECT_EQ(RunCli("frobnicate").code, 3);
  EXPECT_EQ(RunCli("bounds prior --eps 2 --beta 0.05 --dim 3").code, 3);
}

TEST(Cli, InconclusiveRunWritesOutputs) {
  const fs::path dir = FreshDir("small");
  const fs::path cfg = WriteConfig(dir, "", "");
  const Result r = RunCli("synthesize --config " + cfg.string() + " --N 200 --N0 100 --seed 3 --seed-validation 4 --out " +
                       (dir / "runs").string());
  EXPECT_EQ(r.code, 2) << r.output;
  const fs::path run = OnlyRunDir(dir / "runs");
  const nlohmann::json report = ReadJson(run / "report.json");
  EXPECT_EQ(report["verdict"], "inconclusive");
  EXPECT_EQ(report["seed"], 3);
  const nlohmann::json manifest = ReadJson(run / "manifest.json");
  EXPECT_EQ(manifest["exit_code"], 2);
  EXPECT_EQ(manifest["config_hash"].get<std::string>().size(), 64u);
  EXPECT_TRUE(manifest.contains("tool_version"));
  EXPECT_TRUE(fs::exists(run / "scenario.csv"));
  EXPECT_TRUE(fs::exists(run / "validation.csv"));
}

TEST(Cli, CaseStudyCertifies) {
  const fs::path dir = FreshDir("case");
  const Result r = RunCli("casestudy --mode posterior --out " + (dir / "runs").string());
  ASSERT_EQ(r.code, 0) << r.output;
  const fs::path run = OnlyRunDir(dir / "runs");
  const nlohmann::json report = ReadJson(run / "report.json");
  EXPECT_EQ(report["verdict"], "certified");
  EXPECT_LE(report["margin"].get<double>(), 0.0);
  const nlohmann::json verify = ReadJson(run / "verify.json");
  EXPECT_TRUE(verify["all_conditions_passed"].get<bool>());
  for (const char* f : {"barrier.csv", "controller.csv", "g3_surface.csv", "manifest.json"}) {
    EXPECT_TRUE(fs::exists(run / f)) << f;
  }
}

TEST(Cli, CollectThenVerifyReport) {
  const fs::path dir = FreshDir("collect");
  const fs::path cfg = WriteConfig(dir, "", "");
  const Result r = RunCli("collect --config " + cfg.string() + " --role validation --count 50 --out " +
                       (dir / "runs").string());
  EXPECT_EQ(r.code, 0) << r.output;
  const fs::path run = OnlyRunDir(dir / "runs");
  bool found = false;
  for (const auto& e : fs::directory_iterator(run)) {
    if (e.path().extension() == ".csv") found = true;
  }
  EXPECT_TRUE(found);
}
