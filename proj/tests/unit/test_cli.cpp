#include <gtest/gtest.h>
#include <unistd.h>

#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "run.hpp"

namespace fs = std::filesystem;

namespace {

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    dir_ = fs::temp_directory_path() / ("toothalign_cli_unit_" + std::to_string(::getpid()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
    const auto r = run::shell(run::cli() + " --seed 4 gen --count 2 --teeth 10 -o " + (dir_ / "cases").string());
    ASSERT_EQ(r.exit_code, 0);
  }
  static void TearDownTestSuite() { fs::remove_all(dir_); }

  static std::string case_file(int seed) { return (dir_ / "cases" / ("synth-" + std::to_string(seed) + ".case.json")).string(); }

  static fs::path dir_;
};

fs::path Cli::dir_;

}  // namespace

TEST_F(Cli, GenWritesCases) {
  EXPECT_TRUE(fs::exists(case_file(4)));
  EXPECT_TRUE(fs::exists(case_file(5)));
}

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run::shell(run::cli()).exit_code, 1);
  EXPECT_EQ(run::shell(run::cli() + " nosuchcommand").exit_code, 1);
  EXPECT_EQ(run::shell(run::cli() + " gen").exit_code, 1);  // missing -o
  EXPECT_EQ(run::shell(run::cli() + " --help").exit_code, 0);
}

TEST_F(Cli, ValidationErrorsExitOne) {
  const fs::path bad = dir_ / "bad.json";
  std::ofstream(bad) << R"({"id": "x", "upper": [], "lower": [], "oops": 1})";
  EXPECT_EQ(run::shell(run::cli() + " forward " + bad.string()).exit_code, 1);
  const fs::path cfg = dir_ / "cfg.json";
  std::ofstream(cfg) << R"({"unknown": 1})";
  EXPECT_EQ(run::shell(run::cli() + " --config " + cfg.string() + " forward " + case_file(4)).exit_code, 1);
}

TEST_F(Cli, LossOfTruthAgainstItself) {
  const auto r = run::shell(run::cli() + " loss --pred " + case_file(4) + " --gt " + case_file(4));
  ASSERT_EQ(r.exit_code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["l_recon"].get<double>(), 0.0);
  EXPECT_EQ(j["l_fit"].get<double>(), 0.0);
  EXPECT_EQ(j["l_uni_ant"].get<double>(), 0.0);
  EXPECT_LE(j["l_val"].get<double>(), 1e-9);
}

TEST_F(Cli, SampleAndArch) {
  const fs::path pts = dir_ / "pts.json";
  std::ofstream(pts) << R"({"points": [[0,0,0],[1,0,0],[10,0,0]]})";
  auto r = run::shell(run::cli() + " sample " + pts.string() + " --n 2");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_NE(r.out.find("10"), std::string::npos);
  r = run::shell(run::cli() + " arch export " + case_file(4) + " --jaw lower --samples 16");
  ASSERT_EQ(r.exit_code, 0);
  EXPECT_EQ(nlohmann::json::parse(r.out)["polyline"].size(), 16u);
}
