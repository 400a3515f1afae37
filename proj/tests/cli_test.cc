#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include <fmt/format.h>
#include <gtest/gtest.h>

#include "ddsos/file_io.h"
#include "ddsos/sdpa_io.h"

namespace ddsos {
namespace {

namespace fs = std::filesystem;

const fs::path kConfigs = DDSOS_CONFIG_DIR;

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const auto* info = ::testing::UnitTest::GetInstance()->current_test_info();
    dir_ = fs::temp_directory_path() / fmt::format("ddsos_cli_{}", info->name());
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  int Run(const std::string& args) const {
    const std::string cmd = fmt::format("\"{}\" {} > \"{}\" 2>&1", DDSOS_CLI,
                                        args, (dir_ / "stdout.txt").string());
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }
  std::string Output() const { return ReadTextFile(dir_ / "stdout.txt"); }
  std::string Path(const std::string& name) const {
    return (dir_ / name).string();
  }
  std::string Config(const std::string& name) const {
    return (kConfigs / name).string();
  }
  // Runs the shipped experiment into dir_/data.csv.
  void MakeData() {
    ASSERT_EQ(Run(fmt::format("experiment --system {} --experiment {} -o {}",
                              Config("example_system.cfg"),
                              Config("example_experiment.cfg"), dir_.string())),
              0)
        << Output();
  }

  fs::path dir_;
};

TEST_F(CliTest, UsageErrors) {
  EXPECT_EQ(Run(""), 1);
  EXPECT_EQ(Run("bogus"), 1);
  EXPECT_EQ(Run("rank"), 1);
  EXPECT_EQ(Run("export-sdpa -o " + dir_.string()), 1);
  EXPECT_EQ(Run("rank --data " + Path("missing.csv")), 1);
  EXPECT_EQ(Run("--help"), 0);
}

TEST_F(CliTest, ExperimentAndRank) {
  MakeData();
  EXPECT_TRUE(fs::exists(dir_ / "data.csv"));
  EXPECT_TRUE(fs::exists(dir_ / "experiment_trajectory.csv"));
  EXPECT_EQ(Run("rank --data " + Path("data.csv")), 0) << Output();
  EXPECT_NE(Output().find("full row rank"), std::string::npos);
}

TEST_F(CliTest, OutDirFromEnvironment) {
  const std::string env_dir = Path("env_out");
  const std::string cmd = fmt::format(
      "DDSOS_OUT_DIR=\"{}\" \"{}\" experiment --system {} --experiment {} > /dev/null",
      env_dir, DDSOS_CLI, Config("example_system.cfg"),
      Config("example_experiment.cfg"));
  ASSERT_EQ(std::system(cmd.c_str()), 0);
  EXPECT_TRUE(fs::exists(fs::path(env_dir) / "data.csv"));
}

TEST_F(CliTest, DuplicatedColumnsAreRankFailure) {
  MakeData();
  DataRecord rec = DataRecordFromCsv(ReadTextFile(dir_ / "data.csv"));
  rec.X0.col(2) = rec.X0.col(1);
  rec.X1.col(2) = rec.X1.col(1);
  rec.U.col(2) = rec.U.col(1);
  rec.X0.col(0) = rec.X0.col(1);
  rec.X1.col(0) = rec.X1.col(1);
  rec.U.col(0) = rec.U.col(1);
  WriteTextFile(dir_ / "dup.csv", DataRecordToCsv(rec));
  EXPECT_EQ(Run("rank --data " + Path("dup.csv")), 4);
  EXPECT_EQ(Run(fmt::format("synthesize --data {} -o {}", Path("dup.csv"),
                            dir_.string())),
            4);
}

TEST_F(CliTest, DefaultSynthesisIsInfeasible) {
  MakeData();
  EXPECT_EQ(Run(fmt::format("synthesize --data {} -o {}", Path("data.csv"),
                            dir_.string())),
            3);
  EXPECT_NE(Output().find("margin t*"), std::string::npos) << Output();
  EXPECT_FALSE(fs::exists(dir_ / "controller.txt"));
  EXPECT_EQ(Run(fmt::format("synthesize --model {} -o {}",
                            Config("example_system.cfg"), dir_.string())),
            3);
}

TEST_F(CliTest, LargeMuIsInfeasible) {
  MakeData();
  EXPECT_EQ(Run(fmt::format("synthesize --data {} --mu 1e3 -o {}",
                            Path("data.csv"), dir_.string())),
            3);
}

TEST_F(CliTest, BlowUpDuringExperiment) {
  WriteTextFile(dir_ / "long.cfg",
                "tau = 5\nsamples = 4\nx0 = 1 1\nintegrator_step = 0.001\n"
                "inputs = 1\nu1.offset = 0\n");
  EXPECT_EQ(Run(fmt::format("experiment --system {} --experiment {} -o {}",
                            Config("example_system.cfg"), Path("long.cfg"),
                            dir_.string())),
            2);
}

TEST_F(CliTest, SynthesizeAndVerifyStablePlant) {
  ASSERT_EQ(Run(fmt::format("synthesize --model {} --epsilon 1e-5 -o {}",
                            Config("stable_system.cfg"), dir_.string())),
            0)
      << Output();
  EXPECT_TRUE(fs::exists(dir_ / "controller.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "certificate.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "solver.log"));
  EXPECT_EQ(Run(fmt::format("verify --system {} --controller {} --certificate "
                            "{} -o {}",
                            Config("stable_system.cfg"), Path("controller.txt"),
                            Path("certificate.txt"), dir_.string())),
            0)
      << Output();
  EXPECT_TRUE(fs::exists(dir_ / "verify_report.txt"));
  EXPECT_TRUE(fs::exists(dir_ / "phase_portrait.csv"));
}

TEST_F(CliTest, VerifyZeroController) {
  WriteTextFile(dir_ / "zero1.txt",
                "provenance = user-supplied\nn = 1\nZ = x1\ninputs = 1\nF(1,1) = 0\n");
  EXPECT_EQ(Run(fmt::format("verify --system {} --controller {} --P 1 -o {}",
                            Config("stable_system.cfg"), Path("zero1.txt"),
                            dir_.string())),
            0)
      << Output();
  WriteTextFile(dir_ / "zero2.txt",
                "provenance = user-supplied\nn = 2\nZ = x2, x1^2\ninputs = 1\n"
                "F(1,1) = 0\nF(1,2) = 0\n");
  EXPECT_EQ(Run(fmt::format("verify --system {} --controller {} -o {}",
                            Config("example_system.cfg"), Path("zero2.txt"),
                            dir_.string())),
            5);
  // Dimension mismatch is a usage error.
  EXPECT_EQ(Run(fmt::format("verify --system {} --controller {} -o {}",
                            Config("example_system.cfg"), Path("zero1.txt"),
                            dir_.string())),
            1);
}

TEST_F(CliTest, ExportSdpa) {
  MakeData();
  EXPECT_EQ(Run(fmt::format("export-sdpa --data {} -o {}", Path("data.csv"),
                            dir_.string())),
            0);
  const std::string text = ReadTextFile(dir_ / "problem.dat-s");
  EXPECT_NO_THROW(ParseSdpa(text));
  EXPECT_EQ(Run(fmt::format("export-sdpa --scalar \"x1^4 + 1\" --vars 1 "
                            "--file {}",
                            Path("scalar.dat-s"))),
            0);
  EXPECT_EQ(ParseSdpa(ReadTextFile(dir_ / "scalar.dat-s")).blocks[0].size, 3);
  EXPECT_EQ(Run(fmt::format("export-sdpa --scalar x1 --data {} -o {}",
                            Path("data.csv"), dir_.string())),
            1);
}

TEST_F(CliTest, DeterministicOutputs) {
  ASSERT_EQ(Run(fmt::format("synthesize --model {} --epsilon 1e-5 -o {}",
                            Config("stable_system.cfg"), Path("a"))),
            0);
  ASSERT_EQ(Run(fmt::format("synthesize --model {} --epsilon 1e-5 -o {}",
                            Config("stable_system.cfg"), Path("b"))),
            0);
  for (const char* f : {"controller.txt", "certificate.txt", "solver.log"}) {
    EXPECT_EQ(ReadTextFile(dir_ / "a" / f), ReadTextFile(dir_ / "b" / f)) << f;
  }
}

TEST_F(CliTest, OptionsFile) {
  WriteTextFile(dir_ / "opts.cfg", "epsilon = 0\n");
  MakeData();
  EXPECT_EQ(Run(fmt::format("synthesize --data {} --options {} -o {}",
                            Path("data.csv"), Path("opts.cfg"), dir_.string())),
            0)
      << Output();
  WriteTextFile(dir_ / "bad.cfg", "unknown_key = 1\n");
  EXPECT_EQ(Run(fmt::format("synthesize --data {} --options {} -o {}",
                            Path("data.csv"), Path("bad.cfg"), dir_.string())),
            1);
}

}  // namespace
}  // namespace ddsos
