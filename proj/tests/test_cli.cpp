#include "rcl/csv.hpp"
#include "rcl/datagen.hpp"
#include "rcl/identify.hpp"

#include <gtest/gtest.h>

#include <sys/wait.h>

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

using namespace rcl;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

class Cli : public ::testing::Test {
 protected:
  fs::path dir;

  void SetUp() override {
    dir = fs::temp_directory_path() /
          (std::string("rcl_cli_") + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  void TearDown() override { fs::remove_all(dir); }

  Result run(const std::string& args, const std::string& env = "") {
    const fs::path out = dir / "stdout.txt", err = dir / "stderr.txt";
    const std::string cmd = "cd '" + dir.string() + "' && env -u RCL_SEED " + env + " '" RCL_CLI "' " + args + " >'" +
                            out.string() + "' 2>'" + err.string() + "'";
    const int status = std::system(cmd.c_str());
    Result r;
    r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    return r;
  }
};

}  // namespace

TEST_F(Cli, HelpAndVersion) {
  const Result help = run("--help");
  EXPECT_EQ(help.code, 0);
  for (const char* flag : {"--binarizer", "--seed", "--jobs", "--max-path-len", "--epochs", "--config"})
    EXPECT_NE(help.out.find(flag), std::string::npos) << flag;
  EXPECT_EQ(run("--version").code, 0);
}

TEST_F(Cli, MissingSubcommandIsUsageError) { EXPECT_EQ(run("").code, 1); }

TEST_F(Cli, GenerateWritesDatasetLayout) {
  const Result r = run("--length 10 -o data generate");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"spec.json", "x_p.csv", "x_k.csv", "labels.csv", "truth_learned.csv", "known.csv"})
    EXPECT_TRUE(fs::exists(dir / "data" / f)) << f;
  const RealMatrix xp = read_real_csv(dir / "data" / "x_p.csv");
  EXPECT_EQ(xp.rows(), 7);
  EXPECT_EQ(xp.cols(), 10);
  EXPECT_NE(r.out.find("density"), std::string::npos);
  EXPECT_EQ(read_dataset(dir / "data").length(), 10);
}

TEST_F(Cli, GenerateIsIdempotent) {
  ASSERT_EQ(run("--length 50 --seed 4 -o data generate").code, 0);
  const std::string first = slurp(dir / "data" / "x_k.csv");
  ASSERT_EQ(run("--length 50 --seed 4 -o data generate").code, 0);
  EXPECT_EQ(slurp(dir / "data" / "x_k.csv"), first);
}

TEST_F(Cli, InvalidSpecFileIsSchemaError) {
  std::ofstream(dir / "bad.json") << "{\"dims\": 3}";
  const Result r = run("--spec bad.json -o data generate");
  EXPECT_NE(r.code, 0);
  EXPECT_NE(r.err.find("schema"), std::string::npos) << r.err;
  std::ofstream(dir / "broken.json") << "{ not json";
  EXPECT_NE(run("--spec broken.json -o data generate").code, 0);
}

TEST_F(Cli, UnknownBinarizerPrintsUsage) {
  const Result r = run("--binarizer wat --n-runs 1 --epochs 2 sweep");
  EXPECT_EQ(r.code, 1);
  EXPECT_NE(r.err.find("usage"), std::string::npos) << r.err;
}

TEST_F(Cli, UnknownFlagIsUsageError) { EXPECT_EQ(run("--frobnicate generate").code, 1); }

TEST_F(Cli, MissingDatasetIsRuntimeError) {
  const Result r = run("train --data nowhere --epochs 1");
  EXPECT_EQ(r.code, 2);
  EXPECT_NE(r.err.find("i/o"), std::string::npos) << r.err;
}

TEST_F(Cli, BadSeedEnvironmentIsConfigError) {
  EXPECT_EQ(run("--length 10 -o data generate", "RCL_SEED=abc").code, 1);
}

TEST_F(Cli, SeedFlagBeatsEnvironment) {
  ASSERT_EQ(run("--length 20 --seed 5 -o a generate", "RCL_SEED=9").code, 0);
  ASSERT_EQ(run("--length 20 --seed 5 -o b generate").code, 0);
  ASSERT_EQ(run("--length 20 -o c generate", "RCL_SEED=9").code, 0);
  EXPECT_EQ(slurp(dir / "a" / "x_p.csv"), slurp(dir / "b" / "x_p.csv"));
  EXPECT_NE(slurp(dir / "a" / "x_p.csv"), slurp(dir / "c" / "x_p.csv"));
}

TEST_F(Cli, TrainWritesModelAndTrace) {
  ASSERT_EQ(run("--length 200 -o data generate").code, 0);
  const Result r = run("--epochs 7 -o model train --data data");
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_TRUE(fs::exists(dir / "model" / "model.json"));
  const std::string trace = slurp(dir / "model" / "trace.csv");
  EXPECT_EQ(trace.substr(0, trace.find('\n')).substr(0, 34), "run_id,epoch,loss,accuracy,auc,alp");
  EXPECT_EQ(std::count(trace.begin(), trace.end(), '\n'), 8);
}

TEST_F(Cli, UntrainedDetectionRunsAndKeepsDirectConflicts) {
  ASSERT_EQ(run("--length 200 -o data generate").code, 0);
  ASSERT_EQ(run("--epochs 0 -o model train --data data").code, 0);
  const Result r = run("-o det detect --data data --model model/model.json");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"scores.csv", "learned_adjacency.csv", "full_adjacency.csv", "conflicts.csv"})
    EXPECT_TRUE(fs::exists(dir / "det" / f)) << f;
  const ConflictModelSpec spec = default_topology();
  const ConflictSet found = read_conflicts_csv(dir / "det" / "conflicts.csv", spec.dims);
  for (const Conflict& c : ground_truth_conflicts(spec).of_kind(ConflictKind::Direct)) EXPECT_TRUE(found.contains(c));
}

TEST_F(Cli, FullyTrainedDetectionRecoversGroundTruth) {
  const Result r = run("--epochs 500 -o det detect");
  ASSERT_EQ(r.code, 0) << r.err;
  const ConflictModelSpec spec = default_topology();
  EXPECT_EQ(read_conflicts_csv(dir / "det" / "conflicts.csv", spec.dims), ground_truth_conflicts(spec));
}

TEST_F(Cli, DetectRejectsSeveralBinarizers) {
  EXPECT_EQ(run("--binarizer sparsemax --binarizer topk:2 --epochs 1 --length 20 detect").code, 1);
}

TEST_F(Cli, SweepSmokeIsFastCompleteAndDeterministic) {
  const auto start = std::chrono::steady_clock::now();
  const Result r = run("--n-runs 3 --epochs 50 -o s1 sweep");
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_LT(secs, 60.0);
  const std::string csv = slurp(dir / "s1" / "sweep.csv");
  EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 1 + 3 * 50 * 4);
  ASSERT_EQ(run("--n-runs 3 --epochs 50 -o s2 sweep").code, 0);
  EXPECT_EQ(slurp(dir / "s2" / "sweep.csv"), csv);
  EXPECT_EQ(slurp(dir / "s2" / "summary.csv"), slurp(dir / "s1" / "summary.csv"));

  const Result rep = run("-o s1 report");
  ASSERT_EQ(rep.code, 0) << rep.err;
  EXPECT_NE(rep.out.find("median_epochs"), std::string::npos);
  EXPECT_NE(rep.out.find("sparsemax"), std::string::npos);
}

TEST_F(Cli, ConfigFileWithFlagOverride) {
  std::ofstream(dir / "cfg.json") << R"({"length": 30, "output_dir": "fromcfg", "seed": 2})";
  ASSERT_EQ(run("--config cfg.json generate").code, 0);
  EXPECT_EQ(read_real_csv(dir / "fromcfg" / "x_p.csv").cols(), 30);
  ASSERT_EQ(run("--config cfg.json --length 12 generate").code, 0);
  EXPECT_EQ(read_real_csv(dir / "fromcfg" / "x_p.csv").cols(), 12);
}
