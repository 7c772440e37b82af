#include <sys/wait.h>

#include <cstdio>
#include <filesystem>

#include <gtest/gtest.h>

#include "osal/io.hpp"
#include "osal/pipeline.hpp"

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run osal_cli(const std::string& args) {
  const std::string cmd = std::string(OSAL_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t got;
  while ((got = fread(buf, 1, sizeof(buf), pipe)) > 0) r.out.append(buf, got);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

std::string slurp(const fs::path& p) { return osal::detail::read_file(p); }

class Cli : public ::testing::Test {
 protected:
  void SetUp() override {
    dir_ = fs::temp_directory_path() /
           ("osal_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }
  void TearDown() override { fs::remove_all(dir_); }

  std::string d(const std::string& name) const { return (dir_ / name).string(); }

  // Small three-component mixture used by the pipeline tests.
  void synth_small() {
    ASSERT_EQ(osal_cli("synth --k 3 --n-per-cluster 30 --dim 4 --seed 5 --out-dir " + d("") + " --name mix").code, 0);
  }

  fs::path dir_;
};

const std::string kSmallSweep = "--k-min 2 --k-max 5 --n-seeds 6 --master-seed 31 --threads 2";

}  // namespace

TEST_F(Cli, SynthWritesBothFormatsAndTruth) {
  const auto r = osal_cli("synth --k 7 --n-per-cluster 300 --dim 32 --seed 1 --out-dir " + d("a"));
  ASSERT_EQ(r.code, 0);
  EXPECT_NE(r.out.find("\"n\":2100"), std::string::npos) << r.out;
  const auto bin = osal::load_features(d("a/features.osf1"));
  const auto csv = osal::load_features(d("a/features.csv"));
  EXPECT_EQ(bin.n(), 2100u);
  EXPECT_EQ(bin.d(), 32u);
  EXPECT_TRUE(bin == csv);
  EXPECT_EQ(osal::load_labels(d("a/features.truth.csv")).labels.size(), 2100u);

  ASSERT_EQ(osal_cli("synth --k 7 --n-per-cluster 300 --dim 32 --seed 1 --out-dir " + d("b")).code, 0);
  EXPECT_EQ(slurp(d("a/features.osf1")), slurp(d("b/features.osf1")));
}

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(osal_cli("synth --k 0 --out-dir " + d("")).code, 2);
  EXPECT_EQ(osal_cli("").code, 2);
  EXPECT_EQ(osal_cli("frobnicate").code, 2);
  synth_small();
  EXPECT_EQ(osal_cli("select-k --input " + d("mix.osf1") + " --k-min 6 --k-max 4 --out-dir " + d("o")).code, 2);
  EXPECT_FALSE(fs::exists(d("o/k_selection.json")));
}

TEST_F(Cli, DataErrorsExitThree) {
  osal::write_file(d("bad.csv"), "id,f0\na,1\nb,nan\n");
  EXPECT_EQ(osal_cli("select-k --input " + d("bad.csv") + " --out-dir " + d("o")).code, 3);
  EXPECT_EQ(osal_cli("select-k --input " + d("missing.osf1") + " --out-dir " + d("o")).code, 3);
}

TEST_F(Cli, MetricsOnLabelFiles) {
  osal::write_file(d("a.csv"), "id,label\nx0,0\nx1,0\nx2,0\nx3,1\nx4,1\nx5,1\n");
  osal::write_file(d("b.csv"), "id,label\nx0,0\nx1,0\nx2,1\nx3,1\nx4,2\nx5,2\n");
  auto same = osal_cli("metrics --labels-a " + d("a.csv") + " --labels-b " + d("a.csv"));
  ASSERT_EQ(same.code, 0);
  EXPECT_EQ(osal::json::parse(same.out).at("adjusted_rand_index").get<double>(), 1.0);

  auto fixture = osal_cli("metrics --labels-a " + d("a.csv") + " --labels-b " + d("b.csv"));
  ASSERT_EQ(fixture.code, 0);
  const auto doc = osal::json::parse(fixture.out);
  EXPECT_DOUBLE_EQ(doc.at("adjusted_rand_index").get<double>(), 8.0 / 33.0);
  EXPECT_DOUBLE_EQ(doc.at("rand_index").get<double>(), 2.0 / 3.0);
}

TEST_F(Cli, MetricsAlignsById) {
  osal::write_file(d("a.csv"), "id,label\nx0,0\nx1,0\nx2,1\nx3,1\n");
  osal::write_file(d("b.csv"), "id,label\nx3,7\nx1,5\nx0,5\nx2,7\n");
  const auto r = osal_cli("metrics --labels-a " + d("a.csv") + " --labels-b " + d("b.csv"));
  ASSERT_EQ(r.code, 0);
  EXPECT_EQ(osal::json::parse(r.out).at("adjusted_rand_index").get<double>(), 1.0);
}

TEST_F(Cli, MetricsSilhouette) {
  osal::write_file(d("f.csv"), "id,f0\np0,0\np1,1\np2,5\np3,6\n");
  osal::write_file(d("two.csv"), "id,label\np0,0\np1,0\np2,1\np3,1\n");
  osal::write_file(d("one.csv"), "id,label\np0,0\np1,0\np2,0\np3,0\n");
  const auto r = osal_cli("metrics --labels-a " + d("two.csv") + " --input " + d("f.csv") + " --silhouette");
  ASSERT_EQ(r.code, 0);
  EXPECT_DOUBLE_EQ(osal::json::parse(r.out).at("silhouette").get<double>(), 79.0 / 99.0);
  EXPECT_NE(osal_cli("metrics --labels-a " + d("one.csv") + " --input " + d("f.csv") + " --silhouette").code, 0);
}

TEST_F(Cli, PipelineIndivisibleBudgetWritesNothing) {
  synth_small();
  const auto r = osal_cli("pipeline --input " + d("mix.osf1") + " " + kSmallSweep + " --budget 50 --epochs 2 --out-dir " +
                          d("run"));
  EXPECT_EQ(r.code, 4);
  EXPECT_FALSE(fs::exists(d("run/assignment.json")));
  EXPECT_FALSE(fs::exists(d("run/manifest.json")));
}

TEST_F(Cli, PipelineIsDeterministic) {
  synth_small();
  const std::string args = "pipeline --input " + d("mix.osf1") + " " + kSmallSweep + " --budget 12 --epochs 5 --out-dir ";
  ASSERT_EQ(osal_cli(args + d("r1")).code, 0);
  std::string serial = args + d("r2");
  serial.replace(serial.find("--threads 2"), 11, "--threads 1");
  ASSERT_EQ(osal_cli(serial).code, 0);
  for (const auto& name : {"k_selection.json", "sweep_log.json", "assignment.json", "labels.csv", "selection.json",
                           "schedule.json", "manifest.json"})
    EXPECT_EQ(slurp(d("r1/") + name), slurp(d("r2/") + name)) << name;
}

TEST_F(Cli, StagesComposeToThePipeline) {
  synth_small();
  const std::string in = " --input " + d("mix.osf1");
  ASSERT_EQ(osal_cli("pipeline" + in + " " + kSmallSweep + " --budget 12 --epochs 4 --out-dir " + d("whole")).code, 0);
  ASSERT_EQ(osal_cli("select-k" + in + " " + kSmallSweep + " --out-dir " + d("parts")).code, 0);
  ASSERT_EQ(osal_cli("cluster" + in + " --report " + d("parts/k_selection.json") + " --out-dir " + d("parts")).code, 0);
  ASSERT_EQ(osal_cli("sample" + in + " --assignment " + d("parts/assignment.json") + " --budget 12 --out-dir " +
                     d("parts")).code, 0);
  ASSERT_EQ(osal_cli("schedule --selection " + d("parts/selection.json") +
                     " --epochs 4 --master-seed 31 --out-dir " + d("parts")).code, 0);
  for (const auto& name :
       {"k_selection.json", "sweep_log.json", "assignment.json", "labels.csv", "selection.json", "schedule.json"})
    EXPECT_EQ(slurp(d("whole/") + name), slurp(d("parts/") + name)) << name;

  const auto manifest = osal::json::parse(slurp(d("whole/manifest.json")));
  for (const auto& a : manifest.at("artifacts"))
    EXPECT_EQ(a.at("sha256").get<std::string>(), osal::sha256_hex(slurp(d("whole/") + a.at("file").get<std::string>())));
}

TEST_F(Cli, CsvAndBinaryInputsAgree) {
  synth_small();
  ASSERT_EQ(osal_cli("select-k --input " + d("mix.osf1") + " " + kSmallSweep + " --out-dir " + d("b")).code, 0);
  ASSERT_EQ(osal_cli("select-k --input " + d("mix.csv") + " --format csv " + kSmallSweep + " --out-dir " + d("c")).code, 0);
  EXPECT_EQ(slurp(d("b/k_selection.json")), slurp(d("c/k_selection.json")));
}
