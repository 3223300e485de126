#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "gradshare_cli_test";

int run(const std::string& args, std::string* out = nullptr) {
  const auto log = (kDir / "stdout.txt").string();
  const auto cmd = std::string(GRADSHARE_CLI) + " " + args + " > " + log + " 2> " + (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  if (out) {
    std::ifstream in(log);
    std::stringstream ss;
    ss << in.rdbuf();
    *out = ss.str();
  }
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string path(const std::string& name) { return (kDir / name).string(); }

void write(const std::string& name, const std::string& text) { std::ofstream(path(name)) << text; }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
};

const char* kTiny =
    "epochs = 2\niterations_per_epoch = 5\ninner_steps = 2\ntask_batch = 2\nhidden_sizes = 16\nval_episodes = 10\n"
    "top_n = 2\n";

}  // namespace

TEST_F(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run(""), 1);
  EXPECT_EQ(run("no-such-command"), 1);
  EXPECT_EQ(run("meta-train --seed 1"), 1);
  EXPECT_EQ(run("meta-train --config " + path("missing.txt") + " --seed 1 --out " + path("x")), 1);
}

TEST_F(Cli, UnknownConfigKeyExitsOne) {
  write("bad.txt", "inner_stepz = 2\n");
  EXPECT_EQ(run("meta-train --config " + path("bad.txt") + " --seed 1 --out " + path("bad")), 1);
}

TEST_F(Cli, TrainTestCompareAndPlot) {
  write("og.txt", std::string(kTiny) + "grad_share = false\n");
  write("gs.txt", kTiny);
  ASSERT_EQ(run("meta-train --config " + path("og.txt") + " --seed 2 --out " + path("og")), 0);
  ASSERT_EQ(run("meta-train --config " + path("gs.txt") + " --seed 2 --out " + path("gs")), 0);
  ASSERT_EQ(run("make-episodes --dist gaussian-classes:meta-test --count 8 --seed 3 --out " + path("ep.bin")), 0);

  std::string out;
  EXPECT_EQ(run("meta-test --checkpoint " + path("gs/final.gsck") + " --episodes " + path("ep.bin"), &out), 0);
  EXPECT_NE(out.find("accuracy"), std::string::npos);
  EXPECT_EQ(run("meta-test --ensemble " + path("gs/checkpoints") + " --top 2 --episodes " + path("ep.bin")), 0);
  EXPECT_EQ(run("meta-test --episodes " + path("ep.bin")), 1);

  EXPECT_EQ(run("compare --baseline " + path("og") + " --gradshare " + path("gs"), &out), 0);
  EXPECT_NE(out.find("speedup_percent"), std::string::npos);
  EXPECT_EQ(run("plot --runs " + path("og") + " " + path("gs") + " --out " + path("plots")), 0);
  EXPECT_TRUE(fs::exists(path("plots/val_accuracy.csv")));
  EXPECT_EQ(run("compare --baseline " + path("og") + " --gradshare " + path("nowhere")), 1);
}

TEST_F(Cli, CorruptEpisodeFileExitsOne) {
  write("junk.bin", "EPIS\x01");
  ASSERT_EQ(run("make-episodes --dist gaussian-classes --count 1 --seed 1 --out " + path("one.bin")), 0);
  EXPECT_EQ(run("make-episodes --dist volcano --count 1 --seed 1 --out " + path("v.bin")), 1);
  EXPECT_EQ(run("meta-test --checkpoint " + path("one.bin") + " --episodes " + path("junk.bin")), 1);
}

TEST_F(Cli, DivergenceExitsTwo) {
  write("nan.txt",
        "family = sinusoid\nepochs = 2\niterations_per_epoch = 3\ninner_lr = 1e6\nval_episodes = 4\nhidden_sizes = 20\n");
  EXPECT_EQ(run("meta-train --config " + path("nan.txt") + " --seed 1 --out " + path("nan")), 2);
  EXPECT_TRUE(fs::exists(path("nan/metrics.jsonl")));
}

TEST_F(Cli, OracleCheck) {
  EXPECT_EQ(run("oracle-check --case ema-closed-form"), 0);
  EXPECT_EQ(run("oracle-check --case ema-closed-form --tol 0"), 1);
  EXPECT_EQ(run("oracle-check --case nope"), 1);
}
