// Copyright 2026 The ChronoSteer Authors
// SPDX-License-Identifier: Apache-2.0

#include <gtest/gtest.h>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace {

namespace fs = std::filesystem;

const fs::path kWork = fs::temp_directory_path() / "chronosteer_cli_test";

int run(const std::string& args) {
  const std::string cmd = std::string(CHRONOSTEER_CLI_PATH) + " " + args + " > " +
                          (kWork / "stdout.txt").string() + " 2> " + (kWork / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string path(const std::string& name) { return (kWork / name).string(); }

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    fs::remove_all(kWork);
    fs::create_directories(kWork);
  }
  const std::string config = std::string("--config ") + CHRONOSTEER_SOURCE_DIR + "/tests/data/tiny_config.json";
};

TEST_F(Cli, UsageErrorsExitTwo) {
  EXPECT_EQ(run(""), 2);
  EXPECT_EQ(run("eval"), 2);
  EXPECT_EQ(run("eval --checkpoint " + path("missing.ckpt")), 2);
  EXPECT_EQ(run("datagen-pt --frobnicate"), 2);
  EXPECT_EQ(run("datagen-pt --config " + path("missing.json") + " --out " + path("x.jsonl")), 2);
  EXPECT_EQ(run("--help"), 0);
}

TEST_F(Cli, TinyPipelineRunsAndIsDeterministic) {
  auto pipeline = [&](const std::string& tag) {
    ASSERT_EQ(run("datagen-pt " + config + " --out " + path(tag + "pt.jsonl")), 0) << slurp(kWork / "stderr.txt");
    ASSERT_EQ(run("pretrain-backbone " + config + " --data " + path(tag + "pt.jsonl") + " --out " +
                  path(tag + "bb.ckpt")),
              0)
        << slurp(kWork / "stderr.txt");
    ASSERT_EQ(run("train-stage1 " + config + " --checkpoint " + path(tag + "bb.ckpt") + " --data " +
                  path(tag + "pt.jsonl") + " --out " + path(tag + "s1.ckpt") + " --report " +
                  path(tag + "s1.json")),
              0)
        << slurp(kWork / "stderr.txt");
    ASSERT_EQ(run("datagen-ft " + config + " --checkpoint " + path(tag + "s1.ckpt") + " --out " +
                  path(tag + "ft.jsonl")),
              0)
        << slurp(kWork / "stderr.txt");
    ASSERT_EQ(run("train-stage2 " + config + " --checkpoint " + path(tag + "s1.ckpt") + " --data " +
                  path(tag + "ft.jsonl") + " --out " + path(tag + "s2.ckpt")),
              0)
        << slurp(kWork / "stderr.txt");
    ASSERT_EQ(run("eval " + config + " --checkpoint " + path(tag + "s2.ckpt") + " --out " +
                  path(tag + "eval.json") + " --table " + path(tag + "eval.txt")),
              0)
        << slurp(kWork / "stderr.txt");
  };
  pipeline("a_");
  pipeline("b_");
  const std::string a = slurp(kWork / "a_eval.json");
  ASSERT_FALSE(a.empty());
  EXPECT_EQ(a, slurp(kWork / "b_eval.json"));
  EXPECT_EQ(slurp(kWork / "a_s2.ckpt"), slurp(kWork / "b_s2.ckpt"));
  EXPECT_NE(slurp(kWork / "a_eval.txt").find("steered"), std::string::npos);

  ASSERT_EQ(run("inspect " + path("a_s2.ckpt")), 0);
  EXPECT_NE(slurp(kWork / "stdout.txt").find("trainable_fraction"), std::string::npos);
  EXPECT_EQ(run("inspect " + path("a_pt.jsonl")), 1);
}

}  // namespace
