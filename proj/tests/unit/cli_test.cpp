#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <nlohmann/json.hpp>

namespace fs = std::filesystem;

namespace {

struct Run {
  int code = -1;
  std::string out;
};

Run run(const std::string& args) {
  const std::string cmd = std::string(KC_CLI_PATH) + " " + args + " 2>/dev/null";
  Run r;
  FILE* pipe = popen(cmd.c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = fread(buf, 1, sizeof buf, pipe)) > 0) r.out.append(buf, n);
  const int status = pclose(pipe);
  r.code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

// One small end-to-end workspace shared by the tests below.
class Cli : public ::testing::Test {
 protected:
  static fs::path dir;

  static void SetUpTestSuite() {
    dir = fs::temp_directory_path() / "kc_cli_test";
    fs::remove_all(dir);
    fs::create_directories(dir);
    const std::string d = dir.string();
    const std::string shape = " --width 320 --height 400 --rows-min 8 --rows-max 10 --cols-min 4 --cols-max 6";
    ASSERT_EQ(run("gen-synthetic --ears 3 --seed 1 --out " + d + "/train" + shape).code, 0);
    ASSERT_EQ(run("gen-synthetic --ears 2 --seed 2 --out " + d + "/eval" + shape).code, 0);
    ASSERT_EQ(run("build-patches --images " + d + "/train --negatives 40 --seed 3 --out " + d + "/patches").code, 0);
    ASSERT_EQ(run("train-classifier --manifest " + d + "/patches/manifest.json --iterations 30 --seed 4 --out " + d +
                  "/cls.kcw")
                  .code,
              0);
    ASSERT_EQ(run("train-regressor --manifest " + d + "/patches/manifest.json --iterations 30 --seed 5 --out " + d +
                  "/reg.kcw")
                  .code,
              0);
  }

  static void TearDownTestSuite() { fs::remove_all(dir); }

  static std::string models() { return " --classifier " + (dir / "cls.kcw").string() + " --regressor " + (dir / "reg.kcw").string(); }
};

fs::path Cli::dir;

}  // namespace

TEST_F(Cli, GeneratorWritesImagesAndSidecars) {
  EXPECT_TRUE(fs::exists(dir / "train" / "ear_000.png"));
  EXPECT_TRUE(fs::exists(dir / "train" / "ear_002.png"));
  std::ifstream in(dir / "train" / "ear_000.png.truth.json");
  ASSERT_TRUE(in) << "missing sidecar";
  const auto truth = nlohmann::json::parse(in);
  EXPECT_EQ(truth["visible_count"].get<std::size_t>(), truth["centers"].size());
}

TEST_F(Cli, CountSingleImage) {
  const auto r = run("count --image " + (dir / "eval" / "ear_000.png").string() + models());
  ASSERT_EQ(r.code, 0);
  const auto j = nlohmann::json::parse(r.out);
  EXPECT_EQ(j["visible_count"].get<std::size_t>(), j["detections"].size());
  EXPECT_TRUE(j.contains("seconds"));
  EXPECT_EQ(j["estimated_total"].get<long long>(),
            static_cast<long long>(j["visible_count"].get<double>() * 2.5 + 1e-9));
}

TEST_F(Cli, CountIsDeterministicWithoutTiming) {
  const std::string args = "count --no-timing --image " + (dir / "eval" / "ear_001.png").string() + models();
  const auto a = run(args), b = run(args);
  ASSERT_EQ(a.code, 0);
  EXPECT_EQ(a.out, b.out);
  EXPECT_FALSE(nlohmann::json::parse(a.out).contains("seconds"));
}

TEST_F(Cli, CountDirectoryThenEvaluate) {
  const auto table = dir / "counts.csv";
  const auto r = run("count --no-timing --images " + (dir / "eval").string() + " --out " + table.string() + models());
  ASSERT_EQ(r.code, 0);
  std::ifstream in(table);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "id,predicted,actual");
  const auto ev = run("evaluate --pred " + table.string());
  ASSERT_EQ(ev.code, 0);
  const auto j = nlohmann::json::parse(ev.out);
  EXPECT_TRUE(j.contains("mae"));
  EXPECT_TRUE(j.contains("rmse"));
}

TEST_F(Cli, ConfigFileAndOverride) {
  const auto cfg = dir / "scan.cfg";
  std::ofstream(cfg) << "threshold=1.0\n";
  const std::string base = "count --no-timing --image " + (dir / "eval" / "ear_000.png").string() + models();
  const auto none = run(base + " --config " + cfg.string());
  ASSERT_EQ(none.code, 0);
  EXPECT_EQ(nlohmann::json::parse(none.out)["visible_count"], 0);
  const auto overridden = run(base + " --config " + cfg.string() + " --threshold 0.5");
  ASSERT_EQ(overridden.code, 0);
  EXPECT_EQ(overridden.out, run(base).out);
}

TEST_F(Cli, Errors) {
  EXPECT_EQ(run("no-such-command").code, 1);
  EXPECT_EQ(run("").code, 1);
  EXPECT_EQ(run("count --image " + (dir / "missing.png").string() + models()).code, 2);
  EXPECT_EQ(run("count --image x.png").code, 1);
}
