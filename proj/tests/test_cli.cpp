#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "cli_pipeline.hpp"
#include "test_util.hpp"

using namespace passlab;
using namespace passlab::testing;
namespace fs = std::filesystem;

TEST(Cli, UsageErrorsExitOne) {
  EXPECT_EQ(run_cli({}).code, kExitUsage);
  EXPECT_EQ(run_cli({"bogus"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"features", "--no-such-flag"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"features", "--n", "two"}).code, kExitUsage);
  // Required input missing from both flags and config.
  EXPECT_EQ(run_cli({"train"}).code, kExitUsage);
  EXPECT_EQ(run_cli({"--help"}).code, kExitOk);
}

TEST(Cli, DataErrorsExitTwo) {
  const auto dir = temp_dir("cli_data");
  const auto r = run_cli({"features", "--matches", (dir / "nowhere").string(), "--out", (dir / "f.csv").string()});
  EXPECT_EQ(r.code, kExitData);
  EXPECT_NE(r.err.find("nowhere"), std::string::npos);

  std::ofstream(dir / "bad.cfg") << "feature.n = 3\nnot.a.key = 1\n";
  const auto c = run_cli({"synth", "--config", (dir / "bad.cfg").string(), "--out", (dir / "m").string()});
  EXPECT_EQ(c.code, kExitData);
  EXPECT_NE(c.err.find("line 2"), std::string::npos) << c.err;

  std::ofstream(dir / "broken.csv") << "label,x\n1,2,3\n";
  EXPECT_EQ(run_cli({"train", "--features", (dir / "broken.csv").string(), "--out", (dir / "m.txt").string()}).code,
            kExitData);
  // Invalid parameter values are reported as bad input, not crashes.
  EXPECT_EQ(run_cli({"features", "--n", "0", "--matches", dir.string(), "--out", (dir / "f.csv").string()}).code, kExitData);
}

TEST(Cli, PipelineWritesArtifactsAndManifests) {
  const auto dir = temp_dir("cli_pipeline");
  const auto r = run_pipeline(dir, "5");
  ASSERT_EQ(r.code, 0) << r.err;
  for (const char* f : {"matches/m1/tracking.jsonl", "matches/m1/events.jsonl", "matches/m1/ground_truth.jsonl",
                        "matches/m1/manifest.json", "features.csv", "features.csv.medians.json",
                        "features.csv.manifest.json", "model.txt", "model.txt.manifest.json", "eval.txt",
                        "eval.txt.manifest.json", "shap/shap_summary.csv", "shap/shap_rows.csv", "shap/manifest.json",
                        "svg/frame_000000.svg", "svg/frame_000002.svg", "svg/manifest.json", "anim/animation.svg"}) {
    EXPECT_TRUE(fs::exists(dir / f)) << f;
  }
  std::ifstream in(dir / "model.txt.manifest.json");
  const auto m = nlohmann::json::parse(in);
  EXPECT_EQ(m["command"], "train");
  EXPECT_EQ(m["seed"], 5);
  EXPECT_EQ(m["inputs"]["features.csv"], sha256_file((dir / "features.csv").string()));
  EXPECT_EQ(m["outputs"]["model.txt"], sha256_file((dir / "model.txt").string()));
  EXPECT_EQ(m["config_sha256"], sha256_hex(m["config"].get<std::string>()));

  const std::string eval = snapshot(dir)["eval.txt"];
  EXPECT_NE(eval.find("Accuracy  Precision  Recall  F1 Score"), std::string::npos);
}

TEST(Cli, InputsAreNotModified) {
  const auto dir = temp_dir("cli_inputs");
  ASSERT_EQ(run_pipeline(dir, "6").code, 0);
  const auto before = snapshot(dir);
  const auto p = [&](const char* rel) { return (dir / rel).string(); };
  ASSERT_EQ(run_cli({"eval", "--model", p("model.txt"), "--features", p("features.csv"), "--out", p("eval2.txt")}).code,
            0);
  ASSERT_EQ(run_cli({"sync", "--match", p("matches/m1"), "--out", p("synced.jsonl")}).code, 0);
  ASSERT_EQ(run_cli({"segment", "--match", p("matches/m1"), "--out", p("sequences.json")}).code, 0);
  const auto after = snapshot(dir);
  for (const auto& [name, bytes] : before) {
    ASSERT_TRUE(after.count(name)) << name;
    EXPECT_EQ(after.at(name), bytes) << name;
  }
}

TEST(Cli, SameSeedSameBytes) {
  const auto a = temp_dir("cli_det_a");
  const auto b = temp_dir("cli_det_b");
  ASSERT_EQ(run_pipeline(a, "9").code, 0);
  ASSERT_EQ(run_pipeline(b, "9").code, 0);
  EXPECT_EQ(snapshot(a), snapshot(b));
}

TEST(Cli, Sha256) {
  EXPECT_EQ(sha256_hex(""), "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  EXPECT_EQ(sha256_hex("abc"), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}
