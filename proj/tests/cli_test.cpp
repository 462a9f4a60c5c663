#include "bident/cli.hpp"

#include <cstdlib>
#include <sstream>

#include <gtest/gtest.h>
#include <nlohmann/json.hpp>

#include "fake_nli_server.hpp"
#include "test_support.hpp"

namespace bident::cli {
namespace {

namespace fs = std::filesystem;

const fs::path kData = BIDENT_TEST_DATA_DIR;

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  std::ostringstream out;
  std::ostringstream err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

std::string data(const std::string& name) { return (kData / name).string(); }

class CliTest : public ::testing::Test {
 protected:
  void TearDown() override { unsetenv("BIDENT_NLI_ENDPOINT"); }
  testing::TempDir dir_;
};

TEST_F(CliTest, VersionAndHelp) {
  EXPECT_EQ(invoke({"--version"}).code, 0);
  EXPECT_EQ(invoke({"--help"}).code, 0);
  EXPECT_EQ(invoke({}).code, kExitInput);
  EXPECT_EQ(invoke({"frobnicate"}).code, kExitInput);
  EXPECT_EQ(invoke({"score", "--data", data("synthetic.jsonl")}).code, kExitInput);
}

TEST_F(CliTest, ScoreWritesOutputsAndManifest) {
  const auto out = dir_ / "score";
  const auto r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  const auto systems = testing::slurp(out / "system_scores.bident.jsonl");
  EXPECT_EQ(std::count(systems.begin(), systems.end(), '\n'), 8);
  const auto segments = testing::slurp(out / "segments.bident.jsonl");
  EXPECT_EQ(std::count(segments.begin(), segments.end(), '\n'), 400);

  const auto manifest = nlohmann::json::parse(testing::slurp(out / "run.json"));
  EXPECT_EQ(manifest["command"], "score");
  EXPECT_EQ(manifest["backend"]["model_id"], "mock-v1");
  EXPECT_EQ(manifest["config"]["norm"], "none");
  EXPECT_EQ(manifest["inputs"].size(), 1u);
  EXPECT_EQ(manifest["outputs"].size(), 2u);
  EXPECT_EQ(manifest["inputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(CliTest, ScoreIsDeterministicAcrossScheduling) {
  std::vector<std::string> seen;
  for (const auto& conc : {"1", "4", "16"}) {
    for (const auto& batch : {"1", "32"}) {
      const auto out = dir_ / (std::string("run-") + conc + "-" + batch);
      const auto r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", out.string(),
                             "--concurrency", conc, "--batch-size", batch});
      ASSERT_EQ(r.code, 0) << r.err;
      seen.push_back(testing::slurp(out / "segments.bident.jsonl") +
                     testing::slurp(out / "system_scores.bident.jsonl") +
                     testing::slurp(out / "run.json"));
    }
  }
  for (const auto& s : seen) EXPECT_EQ(s, seen.front());
}

TEST_F(CliTest, ScoreRejectsBadInput) {
  testing::spit(dir_ / "bad.jsonl", "{not json}\n");
  auto r = invoke({"score", "--data", (dir_ / "bad.jsonl").string(), "--out",
                   (dir_ / "o").string()});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("line 1"), std::string::npos) << r.err;
  EXPECT_FALSE(fs::exists(dir_ / "o" / "run.json"));

  r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", (dir_ / "o").string(),
              "--norm", "zscore"});
  EXPECT_EQ(r.code, kExitInput);
  r = invoke({"score", "--data", (dir_ / "missing.jsonl").string(), "--out",
              (dir_ / "o").string()});
  EXPECT_EQ(r.code, kExitInput);
}

TEST_F(CliTest, ScoreConfigFillsUnsetFlags) {
  testing::spit(dir_ / "cfg.json", R"({"norm":"minmax","concurrency":2})");
  const auto a = dir_ / "a";
  auto r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", a.string(), "--config",
                   (dir_ / "cfg.json").string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(testing::slurp(a / "run.json"))["config"]["norm"], "minmax");

  const auto b = dir_ / "b";
  r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", b.string(), "--config",
              (dir_ / "cfg.json").string(), "--norm", "max"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_EQ(nlohmann::json::parse(testing::slurp(b / "run.json"))["config"]["norm"], "max");

  testing::spit(dir_ / "bad.json", "[1,2]");
  r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", b.string(), "--config",
              (dir_ / "bad.json").string()});
  EXPECT_EQ(r.code, kExitInput);
}

TEST_F(CliTest, ScoreWithCacheReusesClassifications) {
  const auto cache = (dir_ / "cache.jsonl").string();
  const auto a = dir_ / "a";
  const auto b = dir_ / "b";
  ASSERT_EQ(invoke({"score", "--data", data("synthetic.jsonl"), "--out", a.string(), "--cache",
                    cache}).code,
            0);
  const auto size_after_first = fs::file_size(cache);
  EXPECT_GT(size_after_first, 0u);
  ASSERT_EQ(invoke({"score", "--data", data("synthetic.jsonl"), "--out", b.string(), "--cache",
                    cache}).code,
            0);
  EXPECT_EQ(fs::file_size(cache), size_after_first);
  EXPECT_EQ(testing::slurp(a / "segments.bident.jsonl"), testing::slurp(b / "segments.bident.jsonl"));
}

TEST_F(CliTest, ScoreAgainstRemoteBackend) {
  testing::FakeNliServer server;
  const auto out = dir_ / "remote";
  auto r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", out.string(), "--backend",
                   "remote", "--endpoint", server.endpoint()});
  ASSERT_EQ(r.code, 0) << r.err;
  // the fake server applies the mock formula, so scores agree with the mock run
  const auto mock_out = dir_ / "mock";
  ASSERT_EQ(invoke({"score", "--data", data("synthetic.jsonl"), "--out", mock_out.string()}).code, 0);
  EXPECT_EQ(testing::slurp(out / "segments.bident.jsonl"),
            testing::slurp(mock_out / "segments.bident.jsonl"));

  r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", (dir_ / "dead").string(),
              "--backend", "remote", "--endpoint", testing::dead_endpoint(), "--timeout-ms", "500"});
  EXPECT_EQ(r.code, kExitBackend);
  EXPECT_FALSE(fs::exists(dir_ / "dead" / "segments.bident.jsonl"));

  r = invoke({"score", "--data", data("synthetic.jsonl"), "--out", (dir_ / "none").string(),
              "--backend", "remote"});
  EXPECT_EQ(r.code, kExitInput);
}

TEST_F(CliTest, BaselineMetrics) {
  const auto out = dir_ / "base";
  auto r = invoke({"baseline", "--data", data("synthetic.jsonl"), "--metrics", "bleu,wer,per,ter",
                   "--out", out.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  for (const auto* m : {"bleu", "wer", "per", "ter"}) {
    EXPECT_TRUE(fs::exists(out / (std::string("system_scores.") + m + ".jsonl"))) << m;
  }
  r = invoke({"baseline", "--data", data("synthetic.jsonl"), "--metrics", "nist", "--out",
              (dir_ / "nist").string()});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("unsupported metric"), std::string::npos);
}

TEST_F(CliTest, EvaluateReportsAndCompares) {
  const auto scored = dir_ / "scored";
  const auto base = dir_ / "base";
  ASSERT_EQ(invoke({"score", "--data", data("synthetic.jsonl"), "--out", scored.string()}).code, 0);
  ASSERT_EQ(invoke({"baseline", "--data", data("synthetic.jsonl"), "--metrics", "bleu,ter", "--out",
                    base.string()})
                .code,
            0);
  const auto eval = dir_ / "eval";
  const auto r = invoke({"evaluate", "--scores", (scored / "system_scores.bident.jsonl").string(),
                         (base / "system_scores.bleu.jsonl").string(),
                         (base / "system_scores.ter.jsonl").string(), "--human",
                         data("synthetic_human.jsonl"), "--compare", "bident,bleu", "--out",
                         eval.string()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("SpearmanAvg"), std::string::npos);
  const auto report = nlohmann::json::parse(testing::slurp(eval / "report.json"));
  ASSERT_EQ(report["reports"].size(), 2u);
  EXPECT_EQ(report["reports"][0]["lang_pair"], "de-en");
  EXPECT_EQ(report["reports"][0]["rows"].size(), 3u);
  EXPECT_EQ(report["negated_metrics"], nlohmann::json::array({"ter"}));
  EXPECT_EQ(report["comparison"]["test"]["df"], 1);
  for (const auto& rep : report["reports"]) {
    for (const auto& row : rep["rows"]) EXPECT_DOUBLE_EQ(row["spearman"].get<double>(), 1.0);
  }
  EXPECT_EQ(testing::slurp(eval / "report.txt"), r.out);
}

TEST_F(CliTest, EvaluateErrors) {
  testing::spit(dir_ / "scores.jsonl",
                R"({"system":"sys-a","lang_pair":"de-en","metric":"bident","value":1.0,"n":1})"
                "\n");
  const auto r = invoke({"evaluate", "--scores", (dir_ / "scores.jsonl").string(), "--human",
                         data("synthetic_human.jsonl"), "--out", (dir_ / "e").string()});
  EXPECT_EQ(r.code, kExitInput);
  EXPECT_NE(r.err.find("sys-b"), std::string::npos) << r.err;
}

TEST_F(CliTest, ConvertRoundTripsAndIsIdempotent) {
  testing::spit(dir_ / "cand.txt", "the cat sat\na dog ran\n");
  testing::spit(dir_ / "ref.txt", "the cat sat down\na dog was running\n");
  const auto out1 = dir_ / "c1";
  const auto out2 = dir_ / "c2";
  for (const auto& out : {out1, out2}) {
    const auto r = invoke({"convert", "--candidates", (dir_ / "cand.txt").string(), "--references",
                           (dir_ / "ref.txt").string(), "--system", "my-sys", "--lang-pair",
                           "de-en", "--out", out.string()});
    ASSERT_EQ(r.code, 0) << r.err;
  }
  const auto converted = testing::slurp(out1 / "my-sys.de-en.jsonl");
  EXPECT_EQ(converted, testing::slurp(out2 / "my-sys.de-en.jsonl"));
  EXPECT_EQ(testing::slurp(out1 / "run.json"), testing::slurp(out2 / "run.json"));

  const auto scored = dir_ / "s";
  const auto r = invoke({"score", "--data", (out1 / "my-sys.de-en.jsonl").string(), "--out",
                         scored.string()});
  EXPECT_EQ(r.code, 0) << r.err;

  testing::spit(dir_ / "short.txt", "only one line\n");
  EXPECT_EQ(invoke({"convert", "--candidates", (dir_ / "short.txt").string(), "--references",
                    (dir_ / "ref.txt").string(), "--system", "x", "--lang-pair", "de-en", "--out",
                    (dir_ / "c3").string()})
                .code,
            kExitInput);
}

TEST_F(CliTest, NliPing) {
  auto r = invoke({"nli", "ping"});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("model_id: mock-v1"), std::string::npos);

  testing::FakeNliServer server;
  r = invoke({"nli", "ping", "--backend", "remote", "--endpoint", server.endpoint()});
  ASSERT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.out.find("model_id: fake-mnli"), std::string::npos);

  setenv("BIDENT_NLI_ENDPOINT", server.endpoint().c_str(), 1);
  r = invoke({"nli", "ping", "--backend", "remote"});
  EXPECT_EQ(r.code, 0) << r.err;

  r = invoke({"nli", "ping", "--backend", "remote", "--endpoint", testing::dead_endpoint(),
              "--timeout-ms", "500"});
  EXPECT_EQ(r.code, kExitBackend);
  EXPECT_NE(r.err.find("backend error"), std::string::npos);
}

}  // namespace
}  // namespace bident::cli
