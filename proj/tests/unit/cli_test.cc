// Copyright 2026 The nglm Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "cli.h"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>
#include <json.hpp>

#include "nglm/corpus.h"
#include "nglm/ngram_stats.h"
#include "oracles.h"
#include "synthetic.h"

namespace nglm {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result Nglm(std::vector<std::string> args) {
  args.insert(args.begin(), "nglm");
  std::ostringstream out, err;
  const int status = cli::Run(args, out, err);
  return {status, out.str(), err.str()};
}

std::string Slurp(const fs::path &path) {
  std::ifstream in(path, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

class CliTest : public ::testing::Test {
 protected:
  void SetUp() override {
    const char *root = std::getenv("NGLM_TEST_TMP");
    dir_ = fs::path(root ? root : fs::temp_directory_path().string()) /
           ::testing::UnitTest::GetInstance()->current_test_info()->name();
    fs::remove_all(dir_);
    fs::create_directories(dir_);
  }

  std::string Write(const std::string &name, const std::string &text) {
    const fs::path p = dir_ / name;
    std::ofstream(p) << text;
    return p.string();
  }
  std::string Path(const std::string &name) const { return (dir_ / name).string(); }

  fs::path dir_;
};

constexpr const char *kTrain =
    "the cat sat on the mat\nthe dog sat on the log\na cat and a dog\n";
constexpr const char *kTest = "the cat sat on the log\na dog sat\n";

TEST_F(CliTest, KneserNeyPipelineMatchesOracle) {
  const std::string train = Write("train.txt", kTrain);
  const std::string test = Write("test.txt", kTest);
  ASSERT_EQ(Nglm({"vocab", "--train", train, "--output", Path("vocab.txt")}).status, 0);
  Result r = Nglm({"counts", "--vocab", Path("vocab.txt"), "--input", train,
                  "--output", Path("counts.txt"), "--order", "5"});
  ASSERT_EQ(r.status, 0) << r.err;
  r = Nglm({"train-backoff", "--vocab", Path("vocab.txt"), "--counts",
           Path("counts.txt"), "--smoothing", "kn", "--order", "5", "--output",
           Path("kn5.arpa")});
  ASSERT_EQ(r.status, 0) << r.err;
  r = Nglm({"eval", "--vocab", Path("vocab.txt"), "--model", Path("kn5.arpa"),
           "--test", test});
  ASSERT_EQ(r.status, 0) << r.err;
  const json report = json::parse(r.out);

  const Vocabulary vocab = testing::VocabFromText(kTrain);
  const CorpusStream train_corpus = testing::CorpusFromText(
      kTrain, vocab, BoundaryMode::kSentenceIndependent);
  const CorpusStream test_corpus = testing::CorpusFromText(
      kTest, vocab, BoundaryMode::kSentenceIndependent);
  const testing::BruteBackoff oracle(ExtractWindows(train_corpus, 5),
                                     vocab.size());
  const WindowSequence windows = ExtractWindows(test_corpus, 5);
  double ll = 0.0;
  for (std::size_t i = 0; i < windows.size(); ++i) {
    ll += std::log(oracle.KneserNey(windows[i].context, windows[i].target));
  }
  const double expected = std::exp(-ll / static_cast<double>(windows.size()));
  EXPECT_EQ(report["num_tokens"].get<std::size_t>(), 11u);
  EXPECT_NEAR(report["perplexity"].get<double>(), expected, 1e-4 * expected);
  EXPECT_EQ(report["boundary"], "independent");
}

TEST_F(CliTest, CorruptedArpaReportsLine) {
  const std::string train = Write("train.txt", kTrain);
  Nglm({"vocab", "--train", train, "--output", Path("vocab.txt")});
  const std::string arpa = Write("bad.arpa",
                                 "\\data\\\nngram 1=2\n\n\\1-grams:\n"
                                 "-1.0\t<unk>\nnot-a-number\t</s>\n\n\\end\\\n");
  const Result r = Nglm({"eval", "--vocab", Path("vocab.txt"), "--model", arpa,
                        "--test", train});
  EXPECT_NE(r.status, 0);
  const json err = json::parse(r.err);
  EXPECT_EQ(err["error"], "parse_error");
  EXPECT_NE(err["message"].get<std::string>().find("line 6"), std::string::npos)
      << r.err;
  EXPECT_EQ(std::count(r.err.begin(), r.err.end(), '\n'), 1);
}

TEST_F(CliTest, SeededTrainingIsByteIdentical) {
  const std::string train = Write("train.txt", kTrain);
  const std::string dev = Write("dev.txt", kTest);
  Nglm({"vocab", "--train", train, "--output", Path("vocab.txt")});
  for (const char *run : {"a", "b"}) {
    const std::string ckpt = Path(std::string("nn_") + run + ".ckpt");
    Result r = Nglm({"train-nn", "--vocab", Path("vocab.txt"), "--train", train,
                    "--dev", dev, "--output", ckpt, "--order", "3", "--family",
                    "lstm", "--dim-embed", "4", "--dim-state", "4", "--epochs",
                    "2", "--keep-prob", "0.8", "--seed", "7", "--deterministic"});
    ASSERT_EQ(r.status, 0) << r.err;
    r = Nglm({"eval", "--vocab", Path("vocab.txt"), "--model", ckpt, "--test",
             dev, "--output", Path(std::string("report_") + run + ".json")});
    ASSERT_EQ(r.status, 0) << r.err;
    r = Nglm({"train-recurrent", "--vocab", Path("vocab.txt"), "--train", train,
             "--dev", dev, "--output", Path(std::string("rec_") + run + ".ckpt"),
             "--dim-embed", "4", "--dim-state", "4", "--epochs", "2",
             "--segment-length", "4", "--batch", "2", "--seed", "7"});
    ASSERT_EQ(r.status, 0) << r.err;
  }
  EXPECT_EQ(Slurp(Path("nn_a.ckpt")), Slurp(Path("nn_b.ckpt")));
  EXPECT_EQ(Slurp(Path("report_a.json")), Slurp(Path("report_b.json")));
  EXPECT_EQ(Slurp(Path("rec_a.ckpt")), Slurp(Path("rec_b.ckpt")));
  EXPECT_EQ(Slurp(Path("nn_a.ckpt.log.jsonl")), Slurp(Path("nn_b.ckpt.log.jsonl")));
  const json meta = json::parse(Slurp(Path("nn_a.ckpt.json")));
  EXPECT_EQ(meta["kind"], "ngram");
  EXPECT_EQ(meta["config"]["order"], 3);
}

TEST_F(CliTest, HelpListsEveryFlag) {
  Result r = Nglm({"train-nn", "--help"});
  EXPECT_EQ(r.status, 0);
  for (const char *flag :
       {"--order", "--boundary", "--regime", "--variant", "--decay", "--family",
        "--layers", "--dim-embed", "--dim-state", "--keep-prob", "--optimizer",
        "--lr", "--clip-norm", "--epochs", "--seed", "--float", "--batch",
        "--config"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  r = Nglm({"train-recurrent", "--help"});
  EXPECT_EQ(r.status, 0);
  for (const char *flag : {"--segment-length", "--reset-at-bos", "--batch"}) {
    EXPECT_NE(r.out.find(flag), std::string::npos) << flag;
  }
  r = Nglm({"--help"});
  EXPECT_EQ(r.status, 0);
  for (const char *cmd : {"vocab", "counts", "train-backoff", "train-nn",
                          "train-recurrent", "eval", "hit-ratio"}) {
    EXPECT_NE(r.out.find(cmd), std::string::npos) << cmd;
  }
}

TEST_F(CliTest, FlagsOverrideConfigFile) {
  const std::string train = Write("train.txt", kTrain);
  const std::string dev = Write("dev.txt", kTest);
  Nglm({"vocab", "--train", train, "--output", Path("vocab.txt")});
  const std::string config = Write(
      "config.json",
      R"({"order": 3, "epochs": 3, "family": "ff", "dim-embed": 4, "dim-state": 4})");
  const Result r = Nglm({"train-nn", "--config", config, "--vocab",
                        Path("vocab.txt"), "--train", train, "--dev", dev,
                        "--output", Path("m.ckpt"), "--epochs", "1"});
  ASSERT_EQ(r.status, 0) << r.err;
  const json meta = json::parse(Slurp(Path("m.ckpt.json")));
  EXPECT_EQ(meta["config"]["order"], 3);
  EXPECT_EQ(meta["config"]["epochs"], 1);
  EXPECT_EQ(meta["config"]["family"], "ff");
  std::istringstream log(Slurp(Path("m.ckpt.log.jsonl")));
  std::string line;
  int lines = 0;
  while (std::getline(log, line)) ++lines;
  EXPECT_EQ(lines, 1);
}

TEST_F(CliTest, ErrorsAreSingleJsonLines) {
  const std::string train = Write("train.txt", kTrain);
  Result r = Nglm({"vocab", "--train", Path("missing.txt"), "--output",
                  Path("v.txt")});
  EXPECT_EQ(r.status, 1);
  EXPECT_EQ(json::parse(r.err)["error"], "io_error");

  r = Nglm({"no-such-command"});
  EXPECT_EQ(r.status, 2);
  EXPECT_EQ(json::parse(r.err)["error"], "usage_error");

  const std::string config = Write("bad.json", R"({"not-a-flag": 1})");
  Nglm({"vocab", "--train", train, "--output", Path("vocab.txt")});
  r = Nglm({"counts", "--config", config, "--vocab", Path("vocab.txt"),
           "--input", train, "--output", Path("c.txt")});
  EXPECT_NE(r.status, 0);
  EXPECT_NO_THROW(json::parse(r.err));

  r = Nglm({"counts", "--vocab", Path("vocab.txt"), "--input", train,
           "--output", Path("c.txt"), "--boundary", "sideways"});
  EXPECT_NE(r.status, 0);
  EXPECT_EQ(json::parse(r.err)["error"], "validation_error");
}

TEST_F(CliTest, HitRatioAndCountsAreIdempotent) {
  const std::string train = Write("train.txt", kTrain);
  const std::string test = Write("test.txt", kTest);
  Nglm({"vocab", "--train", train, "--output", Path("vocab.txt")});
  for (const char *name : {"c1.txt", "c2.txt"}) {
    ASSERT_EQ(Nglm({"counts", "--vocab", Path("vocab.txt"), "--input", train,
                   "--output", Path(name), "--order", "3", "--workers", "2"})
                  .status,
              0);
  }
  EXPECT_EQ(Slurp(Path("c1.txt")), Slurp(Path("c2.txt")));
  const Result r = Nglm({"hit-ratio", "--counts", Path("c1.txt"), "--vocab",
                        Path("vocab.txt"), "--test", test, "--order", "3"});
  ASSERT_EQ(r.status, 0) << r.err;
  const json j = json::parse(r.out);
  ASSERT_EQ(j["hit_ratios"].size(), 3u);
  EXPECT_NEAR(j["hit_ratios"][0].get<double>(), 100.0, 1e-9);
}

}  // namespace
}  // namespace nglm
