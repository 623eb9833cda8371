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

#include "nglm/eval.h"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "nglm/backoff_lm.h"
#include "nglm/error.h"
#include "synthetic.h"

namespace nglm {
namespace {

using testing::CorpusFromText;
using testing::VocabFromText;

class TableScorer : public NGramScorer {
 public:
  explicit TableScorer(std::vector<double> probs) : probs_(std::move(probs)) {}
  int order() const override { return 2; }
  std::size_t vocab_size() const override { return probs_.size(); }
  std::string Describe() const override { return "table"; }
  double Prob(std::span<const WordId>, WordId w) const override {
    return probs_[static_cast<std::size_t>(w)];
  }

 private:
  std::vector<double> probs_;
};

// P(w | h) depends on whether the previous word is <pad>.
class PadAwareScorer : public NGramScorer {
 public:
  int order() const override { return 2; }
  std::size_t vocab_size() const override { return 4; }
  std::string Describe() const override { return "pad-aware"; }
  double Prob(std::span<const WordId> h, WordId) const override {
    return h[0] == kPadId ? 0.5 : 0.25;
  }
};

struct Fixture {
  Vocabulary vocab;
  CorpusStream train;
  CorpusStream test;
};

Fixture MakeFixture(BoundaryMode mode) {
  const std::string train_text = testing::RandomText(1, 200, 12, 3, 9);
  Fixture f{VocabFromText(train_text), {}, {}};
  f.train = CorpusFromText(train_text, f.vocab, mode);
  f.test = CorpusFromText(testing::RandomText(2, 170, 14, 3, 9), f.vocab, mode);
  return f;
}

TEST(Perplexity, UniformModelGivesVocabularySize) {
  const Fixture f = MakeFixture(BoundaryMode::kSentenceIndependent);
  const UniformScorer uniform(f.vocab.size(), 3);
  const EvalReport r = EvaluatePerplexity(uniform, f.test);
  EXPECT_NEAR(r.perplexity, static_cast<double>(f.vocab.size()),
              1e-12 * f.vocab.size());
  EXPECT_NEAR(r.cross_entropy, std::log(static_cast<double>(f.vocab.size())),
              1e-12);
  EXPECT_EQ(r.num_tokens, f.test.num_tokens());
}

TEST(Perplexity, TwoTokenHandFixture) {
  const Vocabulary vocab = VocabFromText("a\n");
  // <unk>, </s>, <pad>, a
  const TableScorer model({0.25, 0.25, 0.0, 0.5});
  const CorpusStream corpus =
      CorpusFromText("a\n", vocab, BoundaryMode::kSentenceIndependent);
  const EvalReport r = EvaluatePerplexity(model, corpus);
  EXPECT_EQ(r.num_tokens, 2u);
  EXPECT_NEAR(r.perplexity, std::sqrt(8.0), 1e-12);
  EXPECT_NEAR(r.perplexity, 2.828427, 1e-6);
}

TEST(Perplexity, ReportIdentities) {
  const Fixture f = MakeFixture(BoundaryMode::kSentenceIndependent);
  const ContextStats stats = Accumulate(ExtractWindows(f.train, 3));
  const ArpaModel kn = EstimateKneserNey(stats, f.vocab, 3);
  const EvalReport r = EvaluatePerplexity(kn, f.test);
  EXPECT_NEAR(r.perplexity, std::exp(r.cross_entropy), 1e-12 * r.perplexity);
  EXPECT_NEAR(r.bits_per_token, r.cross_entropy / std::log(2.0), 1e-12);
  EXPECT_GE(r.perplexity, 1.0);
  EXPECT_EQ(r.boundary, "independent");
  EXPECT_NEAR(r.oov_rate, OovRate(f.test), 0.0);
  EXPECT_EQ(r.model, kn.Describe());
  const EvalReport own = EvaluatePerplexity(kn, f.train);
  EXPECT_GE(own.perplexity, 1.0);
  EXPECT_LT(own.perplexity, r.perplexity);
}

TEST(Perplexity, ContextsFollowBoundaryMode) {
  const Vocabulary vocab = VocabFromText("a\n");
  const std::string text = "a\na\n";
  const PadAwareScorer model;
  const double independent = CorpusLogLikelihood(
      model, CorpusFromText(text, vocab, BoundaryMode::kSentenceIndependent));
  const double straddle = CorpusLogLikelihood(
      model, CorpusFromText(text, vocab, BoundaryMode::kStraddling));
  EXPECT_NEAR(independent, 2 * std::log(0.5) + 2 * std::log(0.25), 1e-12);
  EXPECT_NEAR(straddle, std::log(0.5) + 3 * std::log(0.25), 1e-12);
}

TEST(Perplexity, ZeroProbabilityIsAnError) {
  const Vocabulary vocab = VocabFromText("a b\n");
  // <unk>, </s>, <pad>, a, b; b gets nothing.
  const TableScorer model({0.2, 0.4, 0.0, 0.4, 0.0});
  const CorpusStream corpus =
      CorpusFromText("a\na b\n", vocab, BoundaryMode::kSentenceIndependent);
  try {
    CorpusLogLikelihood(model, corpus);
    FAIL() << "expected a numerical error";
  } catch (const NumericalError &e) {
    const std::string message = e.what();
    EXPECT_NE(message.find("sentence 2"), std::string::npos) << message;
    EXPECT_NE(message.find("token 2"), std::string::npos) << message;
  }
}

TEST(Perplexity, EmptyCorpusIsAnError) {
  const UniformScorer uniform(5, 2);
  EXPECT_THROW(EvaluatePerplexity(uniform, CorpusStream()), EmptyCorpusError);
}

TEST(Perplexity, WorkersAndOrderDoNotMatter) {
  for (BoundaryMode mode :
       {BoundaryMode::kSentenceIndependent, BoundaryMode::kStraddling}) {
    const Fixture f = MakeFixture(mode);
    const ContextStats stats = Accumulate(ExtractWindows(f.train, 4));
    const ArpaModel kn = EstimateKneserNey(stats, f.vocab, 4);
    const double one = CorpusLogLikelihood(kn, f.test, 1);
    EXPECT_EQ(CorpusLogLikelihood(kn, f.test, 4), one);
    EXPECT_EQ(CorpusLogLikelihood(kn, f.test, 3), one);
    if (mode == BoundaryMode::kSentenceIndependent) {
      std::vector<Sentence> shuffled = f.test.sentences();
      std::mt19937_64 rng(3);
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      CorpusStream reordered(mode);
      for (auto &s : shuffled) reordered.Add(s);
      EXPECT_NEAR(CorpusLogLikelihood(kn, reordered), one, 1e-9 * std::abs(one));
    }
  }
}

TEST(Perplexity, RemovingASentenceIsIncremental) {
  const Fixture f = MakeFixture(BoundaryMode::kSentenceIndependent);
  const ArpaModel katz =
      EstimateKatz(Accumulate(ExtractWindows(f.train, 3)), f.vocab, 3);
  const double full = CorpusLogLikelihood(katz, f.test);
  const std::size_t k = 17;
  CorpusStream without(BoundaryMode::kSentenceIndependent);
  CorpusStream only(BoundaryMode::kSentenceIndependent);
  for (std::size_t i = 0; i < f.test.num_sentences(); ++i) {
    (i == k ? only : without).Add(f.test.sentences()[i]);
  }
  EXPECT_NEAR(CorpusLogLikelihood(katz, without) + CorpusLogLikelihood(katz, only),
              full, 1e-9 * std::abs(full));
  EXPECT_EQ(without.num_tokens() + only.num_tokens(), f.test.num_tokens());
}

TEST(CrossEntropy, WindowAndStatsPathsAgree) {
  for (BoundaryMode mode :
       {BoundaryMode::kSentenceIndependent, BoundaryMode::kStraddling}) {
    const Fixture f = MakeFixture(mode);
    ASSERT_GE(f.test.num_tokens(), 1000u);
    for (int order : {2, 3, 5}) {
      const ArpaModel kn =
          EstimateKneserNey(Accumulate(ExtractWindows(f.train, order)), f.vocab,
                            order);
      const WindowSequence test_windows = ExtractWindows(f.test, order);
      const double from_windows = CrossEntropyFromWindows(kn, test_windows);
      const double from_stats =
          CrossEntropyFromStats(kn, Accumulate(test_windows));
      EXPECT_NEAR(from_stats, from_windows, 1e-10 * from_windows);
      EXPECT_NEAR(std::exp(from_windows), EvaluatePerplexity(kn, f.test).perplexity,
                  1e-9 * std::exp(from_windows));
    }
  }
}

TEST(CrossEntropy, UniformIsLogV) {
  const Fixture f = MakeFixture(BoundaryMode::kSentenceIndependent);
  const UniformScorer uniform(f.vocab.size(), 2);
  const WindowSequence w = ExtractWindows(f.test, 2);
  EXPECT_NEAR(CrossEntropyFromWindows(uniform, w),
              std::log(static_cast<double>(f.vocab.size())), 1e-12);
  EXPECT_NEAR(CrossEntropyFromStats(uniform, Accumulate(w)),
              std::log(static_cast<double>(f.vocab.size())), 1e-12);
}

TEST(EvalReport, JsonAndTable) {
  EvalReport r = MakeReport(-10.0, 5, 0.2, "straddle", "kn 3-gram");
  r.hit_ratios = {100.0, 50.0, std::nan("")};
  const std::string json = r.ToJson();
  for (const char *key : {"\"perplexity\"", "\"cross_entropy\"",
                          "\"bits_per_token\"", "\"num_tokens\"", "\"oov_rate\"",
                          "\"boundary\"", "\"hit_ratios\"", "\"model\""}) {
    EXPECT_NE(json.find(key), std::string::npos) << key;
  }
  EXPECT_NE(json.find("null"), std::string::npos);
  EXPECT_EQ(json.find('\n'), std::string::npos);
  EXPECT_NEAR(r.perplexity, std::exp(2.0), 1e-12);
  const std::string table = r.ToTable();
  EXPECT_NE(table.find("perplexity"), std::string::npos);
  EXPECT_NE(table.find("straddle"), std::string::npos);
}

}  // namespace
}  // namespace nglm
