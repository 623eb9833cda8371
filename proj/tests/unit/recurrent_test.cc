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

#include "nglm/recurrent_lm.h"

#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "gradcheck.h"
#include "nglm/error.h"
#include "synthetic.h"

namespace nglm {
namespace {

using nn::Matrix;
using testing::CorpusFromText;
using testing::RelativeError;
using testing::VocabFromText;

std::vector<WordId> Iota(std::size_t n) {
  std::vector<WordId> v(n);
  for (std::size_t i = 0; i < n; ++i) v[i] = static_cast<WordId>(3 + i % 5);
  return v;
}

TEST(PlanSegments, EvenLayout) {
  const auto tokens = Iota(100);
  const SegmentPlan plan = PlanSegments(tokens, 10, 2);
  EXPECT_EQ(plan.stream_length, 50u);
  EXPECT_EQ(plan.num_segments(), 5u);
  EXPECT_EQ(plan.dropped, 0u);
  std::vector<WordId> stream0;
  for (std::size_t k = 0; k < plan.num_segments(); ++k) {
    const SegmentBatch seg = plan.Segment(k);
    EXPECT_EQ(seg.length, 10);
    EXPECT_EQ(seg.batch, 2);
    for (int t = 0; t < seg.length; ++t) stream0.push_back(seg.targets[t * 2]);
  }
  EXPECT_EQ(stream0, std::vector<WordId>(tokens.begin(), tokens.begin() + 50));
  const auto s1 = plan.StreamTargets(1);
  EXPECT_EQ(std::vector<WordId>(s1.begin(), s1.end()),
            std::vector<WordId>(tokens.begin() + 50, tokens.end()));
}

TEST(PlanSegments, RemainderIsDroppedAndShortSegmentKept) {
  const auto tokens = Iota(101);
  const SegmentPlan plan = PlanSegments(tokens, 10, 2);
  EXPECT_EQ(plan.dropped, 1u);
  const SegmentPlan ragged = PlanSegments(tokens, 7, 2);
  EXPECT_EQ(ragged.num_segments(), 8u);
  EXPECT_EQ(ragged.Segment(7).length, 1);
  EXPECT_THROW(ragged.Segment(8), ValidationError);
}

TEST(PlanSegments, InputsArePredecessors) {
  const auto tokens = Iota(20);
  const SegmentPlan plan = PlanSegments(tokens, 4, 2);
  const SegmentBatch first = plan.Segment(0);
  EXPECT_EQ(first.inputs[0], kEosId);             // stream 0, step 0
  EXPECT_EQ(first.inputs[1], tokens[9]);          // stream 1, step 0
  EXPECT_EQ(first.inputs[2 * 2 + 0], tokens[1]);  // stream 0, step 2
  EXPECT_EQ(first.targets[2 * 2 + 1], tokens[12]);
}

TEST(PlanSegments, RejectsBadArguments) {
  const auto tokens = Iota(5);
  EXPECT_THROW(PlanSegments(tokens, 0, 1), ValidationError);
  EXPECT_THROW(PlanSegments(tokens, 3, 0), ValidationError);
  EXPECT_THROW(PlanSegments(tokens, 3, 6), ValidationError);
}

RecurrentConfig Tiny() {
  RecurrentConfig c;
  c.embed_dim = 3;
  c.state_dim = 4;
  c.init_stddev = 0.5;
  c.seed = 5;
  return c;
}

// Loss of 'second' from the state left by 'first', as a function of the
// current parameter values.
double TwoSegmentLoss(const RecurrentLm &model, const SegmentBatch &first,
                      const SegmentBatch &second) {
  RecurrentState state = model.ZeroState(first.batch);
  model.SegmentLoss(first, &state, nn::Mode::kEval, nullptr);
  return model.SegmentLoss(second, &state, nn::Mode::kEval, nullptr);
}

TEST(RecurrentLm, GradientStopsAtSegmentEdge) {
  for (int layers : {1, 2}) {
    RecurrentConfig c = Tiny();
    c.num_layers = layers;
    RecurrentLm model(c, 8);
    const SegmentPlan plan = PlanSegments(Iota(24), 4, 2);
    const SegmentBatch s0 = plan.Segment(0), s1 = plan.Segment(1);
    RecurrentState incoming = model.ZeroState(2);
    model.SegmentLoss(s0, &incoming, nn::Mode::kEval, nullptr);

    nn::ParameterStore &store = model.parameters();
    store.ZeroGrad();
    RecurrentState state = incoming;
    model.TrainStep(s1, &state, nullptr);

    double frozen_err = 0.0, linked_err = 0.0;
    for (nn::Parameter &p : store.parameters()) {
      const Matrix analytic = p.grad;
      const Matrix frozen = testing::NumericGradient(&p.value, [&] {
        RecurrentState s = incoming;
        return model.SegmentLoss(s1, &s, nn::Mode::kEval, nullptr);
      });
      const Matrix linked = testing::NumericGradient(
          &p.value, [&] { return TwoSegmentLoss(model, s0, s1); });
      frozen_err = std::max(frozen_err, RelativeError(analytic, frozen));
      if (p.name != "O" && p.name != "O_bias") {
        linked_err = std::max(linked_err, RelativeError(analytic, linked));
      }
    }
    EXPECT_LT(frozen_err, 1e-6) << layers << " layers";
    EXPECT_GT(linked_err, 1e-4) << layers << " layers";
  }
}

TEST(RecurrentLm, SingleStepSegmentsStillCarryState) {
  RecurrentLm model(Tiny(), 8);
  const SegmentPlan plan = PlanSegments(Iota(6), 1, 1);
  RecurrentState state = model.ZeroState(1);
  nn::Rng rng(1);
  model.parameters().ZeroGrad();
  model.TrainStep(plan.Segment(0), &state, &rng);
  EXPECT_GT(state.h[0].norm(), 0.0);
  EXPECT_GT(state.c[0].norm(), 0.0);
}

TEST(RecurrentLm, CarriedChunksMatchOnePass) {
  RecurrentConfig c = Tiny();
  c.num_layers = 2;
  const RecurrentLm model(c, 8);
  const auto tokens = Iota(53);
  for (StatePolicy policy :
       {StatePolicy::kCarryForever, StatePolicy::kResetAtSentenceStart}) {
    const auto whole = model.StreamLogProbs(tokens, policy, 0);
    const auto chunked = model.StreamLogProbs(tokens, policy, 7);
    ASSERT_EQ(whole.size(), tokens.size());
    const double a = std::accumulate(whole.begin(), whole.end(), 0.0);
    const double b = std::accumulate(chunked.begin(), chunked.end(), 0.0);
    EXPECT_NEAR(a, b, 1e-9);
  }
}

TEST(RecurrentLm, ResetMakesSentencesIndependentOfOrder) {
  const std::string text = "a b c\nd e\nb a\n";
  const Vocabulary vocab = VocabFromText(text);
  const RecurrentLm model(Tiny(), vocab.size());
  const CorpusStream forward = CorpusFromText(text, vocab, BoundaryMode::kStraddling);
  const CorpusStream backward =
      CorpusFromText("b a\nd e\na b c\n", vocab, BoundaryMode::kStraddling);
  const auto lp1 = model.StreamLogProbs(forward.Flatten(),
                                        StatePolicy::kResetAtSentenceStart);
  const auto lp2 = model.StreamLogProbs(backward.Flatten(),
                                        StatePolicy::kResetAtSentenceStart);
  // "a b c </s>" is first in one order and last in the other.
  for (int i = 0; i < 4; ++i) EXPECT_EQ(lp1[i], lp2[lp2.size() - 4 + i]);
  for (int i = 0; i < 3; ++i) EXPECT_EQ(lp1[lp1.size() - 3 + i], lp2[i]);

  const auto carry1 = model.StreamLogProbs(forward.Flatten(),
                                           StatePolicy::kCarryForever);
  const auto carry2 = model.StreamLogProbs(backward.Flatten(),
                                           StatePolicy::kCarryForever);
  EXPECT_EQ(carry1[0], lp1[0]);
  EXPECT_NE(carry1[4], lp1[4]);
  EXPECT_NE(carry2[lp2.size() - 4], carry1[0]);
}

TEST(RecurrentLm, EvaluateReportsStreamBoundary) {
  const std::string text = "a b\nb a c\n";
  const Vocabulary vocab = VocabFromText(text);
  const RecurrentLm model(Tiny(), vocab.size());
  const CorpusStream corpus =
      CorpusFromText(text, vocab, BoundaryMode::kSentenceIndependent);
  const EvalReport report = model.Evaluate(corpus, StatePolicy::kCarryForever);
  EXPECT_EQ(report.boundary, "stream");
  EXPECT_EQ(report.num_tokens, 7u);
  const auto lp = model.StreamLogProbs(corpus.Flatten(), StatePolicy::kCarryForever);
  const double total = std::accumulate(lp.begin(), lp.end(), 0.0);
  EXPECT_NEAR(report.cross_entropy, -total / 7.0, 1e-12);
  EXPECT_THROW(model.Evaluate(CorpusStream(), StatePolicy::kCarryForever),
               EmptyCorpusError);
}

TEST(RecurrentLm, CarryBeatsResetWithCrossSentenceStructure) {
  std::string text;
  for (int i = 0; i < 120; ++i) text += "a b c\nd e\nf\n";
  const Vocabulary vocab = VocabFromText(text);
  const CorpusStream corpus =
      CorpusFromText(text, vocab, BoundaryMode::kSentenceIndependent);
  auto train = [&](StatePolicy policy) {
    RecurrentConfig c;
    c.embed_dim = 8;
    c.state_dim = 16;
    c.epochs = 8;
    c.segment_length = 10;
    c.batch_size = 4;
    c.policy = policy;
    c.optimizer = {nn::AdagradConfig{0.3, 0.1}, 5.0};
    RecurrentLm model(c, vocab.size());
    return TrainRecurrent(model, corpus, corpus).best_dev_ppl;
  };
  const double carry = train(StatePolicy::kCarryForever);
  const double reset = train(StatePolicy::kResetAtSentenceStart);
  EXPECT_LE(carry, reset);
}

TEST(RecurrentLm, TrainingIsDeterministic) {
  const std::string text = testing::RandomText(1, 40, 6, 2, 7);
  const Vocabulary vocab = VocabFromText(text);
  const CorpusStream corpus =
      CorpusFromText(text, vocab, BoundaryMode::kSentenceIndependent);
  RecurrentConfig c = Tiny();
  c.epochs = 2;
  c.keep_prob = 0.8;
  c.segment_length = 5;
  c.batch_size = 3;
  RecurrentLm a(c, vocab.size()), b(c, vocab.size());
  std::vector<EpochLog> log;
  const TrainResult ra = TrainRecurrent(a, corpus, corpus,
                                        [&](const EpochLog &e) { log.push_back(e); });
  TrainRecurrent(b, corpus, corpus);
  EXPECT_TRUE(a.parameters().SameValues(b.parameters()));
  EXPECT_EQ(log.size(), 2u);
  EXPECT_EQ(ra.log.size(), 2u);
}

TEST(RecurrentLm, ConfigJsonRoundTrip) {
  RecurrentConfig c = Tiny();
  c.policy = StatePolicy::kResetAtSentenceStart;
  c.segment_length = 20;
  c.optimizer = {nn::AdagradConfig{0.2, 0.05}, 2.0};
  const RecurrentConfig back = RecurrentConfigFromJson(ConfigToJson(c));
  EXPECT_EQ(ConfigToJson(back), ConfigToJson(c));
  EXPECT_EQ(back.policy, StatePolicy::kResetAtSentenceStart);
  EXPECT_THROW(RecurrentConfigFromJson(R"({"segment_length": 3, "x": 1})"),
               ValidationError);
  EXPECT_EQ(ParseStatePolicy("reset"), StatePolicy::kResetAtSentenceStart);
  EXPECT_THROW(ParseStatePolicy("sometimes"), ValidationError);
}

TEST(RecurrentLm, AdoptedParametersAreChecked) {
  const RecurrentLm model(Tiny(), 8);
  EXPECT_THROW(RecurrentLm(Tiny(), 9, model.parameters()), ValidationError);
  const RecurrentLm copy(Tiny(), 8, model.parameters());
  const auto tokens = Iota(10);
  EXPECT_EQ(copy.StreamLogProbs(tokens, StatePolicy::kCarryForever),
            model.StreamLogProbs(tokens, StatePolicy::kCarryForever));
}

}  // namespace
}  // namespace nglm
