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

#ifndef NGLM_RECURRENT_LM_H_
#define NGLM_RECURRENT_LM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nglm/corpus.h"
#include "nglm/eval.h"
#include "nglm/ngram_trainer.h"
#include "nglm/nn/optimizer.h"
#include "nglm/nn/parameters.h"
#include "nglm/nn/tensor.h"

namespace nglm {

enum class StatePolicy { kCarryForever, kResetAtSentenceStart };

std::string_view ToString(StatePolicy policy);
StatePolicy ParseStatePolicy(std::string_view text);  // carry|reset

struct RecurrentConfig {
  int embed_dim = 32;
  int state_dim = 32;
  int num_layers = 1;
  double keep_prob = 1.0;
  double init_stddev = 0.1;
  nn::OptimizerConfig optimizer{nn::ScheduledSgdConfig{}, 5.0};
  int epochs = 10;
  int segment_length = 35;
  int batch_size = 20;
  StatePolicy policy = StatePolicy::kCarryForever;
  std::uint64_t seed = 1;

  void Validate() const;
};

std::string ConfigToJson(const RecurrentConfig &config);
RecurrentConfig RecurrentConfigFromJson(std::string_view json);

// One time-major slice of the segment plan: entry [t * batch + b] is step t
// of stream b.
struct SegmentBatch {
  int length = 0;
  int batch = 0;
  std::vector<WordId> inputs;
  std::vector<WordId> targets;
};

// The token stream laid out row-major into 'batch' streams of equal length.
// Every kept token is a target once; the input of a token is its
// predecessor in the corpus, and </s> for the very first token.
struct SegmentPlan {
  int segment_length = 0;
  int batch = 0;
  std::size_t stream_length = 0;
  std::size_t dropped = 0;  // trailing tokens that did not fill a row
  std::vector<WordId> inputs;   // batch x stream_length, row-major
  std::vector<WordId> targets;

  std::size_t num_segments() const;
  // Segment k; the last one may be shorter than segment_length.
  SegmentBatch Segment(std::size_t k) const;
  std::span<const WordId> StreamTargets(int b) const;
};

SegmentPlan PlanSegments(std::span<const WordId> tokens, int segment_length,
                         int batch);

// Per-layer cell and hidden states, each s x B.
struct RecurrentState {
  std::vector<nn::Matrix> c;
  std::vector<nn::Matrix> h;
};

class RecurrentLm {
 public:
  RecurrentLm(const RecurrentConfig &config, std::size_t vocab_size);
  RecurrentLm(const RecurrentConfig &config, std::size_t vocab_size,
              nn::ParameterStore parameters);

  const RecurrentConfig &config() const { return config_; }
  std::size_t vocab_size() const { return vocab_size_; }
  nn::ParameterStore &parameters() { return params_; }
  const nn::ParameterStore &parameters() const { return params_; }
  std::string Describe() const;

  RecurrentState ZeroState(int batch) const;

  // Summed one-hot loss over the segment. *state goes in as the incoming
  // state and comes out as the state after the last step. Gradients
  // (scaled by loss_scale) stop at the segment's left edge.
  double TrainStep(const SegmentBatch &segment, RecurrentState *state,
                   nn::Rng *rng, double loss_scale = 1.0);
  // Same forward pass without gradients.
  double SegmentLoss(const SegmentBatch &segment, RecurrentState *state,
                     nn::Mode mode, nn::Rng *rng) const;

  // ln P of every token of a single stream, evaluated left to right with
  // </s> as the first input. State is carried across chunks of
  // 'chunk_length' steps (0 = one chunk).
  std::vector<double> StreamLogProbs(std::span<const WordId> tokens,
                                     StatePolicy policy,
                                     std::size_t chunk_length = 0) const;
  EvalReport Evaluate(const CorpusStream &corpus, StatePolicy policy) const;

 private:
  // Gradients go to *grads (which is params_ for training) when non-null.
  double Run(const SegmentBatch &segment, RecurrentState *state,
             nn::Mode mode, nn::Rng *rng, StatePolicy policy,
             nn::ParameterStore *grads, double loss_scale,
             std::vector<double> *log_probs) const;

  RecurrentConfig config_;
  std::size_t vocab_size_;
  nn::ParameterStore params_;
};

TrainResult TrainRecurrent(RecurrentLm &model, const CorpusStream &train,
                           const CorpusStream &dev,
                           const EpochCallback &on_epoch = {});

}  // namespace nglm

#endif  // NGLM_RECURRENT_LM_H_
