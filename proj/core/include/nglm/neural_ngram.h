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

#ifndef NGLM_NEURAL_NGRAM_H_
#define NGLM_NEURAL_NGRAM_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nglm/corpus.h"
#include "nglm/ngram_stats.h"
#include "nglm/nn/optimizer.h"
#include "nglm/nn/parameters.h"
#include "nglm/nn/tensor.h"
#include "nglm/scorer.h"

namespace nglm {

enum class ModelFamily { kFeedForward, kVanillaRnn, kLstm };

// How an LSTM turns the n-1 context words into the output layer input.
enum class EncodingVariant {
  kForward,          // oldest to newest, last output
  kReverse,          // newest to oldest, last output
  kStackedForward,   // all step outputs of kForward, concatenated
  kStackedReverse,   // all step outputs of kReverse, concatenated
  kBidirectional,    // separate forward and reverse cells, last outputs
  kIncrementalDecay  // kForward, plus a decayed loss at every step
};

std::string_view ToString(ModelFamily family);
ModelFamily ParseModelFamily(std::string_view text);  // ff|rnn|lstm
std::string_view ToString(EncodingVariant variant);
// forward|reverse|stacked|stacked_reverse|bidir|incremental
EncodingVariant ParseEncodingVariant(std::string_view text);

struct NGramModelConfig {
  ModelFamily family = ModelFamily::kLstm;
  int order = 5;
  int embed_dim = 32;
  int state_dim = 32;
  int num_layers = 1;  // LSTM only
  double keep_prob = 1.0;
  EncodingVariant variant = EncodingVariant::kForward;
  double decay = 0.0;  // kIncrementalDecay only
  TargetRegime regime = TargetRegime::kOneHot;
  nn::OptimizerConfig optimizer;
  double init_stddev = 0.1;
  int epochs = 10;
  int batch_size = 32;
  BoundaryMode boundary = BoundaryMode::kSentenceIndependent;
  std::uint64_t seed = 1;

  void Validate() const;
  // Width of the vector fed to the output layer.
  int ContextWidth() const;
  int context_length() const { return order - 1; }
};

std::string ConfigToJson(const NGramModelConfig &config);
// Unknown keys are a ValidationError.
NGramModelConfig ConfigFromJson(std::string_view json);

struct TrainingExample {
  std::span<const WordId> context;
  std::span<const TargetMass> target;
  double weight = 1.0;
};

inline TrainingExample ToExample(const TargetRecord &record) {
  return {record.context, record.payload, record.weight};
}

// Feed-forward, vanilla-RNN or LSTM n-gram model. Every probability comes
// from a fresh encoding of the context; nothing is carried between calls.
class NeuralNgramModel : public NGramScorer {
 public:
  // Fresh parameters from the truncated-normal initializer seeded by
  // config.seed.
  NeuralNgramModel(const NGramModelConfig &config, std::size_t vocab_size);
  // Adopts existing parameters; shapes are validated against the config.
  NeuralNgramModel(const NGramModelConfig &config, std::size_t vocab_size,
                   nn::ParameterStore parameters);

  const NGramModelConfig &config() const { return config_; }
  nn::ParameterStore &parameters() { return params_; }
  const nn::ParameterStore &parameters() const { return params_; }

  int order() const override { return config_.order; }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::string Describe() const override;

  // Weighted cross-entropy summed over the batch. In kTrain mode dropout
  // draws from *rng.
  double Loss(std::span<const TrainingExample> batch, nn::Mode mode,
              nn::Rng *rng) const;
  // Same, and accumulates d(loss_scale * loss)/d(theta) into the gradients.
  double LossAndGradients(std::span<const TrainingExample> batch,
                          nn::Mode mode, nn::Rng *rng, double loss_scale = 1.0);

  // Sum over steps l = 1..n-1 of exp(-decay (n-1-l)) * xent at step l, in
  // eval mode. Needs an LSTM with forward or incremental encoding.
  double IncrementalLoss(std::span<const WordId> context, WordId target,
                         double decay) const;

  // Context vectors for the output layer, one column per output head
  // (n-1 heads for incremental encoding, otherwise one).
  nn::Matrix EncodeContext(std::span<const WordId> context, nn::Mode mode,
                           nn::Rng *rng) const;

  // V x B probabilities; 'contexts' holds B contexts of length n-1 back to
  // back. Evaluation mode.
  nn::Matrix PredictBatch(std::span<const WordId> contexts) const;
  std::vector<double> Predict(std::span<const WordId> context) const;

  double Prob(std::span<const WordId> context, WordId word) const override;
  void WindowLogProbs(const WindowSequence &windows, std::size_t begin,
                      std::size_t end, std::span<double> out) const override;
  void ContextLogProbs(std::span<const WordId> context,
                       std::span<const WordId> words,
                       std::span<double> out) const override;

 private:
  struct Trace;
  struct Head {
    int step;
    double weight;
  };

  void CreateParameters();
  void CheckShapes() const;
  void AdoptValues();
  std::vector<Head> HeadsFor(double decay, bool incremental) const;
  void Forward(std::span<const WordId> contexts, std::size_t batch,
               const std::vector<Head> &heads, nn::Mode mode, nn::Rng *rng,
               Trace *trace) const;
  // Sum of weighted head losses; fills d_logits (scaled) when non-null.
  double HeadLosses(std::span<const TrainingExample> batch,
                    const std::vector<Head> &heads, const Trace &trace,
                    std::vector<nn::Matrix> *d_logits,
                    double loss_scale) const;
  void Backward(std::span<const WordId> contexts, std::size_t batch,
                Trace &trace, const std::vector<nn::Matrix> &d_logits);

  NGramModelConfig config_;
  std::size_t vocab_size_;
  nn::ParameterStore params_;
};

}  // namespace nglm

#endif  // NGLM_NEURAL_NGRAM_H_
