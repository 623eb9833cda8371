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

#ifndef NGLM_NGRAM_TRAINER_H_
#define NGLM_NGRAM_TRAINER_H_

#include <functional>
#include <span>
#include <string>
#include <vector>

#include "nglm/corpus.h"
#include "nglm/neural_ngram.h"
#include "nglm/ngram_stats.h"

namespace nglm {

struct EpochLog {
  int epoch = 0;
  double train_xent = 0.0;  // weighted mean loss per example, nats
  double dev_ppl = 0.0;
  double lr = 0.0;

  std::string ToJson() const;
};

struct TrainResult {
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_dev_ppl = 0.0;
};

using EpochCallback = std::function<void(const EpochLog &)>;

// Minibatch training over 'targets' for config().epochs epochs. After each
// epoch the dev perplexity is measured; the model ends holding the
// parameters of the best dev epoch.
TrainResult TrainNgramModel(NeuralNgramModel &model,
                            std::span<const TargetRecord> targets,
                            const CorpusStream &dev,
                            const EpochCallback &on_epoch = {});

}  // namespace nglm

#endif  // NGLM_NGRAM_TRAINER_H_
