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

#include "nglm/ngram_trainer.h"

#include <algorithm>
#include <numeric>

#include <spdlog/spdlog.h>

#include "json.hpp"
#include "nglm/error.h"
#include "nglm/eval.h"

namespace nglm {

std::string EpochLog::ToJson() const {
  nlohmann::ordered_json j;
  j["epoch"] = epoch;
  j["train_xent"] = train_xent;
  j["dev_ppl"] = dev_ppl;
  j["lr"] = lr;
  return j.dump();
}

TrainResult TrainNgramModel(NeuralNgramModel &model,
                            std::span<const TargetRecord> targets,
                            const CorpusStream &dev,
                            const EpochCallback &on_epoch) {
  const NGramModelConfig &config = model.config();
  if (targets.empty()) throw EmptyCorpusError("no training targets");
  if (dev.num_tokens() == 0) {
    throw EmptyCorpusError("development corpus has no tokens");
  }
  if (dev.mode() != config.boundary) {
    throw ValidationError("development corpus boundary mode differs from the "
                          "model config");
  }
  for (const TargetRecord &r : targets) {
    if (r.context.size() != static_cast<std::size_t>(config.order - 1)) {
      throw ValidationError("target context length does not match order " +
                            std::to_string(config.order));
    }
    if (r.regime != config.regime) {
      throw ValidationError("targets were built for regime '" +
                            std::string(ToString(r.regime)) +
                            "', config asks for '" +
                            std::string(ToString(config.regime)) + "'");
    }
  }

  nn::Optimizer optimizer(config.optimizer);
  nn::ParameterStore &store = model.parameters();
  nn::Rng dropout_rng(config.seed ^ 0x9e3779b97f4a7c15ULL);
  std::vector<std::size_t> order(targets.size());
  std::vector<TrainingExample> batch;
  const std::size_t batch_size = static_cast<std::size_t>(config.batch_size);

  TrainResult result;
  nn::ParameterStore best;
  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    std::iota(order.begin(), order.end(), std::size_t{0});
    nn::Rng shuffle_rng(config.seed + static_cast<std::uint64_t>(epoch));
    std::shuffle(order.begin(), order.end(), shuffle_rng);

    double loss_sum = 0.0;
    double weight_sum = 0.0;
    for (std::size_t start = 0; start < order.size(); start += batch_size) {
      const std::size_t stop = std::min(order.size(), start + batch_size);
      batch.clear();
      for (std::size_t i = start; i < stop; ++i) {
        const TargetRecord &r = targets[order[i]];
        batch.push_back(ToExample(r));
        weight_sum += r.weight;
      }
      store.ZeroGrad();
      loss_sum += model.LossAndGradients(
          batch, nn::Mode::kTrain, &dropout_rng,
          1.0 / static_cast<double>(batch.size()));
      nn::ClipGlobalNorm(store, config.optimizer.clip_max_norm);
      optimizer.Step(store, epoch);
    }

    EpochLog log;
    log.epoch = epoch;
    log.train_xent = loss_sum / weight_sum;
    log.dev_ppl = EvaluatePerplexity(model, dev).perplexity;
    log.lr = optimizer.LearningRate(epoch);
    spdlog::debug("epoch {} train_xent {:.4f} dev_ppl {:.3f}", epoch,
                  log.train_xent, log.dev_ppl);
    if (result.best_epoch == 0 || log.dev_ppl < result.best_dev_ppl) {
      result.best_epoch = epoch;
      result.best_dev_ppl = log.dev_ppl;
      best = store;
    }
    result.log.push_back(log);
    if (on_epoch) on_epoch(log);
  }
  if (result.best_epoch != config.epochs) {
    for (nn::Parameter &p : store.parameters()) {
      p.value = best.Get(p.name).value;
    }
  }
  return result;
}

}  // namespace nglm
