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

#ifndef NGLM_NN_OPTIMIZER_H_
#define NGLM_NN_OPTIMIZER_H_

#include <string>
#include <variant>

#include "nglm/nn/parameters.h"

namespace nglm::nn {

struct AdagradConfig {
  double learning_rate = 0.1;
  double initial_accumulator = 0.1;
};

// Learning rate constant for 'constant_epochs' epochs, then decaying
// linearly to zero over 'linear_decay_epochs' more.
struct ScheduledSgdConfig {
  double initial_lr = 1.0;
  int constant_epochs = 4;
  int linear_decay_epochs = 6;
};

struct OptimizerConfig {
  std::variant<AdagradConfig, ScheduledSgdConfig> kind = AdagradConfig{};
  double clip_max_norm = 5.0;

  // Learning rates may be zero (a no-op step); everything else positive.
  void Validate() const;
  bool is_adagrad() const {
    return std::holds_alternative<AdagradConfig>(kind);
  }
};

// Epochs count from 1.
double ScheduledLearningRate(const ScheduledSgdConfig &config, int epoch);

// Scales every gradient by max_norm / g when the global L2 norm g exceeds
// max_norm. Returns g.
double ClipGlobalNorm(ParameterStore &store, double max_norm);

class Optimizer {
 public:
  explicit Optimizer(OptimizerConfig config);

  const OptimizerConfig &config() const { return config_; }
  double LearningRate(int epoch) const;

  // Applies one update from the store's gradients, then marks them
  // consumed. Throws ValidationError if no gradients were computed.
  // Column-sparse parameters only touch the columns that got gradient.
  void Step(ParameterStore &store, int epoch);

 private:
  void Prepare(ParameterStore &store);

  OptimizerConfig config_;
  const ParameterStore *prepared_for_ = nullptr;
};

}  // namespace nglm::nn

#endif  // NGLM_NN_OPTIMIZER_H_
