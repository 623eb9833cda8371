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

#include "nglm/nn/optimizer.h"

#include <algorithm>
#include <cmath>

#include "nglm/error.h"

namespace nglm::nn {

void OptimizerConfig::Validate() const {
  if (!(clip_max_norm > 0.0)) {
    throw ValidationError("gradient clipping norm must be positive");
  }
  if (const auto *a = std::get_if<AdagradConfig>(&kind)) {
    if (!(a->learning_rate >= 0.0) || !(a->initial_accumulator >= 0.0)) {
      throw ValidationError("Adagrad rates must be non-negative");
    }
  } else {
    const auto &s = std::get<ScheduledSgdConfig>(kind);
    if (!(s.initial_lr >= 0.0) || s.constant_epochs < 0 ||
        s.linear_decay_epochs < 0) {
      throw ValidationError("SGD schedule values must be non-negative");
    }
  }
}

double ScheduledLearningRate(const ScheduledSgdConfig &config, int epoch) {
  if (epoch <= config.constant_epochs) return config.initial_lr;
  if (config.linear_decay_epochs == 0) return 0.0;
  const double progress = static_cast<double>(epoch - config.constant_epochs) /
                          static_cast<double>(config.linear_decay_epochs);
  return config.initial_lr * std::max(0.0, 1.0 - progress);
}

double ClipGlobalNorm(ParameterStore &store, double max_norm) {
  if (!(max_norm > 0.0)) {
    throw ValidationError("gradient clipping norm must be positive");
  }
  const double norm = store.GradNorm();
  if (norm > max_norm) {
    const double scale = max_norm / norm;
    for (Parameter &p : store.parameters()) {
      if (p.sparse_columns) {
        for (Eigen::Index col : p.touched_columns) p.grad.col(col) *= scale;
      } else {
        p.grad *= scale;
      }
    }
  }
  return norm;
}

Optimizer::Optimizer(OptimizerConfig config) : config_(std::move(config)) {
  config_.Validate();
}

double Optimizer::LearningRate(int epoch) const {
  if (const auto *a = std::get_if<AdagradConfig>(&config_.kind)) {
    return a->learning_rate;
  }
  return ScheduledLearningRate(std::get<ScheduledSgdConfig>(config_.kind),
                               epoch);
}

void Optimizer::Prepare(ParameterStore &store) {
  if (prepared_for_ == &store) return;
  if (const auto *a = std::get_if<AdagradConfig>(&config_.kind)) {
    for (Parameter &p : store.parameters()) {
      p.state.setConstant(a->initial_accumulator);
    }
  }
  prepared_for_ = &store;
}

namespace {

template <typename Block>
void AdagradUpdate(Block value, Block state, const Block &grad, double lr) {
  for (Eigen::Index j = 0; j < grad.cols(); ++j) {
    for (Eigen::Index i = 0; i < grad.rows(); ++i) {
      const double g = grad(i, j);
      if (g == 0.0) continue;
      state(i, j) += g * g;
      value(i, j) -= lr * g / std::sqrt(state(i, j));
    }
  }
}

}  // namespace

void Optimizer::Step(ParameterStore &store, int epoch) {
  if (!store.gradients_ready()) {
    throw ValidationError("optimizer step requested before gradients were "
                          "computed");
  }
  Prepare(store);
  const double lr = LearningRate(epoch);
  const bool adagrad = config_.is_adagrad();
  for (Parameter &p : store.parameters()) {
    if (p.sparse_columns) {
      for (Eigen::Index col : p.touched_columns) {
        if (adagrad) {
          AdagradUpdate(p.value.col(col), p.state.col(col), p.grad.col(col), lr);
        } else {
          p.value.col(col) -= lr * p.grad.col(col);
        }
      }
    } else if (adagrad) {
      AdagradUpdate<Eigen::Block<Matrix>>(p.value.block(0, 0, p.value.rows(), p.value.cols()),
                                          p.state.block(0, 0, p.state.rows(), p.state.cols()),
                                          p.grad.block(0, 0, p.grad.rows(), p.grad.cols()), lr);
    } else if (lr != 0.0) {
      p.value -= lr * p.grad;
    }
    CheckFinite(p.value, p.name);
  }
  store.set_gradients_ready(false);
}

}  // namespace nglm::nn
