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

#ifndef NGLM_NN_TENSOR_H_
#define NGLM_NN_TENSOR_H_

#include <cstdint>
#include <random>
#include <string_view>

#include <Eigen/Core>

namespace nglm::nn {

// Batched values are column-major: one column per example.
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

using Rng = std::mt19937_64;

// Throws NumericalError naming 'what' if any entry is NaN or infinite.
void CheckFinite(const Eigen::Ref<const Matrix> &values, std::string_view what);

enum class Mode { kTrain, kEval };

}  // namespace nglm::nn

#endif  // NGLM_NN_TENSOR_H_
