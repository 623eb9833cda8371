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

#ifndef NGLM_TESTS_SUPPORT_GRADCHECK_H_
#define NGLM_TESTS_SUPPORT_GRADCHECK_H_

#include <functional>
#include <string>

#include "nglm/nn/parameters.h"
#include "nglm/nn/tensor.h"

namespace nglm::testing {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst;  // array with the largest error
};

// Normwise relative error |a - b| / max(|a| + |b|, tiny).
double RelativeError(const nn::Matrix &analytic, const nn::Matrix &numeric);

// Central differences of 'loss' with respect to every entry of 'x'.
nn::Matrix NumericGradient(nn::Matrix *x, const std::function<double()> &loss,
                           double step = 1e-5);

// Compares store gradients filled by 'backprop' (which starts from zeroed
// gradients) with central differences of 'loss' over every parameter entry.
GradCheckResult CheckStoreGradients(nn::ParameterStore &store,
                                    const std::function<double()> &loss,
                                    const std::function<void()> &backprop,
                                    double step = 1e-5);

}  // namespace nglm::testing

#endif  // NGLM_TESTS_SUPPORT_GRADCHECK_H_
