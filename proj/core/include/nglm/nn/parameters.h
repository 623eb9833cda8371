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

#ifndef NGLM_NN_PARAMETERS_H_
#define NGLM_NN_PARAMETERS_H_

#include <cstddef>
#include <deque>
#include <map>
#include <string>
#include <vector>

#include "nglm/nn/tensor.h"

namespace nglm::nn {

// A named parameter with its gradient accumulator and optimizer state, all
// of the same shape. Vectors are stored as n x 1 matrices with is_vector set.
// Column-sparse parameters (embeddings) track which columns received
// gradient so updates can skip the rest.
struct Parameter {
  std::string name;
  Matrix value;
  Matrix grad;
  Matrix state;
  bool is_vector = false;
  bool sparse_columns = false;
  std::vector<char> touched;
  std::vector<Eigen::Index> touched_columns;

  void MarkColumn(Eigen::Index col) {
    if (!touched[static_cast<std::size_t>(col)]) {
      touched[static_cast<std::size_t>(col)] = 1;
      touched_columns.push_back(col);
    }
  }
  void ZeroGrad();
};

class ParameterStore {
 public:
  Parameter &Add(const std::string &name, Eigen::Index rows, Eigen::Index cols,
                 bool sparse_columns = false);
  Parameter &AddVector(const std::string &name, Eigen::Index size);

  bool Contains(const std::string &name) const {
    return by_name_.count(name) > 0;
  }
  // Throws ValidationError for unknown names.
  Parameter &Get(const std::string &name);
  const Parameter &Get(const std::string &name) const;

  std::deque<Parameter> &parameters() { return params_; }
  const std::deque<Parameter> &parameters() const { return params_; }
  std::size_t NumValues() const;

  void ZeroGrad();
  // L2 norm over every gradient entry.
  double GradNorm() const;

  // Set by whoever fills the gradients; cleared by the optimizer step.
  bool gradients_ready() const { return gradients_ready_; }
  void set_gradients_ready(bool ready) { gradients_ready_ = ready; }

  // Parameter values (not gradients or state) compare bitwise equal.
  bool SameValues(const ParameterStore &other) const;

 private:
  std::deque<Parameter> params_;
  std::map<std::string, std::size_t> by_name_;
  bool gradients_ready_ = false;
};

// Zero-mean normal samples with standard deviation 'stddev'; draws beyond
// two standard deviations are resampled.
struct TruncatedNormalInit {
  double stddev = 0.1;

  void Validate() const;
  double Sample(Rng &rng) const;
  void Fill(Matrix *values, Rng &rng) const;
};

}  // namespace nglm::nn

#endif  // NGLM_NN_PARAMETERS_H_
