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

#ifndef NGLM_NN_LAYERS_H_
#define NGLM_NN_LAYERS_H_

#include <span>

#include "nglm/corpus.h"
#include "nglm/ngram_stats.h"
#include "nglm/nn/tensor.h"

namespace nglm::nn {

// y = W x + b, column by column.
Matrix AffineForward(const Matrix &w, const Vector &b, const Matrix &x);

// Accumulates dL/dW and dL/db into *dw / *db (either may be null) and
// returns dL/dx.
Matrix AffineBackward(const Matrix &w, const Matrix &x, const Matrix &dy,
                      Matrix *dw, Vector *db);

Matrix TanhForward(const Matrix &x);
// 'y' is the forward output.
Matrix TanhBackward(const Matrix &y, const Matrix &dy);

struct DropoutSpec {
  double keep_prob = 1.0;
  Mode mode = Mode::kEval;

  // Throws ValidationError unless keep_prob is in (0, 1].
  void Validate() const;
  bool IsIdentity() const { return mode == Mode::kEval || keep_prob >= 1.0; }
};

// Inverted dropout: survivors are scaled by 1/keep_prob, so evaluation is
// the identity. 'mask' receives the per-entry scale (0 or 1/keep_prob) and
// is left empty when the layer is the identity.
Matrix DropoutForward(const Matrix &x, const DropoutSpec &spec, Rng &rng,
                      Matrix *mask);
Matrix DropoutBackward(const Matrix &dy, const Matrix &mask);

// Numerically stable softmax of one logit vector.
Vector Softmax(const Eigen::Ref<const Vector> &logits);
Matrix SoftmaxColumns(const Matrix &logits);

// loss = -weight * sum_w target(w) log softmax(logits)(w). 'target' must sum
// to 1 within 1e-9 (ValidationError otherwise). If grad is non-null it
// receives weight * (softmax - target).
double SoftmaxCrossEntropy(const Eigen::Ref<const Vector> &logits,
                           const Eigen::Ref<const Vector> &target,
                           double weight, Vector *grad);

// Same with a sparse target pmf.
double SoftmaxCrossEntropy(const Eigen::Ref<const Vector> &logits,
                           std::span<const TargetMass> target, double weight,
                           Vector *grad);

}  // namespace nglm::nn

#endif  // NGLM_NN_LAYERS_H_
