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

#include "nglm/nn/layers.h"

#include <cmath>
#include <string>

#include "nglm/error.h"

namespace nglm::nn {

void CheckFinite(const Eigen::Ref<const Matrix> &values, std::string_view what) {
  if (!values.allFinite()) {
    throw NumericalError("non-finite value in " + std::string(what));
  }
}

Matrix AffineForward(const Matrix &w, const Vector &b, const Matrix &x) {
  if (w.cols() != x.rows() || w.rows() != b.size()) {
    throw ValidationError("affine shape mismatch: W " +
                          std::to_string(w.rows()) + "x" +
                          std::to_string(w.cols()) + ", b " +
                          std::to_string(b.size()) + ", x " +
                          std::to_string(x.rows()) + "x" +
                          std::to_string(x.cols()));
  }
  Matrix y = w * x;
  y.colwise() += b;
  return y;
}

Matrix AffineBackward(const Matrix &w, const Matrix &x, const Matrix &dy,
                      Matrix *dw, Vector *db) {
  if (dy.rows() != w.rows() || dy.cols() != x.cols() || x.rows() != w.cols()) {
    throw ValidationError("affine backward shape mismatch");
  }
  if (dw) dw->noalias() += dy * x.transpose();
  if (db) *db += dy.rowwise().sum();
  return w.transpose() * dy;
}

Matrix TanhForward(const Matrix &x) { return x.array().tanh().matrix(); }

Matrix TanhBackward(const Matrix &y, const Matrix &dy) {
  return (dy.array() * (1.0 - y.array().square())).matrix();
}

void DropoutSpec::Validate() const {
  if (!(keep_prob > 0.0 && keep_prob <= 1.0)) {
    throw ValidationError("dropout keep probability must be in (0, 1]");
  }
}

Matrix DropoutForward(const Matrix &x, const DropoutSpec &spec, Rng &rng,
                      Matrix *mask) {
  spec.Validate();
  if (spec.IsIdentity()) {
    if (mask) mask->resize(0, 0);
    return x;
  }
  std::bernoulli_distribution keep(spec.keep_prob);
  const double scale = 1.0 / spec.keep_prob;
  Matrix m(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      m(i, j) = keep(rng) ? scale : 0.0;
    }
  }
  Matrix y = x.cwiseProduct(m);
  if (mask) *mask = std::move(m);
  return y;
}

Matrix DropoutBackward(const Matrix &dy, const Matrix &mask) {
  if (mask.size() == 0) return dy;
  return dy.cwiseProduct(mask);
}

Vector Softmax(const Eigen::Ref<const Vector> &logits) {
  const double max = logits.maxCoeff();
  Vector p = (logits.array() - max).exp().matrix();
  p /= p.sum();
  return p;
}

Matrix SoftmaxColumns(const Matrix &logits) {
  Matrix p(logits.rows(), logits.cols());
  for (Eigen::Index j = 0; j < logits.cols(); ++j) {
    p.col(j) = Softmax(logits.col(j));
  }
  return p;
}

namespace {

// log-sum-exp and the softmax it implies.
double LogNormalizer(const Eigen::Ref<const Vector> &logits, Vector *probs) {
  const double max = logits.maxCoeff();
  Vector e = (logits.array() - max).exp().matrix();
  const double sum = e.sum();
  if (probs) *probs = e / sum;
  return max + std::log(sum);
}

}  // namespace

double SoftmaxCrossEntropy(const Eigen::Ref<const Vector> &logits,
                           const Eigen::Ref<const Vector> &target,
                           double weight, Vector *grad) {
  if (target.size() != logits.size()) {
    throw ValidationError("target and logits differ in size");
  }
  if (std::abs(target.sum() - 1.0) > 1e-9 || (target.array() < 0.0).any()) {
    throw ValidationError("cross-entropy target is not a normalized pmf");
  }
  Vector probs;
  const double log_z = LogNormalizer(logits, grad ? &probs : nullptr);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < target.size(); ++i) {
    if (target[i] != 0.0) loss -= target[i] * (logits[i] - log_z);
  }
  if (grad) *grad = weight * (probs - target);
  return weight * loss;
}

double SoftmaxCrossEntropy(const Eigen::Ref<const Vector> &logits,
                           std::span<const TargetMass> target, double weight,
                           Vector *grad) {
  double total = 0.0;
  for (const TargetMass &t : target) {
    if (t.word < 0 || t.word >= logits.size() || t.prob < 0.0) {
      throw ValidationError("cross-entropy target outside the vocabulary");
    }
    total += t.prob;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw ValidationError("cross-entropy target is not a normalized pmf");
  }
  Vector probs;
  const double log_z = LogNormalizer(logits, grad ? &probs : nullptr);
  double loss = 0.0;
  for (const TargetMass &t : target) loss -= t.prob * (logits[t.word] - log_z);
  if (grad) {
    *grad = weight * probs;
    for (const TargetMass &t : target) (*grad)[t.word] -= weight * t.prob;
  }
  return weight * loss;
}

}  // namespace nglm::nn
