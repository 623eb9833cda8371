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

#include "nglm/nn/parameters.h"

#include <cmath>
#include <cstring>

#include "nglm/error.h"

namespace nglm::nn {

void Parameter::ZeroGrad() {
  if (sparse_columns) {
    for (Eigen::Index col : touched_columns) {
      grad.col(col).setZero();
      touched[static_cast<std::size_t>(col)] = 0;
    }
    touched_columns.clear();
  } else {
    grad.setZero();
  }
}

Parameter &ParameterStore::Add(const std::string &name, Eigen::Index rows,
                               Eigen::Index cols, bool sparse_columns) {
  if (Contains(name)) {
    throw ValidationError("duplicate parameter name '" + name + "'");
  }
  if (rows <= 0 || cols <= 0) {
    throw ValidationError("parameter '" + name + "' must have positive shape");
  }
  Parameter p;
  p.name = name;
  p.value = Matrix::Zero(rows, cols);
  p.grad = Matrix::Zero(rows, cols);
  p.state = Matrix::Zero(rows, cols);
  p.sparse_columns = sparse_columns;
  if (sparse_columns) p.touched.assign(static_cast<std::size_t>(cols), 0);
  by_name_[name] = params_.size();
  params_.push_back(std::move(p));
  return params_.back();
}

Parameter &ParameterStore::AddVector(const std::string &name,
                                     Eigen::Index size) {
  Parameter &p = Add(name, size, 1);
  p.is_vector = true;
  return p;
}

Parameter &ParameterStore::Get(const std::string &name) {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw ValidationError("unknown parameter '" + name + "'");
  }
  return params_[it->second];
}

const Parameter &ParameterStore::Get(const std::string &name) const {
  auto it = by_name_.find(name);
  if (it == by_name_.end()) {
    throw ValidationError("unknown parameter '" + name + "'");
  }
  return params_[it->second];
}

std::size_t ParameterStore::NumValues() const {
  std::size_t n = 0;
  for (const Parameter &p : params_) n += static_cast<std::size_t>(p.value.size());
  return n;
}

void ParameterStore::ZeroGrad() {
  for (Parameter &p : params_) p.ZeroGrad();
  gradients_ready_ = false;
}

double ParameterStore::GradNorm() const {
  double sq = 0.0;
  for (const Parameter &p : params_) {
    if (p.sparse_columns) {
      for (Eigen::Index col : p.touched_columns) {
        sq += p.grad.col(col).squaredNorm();
      }
    } else {
      sq += p.grad.squaredNorm();
    }
  }
  return std::sqrt(sq);
}

bool ParameterStore::SameValues(const ParameterStore &other) const {
  if (params_.size() != other.params_.size()) return false;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    const Parameter &a = params_[i];
    const Parameter &b = other.params_[i];
    if (a.name != b.name || a.value.rows() != b.value.rows() ||
        a.value.cols() != b.value.cols()) {
      return false;
    }
    if (std::memcmp(a.value.data(), b.value.data(),
                    sizeof(double) * static_cast<std::size_t>(a.value.size())) !=
        0) {
      return false;
    }
  }
  return true;
}

void TruncatedNormalInit::Validate() const {
  if (!(stddev > 0.0) || !std::isfinite(stddev)) {
    throw ValidationError("initializer standard deviation must be positive");
  }
}

double TruncatedNormalInit::Sample(Rng &rng) const {
  std::normal_distribution<double> normal(0.0, stddev);
  for (;;) {
    const double x = normal(rng);
    if (std::abs(x) <= 2.0 * stddev) return x;
  }
}

void TruncatedNormalInit::Fill(Matrix *values, Rng &rng) const {
  Validate();
  for (Eigen::Index j = 0; j < values->cols(); ++j) {
    for (Eigen::Index i = 0; i < values->rows(); ++i) {
      (*values)(i, j) = Sample(rng);
    }
  }
}

}  // namespace nglm::nn
