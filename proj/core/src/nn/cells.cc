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

#include "nglm/nn/cells.h"

#include "nglm/error.h"

namespace nglm::nn {
namespace {

Matrix Stack(const Matrix &top, const Matrix &bottom) {
  Matrix out(top.rows() + bottom.rows(), top.cols());
  out.topRows(top.rows()) = top;
  out.bottomRows(bottom.rows()) = bottom;
  return out;
}

Matrix Sigmoid(const Matrix &x) {
  return (1.0 / (1.0 + (-x.array()).exp())).matrix();
}

}  // namespace

void RnnStepForward(const Matrix &r, const Vector &r_bias, const Matrix &state,
                    const Matrix &x, Matrix *new_state, Matrix *output,
                    RnnStepCache *cache) {
  const Eigen::Index s = state.rows();
  if (r.rows() != 2 * s || r.cols() != s + x.rows() || r_bias.size() != 2 * s ||
      state.cols() != x.cols()) {
    throw ValidationError("RNN step shape mismatch");
  }
  Matrix input = Stack(state, x);
  Matrix pre = r * input;
  pre.colwise() += r_bias;
  Matrix act = pre.array().tanh().matrix();
  *new_state = act.topRows(s);
  *output = act.bottomRows(s);
  if (cache) {
    cache->input = std::move(input);
    cache->activation = std::move(act);
  }
}

void RnnStepBackward(const Matrix &r, const RnnStepCache &cache,
                     const Matrix &d_new_state, const Matrix &d_output,
                     Matrix *dr, Vector *dr_bias, Matrix *d_state,
                     Matrix *d_x) {
  const Eigen::Index s = d_output.rows();
  Matrix d_act = Stack(d_new_state, d_output);
  d_act.array() *= 1.0 - cache.activation.array().square();
  if (dr) dr->noalias() += d_act * cache.input.transpose();
  if (dr_bias) *dr_bias += d_act.rowwise().sum();
  if (d_state || d_x) {
    Matrix d_in = r.transpose() * d_act;
    if (d_state) *d_state = d_in.topRows(s);
    if (d_x) *d_x = d_in.bottomRows(d_in.rows() - s);
  }
}

void LstmStepForward(const Matrix &w, const Vector &b, const Matrix &c_prev,
                     const Matrix &h_prev, const Matrix &x, Matrix *c,
                     Matrix *h, LstmStepCache *cache) {
  const Eigen::Index s = h_prev.rows();
  if (w.rows() != 4 * s || w.cols() != s + x.rows() || b.size() != 4 * s ||
      c_prev.rows() != s || c_prev.cols() != x.cols() ||
      h_prev.cols() != x.cols()) {
    throw ValidationError("LSTM step shape mismatch");
  }
  Matrix input = Stack(h_prev, x);
  Matrix pre = w * input;
  pre.colwise() += b;
  Matrix i = Sigmoid(pre.topRows(s));
  Matrix f = Sigmoid(pre.middleRows(s, s));
  Matrix o = Sigmoid(pre.middleRows(2 * s, s));
  Matrix g = pre.bottomRows(s).array().tanh().matrix();
  *c = f.cwiseProduct(c_prev) + i.cwiseProduct(g);
  Matrix tanh_c = c->array().tanh().matrix();
  *h = o.cwiseProduct(tanh_c);
  if (cache) {
    cache->input = std::move(input);
    cache->i = std::move(i);
    cache->f = std::move(f);
    cache->o = std::move(o);
    cache->g = std::move(g);
    cache->c_prev = c_prev;
    cache->tanh_c = std::move(tanh_c);
  }
}

void LstmStepBackward(const Matrix &w, const LstmStepCache &cache,
                      const Matrix &dc, const Matrix &dh, Matrix *dw,
                      Vector *db, Matrix *dc_prev, Matrix *dh_prev,
                      Matrix *dx) {
  const Eigen::Index s = cache.i.rows();
  const auto &i = cache.i.array();
  const auto &f = cache.f.array();
  const auto &o = cache.o.array();
  const auto &g = cache.g.array();
  const auto &tc = cache.tanh_c.array();
  Eigen::ArrayXXd dc_total = dc.array() + dh.array() * o * (1.0 - tc.square());

  Matrix d_pre(4 * s, dc.cols());
  d_pre.topRows(s) = (dc_total * g * i * (1.0 - i)).matrix();
  d_pre.middleRows(s, s) =
      (dc_total * cache.c_prev.array() * f * (1.0 - f)).matrix();
  d_pre.middleRows(2 * s, s) = (dh.array() * tc * o * (1.0 - o)).matrix();
  d_pre.bottomRows(s) = (dc_total * i * (1.0 - g.square())).matrix();

  if (dw) dw->noalias() += d_pre * cache.input.transpose();
  if (db) *db += d_pre.rowwise().sum();
  if (dc_prev) *dc_prev = (dc_total * f).matrix();
  if (dh_prev || dx) {
    Matrix d_in = w.transpose() * d_pre;
    if (dh_prev) *dh_prev = d_in.topRows(s);
    if (dx) *dx = d_in.bottomRows(d_in.rows() - s);
  }
}

}  // namespace nglm::nn
