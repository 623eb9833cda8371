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

#ifndef NGLM_NN_CELLS_H_
#define NGLM_NN_CELLS_H_

#include "nglm/nn/tensor.h"

namespace nglm::nn {

// Vanilla RNN step: [S', U] = tanh(R [S; x] + b). R is (2s) x (s + d); the
// state and output share dimension s.
struct RnnStepCache {
  Matrix input;       // [S; x]
  Matrix activation;  // tanh(...), 2s x B
};

void RnnStepForward(const Matrix &r, const Vector &r_bias, const Matrix &state,
                    const Matrix &x, Matrix *new_state, Matrix *output,
                    RnnStepCache *cache);

// Accumulates into *dr, *dr_bias; writes d_state and d_x (either may be
// null).
void RnnStepBackward(const Matrix &r, const RnnStepCache &cache,
                     const Matrix &d_new_state, const Matrix &d_output,
                     Matrix *dr, Vector *dr_bias, Matrix *d_state, Matrix *d_x);

// LSTM step without peepholes. W is 4s x (s + in) acting on [h; x]; gate
// rows are ordered input, forget, output, candidate.
//   c' = f * c + i * g,   h' = o * tanh(c')
struct LstmStepCache {
  Matrix input;  // [h; x]
  Matrix i, f, o, g;
  Matrix c_prev;
  Matrix tanh_c;
};

void LstmStepForward(const Matrix &w, const Vector &b, const Matrix &c_prev,
                     const Matrix &h_prev, const Matrix &x, Matrix *c,
                     Matrix *h, LstmStepCache *cache);

// dc and dh are the gradients arriving at c' and h'. Accumulates into *dw,
// *db; writes dc_prev, dh_prev, dx (any may be null).
void LstmStepBackward(const Matrix &w, const LstmStepCache &cache,
                      const Matrix &dc, const Matrix &dh, Matrix *dw,
                      Vector *db, Matrix *dc_prev, Matrix *dh_prev,
                      Matrix *dx);

}  // namespace nglm::nn

#endif  // NGLM_NN_CELLS_H_
