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

#ifndef NGLM_EVAL_H_
#define NGLM_EVAL_H_

#include <cstddef>
#include <string>
#include <vector>

#include "nglm/corpus.h"
#include "nglm/ngram_stats.h"
#include "nglm/scorer.h"

namespace nglm {

struct EvalReport {
  double perplexity = 0.0;
  double cross_entropy = 0.0;  // nats per token
  double bits_per_token = 0.0;
  std::size_t num_tokens = 0;
  double oov_rate = 0.0;
  std::string boundary;  // independent | straddle | stream
  std::vector<double> hit_ratios;  // percent per order; may be empty
  std::string model;

  std::string ToJson() const;
  // Aligned two-column text summary.
  std::string ToTable() const;
};

// Builds a report from a summed natural-log likelihood over N tokens.
EvalReport MakeReport(double total_log_prob, std::size_t num_tokens,
                      double oov_rate, std::string boundary,
                      std::string model);

// Sum of ln P over every token of the corpus, contexts formed per the corpus
// boundary mode. Sentences are split over 'workers' threads and summed in
// sentence order. A non-positive probability is a NumericalError naming the
// sentence and token (both 1-based).
double CorpusLogLikelihood(const NGramScorer &scorer,
                           const CorpusStream &corpus, int workers = 1);

EvalReport EvaluatePerplexity(const NGramScorer &scorer,
                              const CorpusStream &corpus, int workers = 1);

// -1/T sum_i ln P(w_i | h_i) over raw windows.
double CrossEntropyFromWindows(const NGramScorer &scorer,
                               const WindowSequence &windows);
// -1/T sum_h count(h) sum_w f(w|h) ln P(w|h) from top-level counts.
double CrossEntropyFromStats(const NGramScorer &scorer,
                             const ContextStats &stats);

}  // namespace nglm

#endif  // NGLM_EVAL_H_
