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

#ifndef NGLM_SCORER_H_
#define NGLM_SCORER_H_

#include <cstddef>
#include <span>
#include <string>

#include "nglm/corpus.h"
#include "nglm/ngram_stats.h"

namespace nglm {

// Anything that assigns P(w | h) for n-gram contexts h. Implementations must
// be safe for concurrent const calls.
class NGramScorer {
 public:
  virtual ~NGramScorer() = default;

  virtual int order() const = 0;
  virtual std::size_t vocab_size() const = 0;
  virtual std::string Describe() const = 0;

  // Context length is order()-1 (shorter contexts are allowed where the
  // model supports them).
  virtual double Prob(std::span<const WordId> context, WordId word) const = 0;

  // ln P for windows [begin, end) of 'windows' into out[0 .. end-begin).
  // The default calls Prob per window.
  virtual void WindowLogProbs(const WindowSequence &windows, std::size_t begin,
                              std::size_t end, std::span<double> out) const;

  // ln P(words[i] | context) for several words sharing one context.
  virtual void ContextLogProbs(std::span<const WordId> context,
                               std::span<const WordId> words,
                               std::span<double> out) const;
};

// P(w | h) = 1/V for every word.
class UniformScorer : public NGramScorer {
 public:
  UniformScorer(std::size_t vocab_size, int order)
      : vocab_size_(vocab_size), order_(order) {}
  int order() const override { return order_; }
  std::size_t vocab_size() const override { return vocab_size_; }
  std::string Describe() const override { return "uniform"; }
  double Prob(std::span<const WordId>, WordId) const override {
    return 1.0 / static_cast<double>(vocab_size_);
  }

 private:
  std::size_t vocab_size_;
  int order_;
};

}  // namespace nglm

#endif  // NGLM_SCORER_H_
