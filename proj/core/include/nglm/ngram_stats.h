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

#ifndef NGLM_NGRAM_STATS_H_
#define NGLM_NGRAM_STATS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string_view>
#include <vector>

#include "nglm/corpus.h"
#include "nglm/ngram_index.h"

namespace nglm {

// One prediction event: n-1 context ids followed by the target.
struct NGramWindow {
  std::span<const WordId> context;
  WordId target;
};

// Flat, single-order sequence of windows. Each row holds the context ids
// followed by the target id.
class WindowSequence {
 public:
  explicit WindowSequence(int order = 1);

  int order() const { return order_; }
  std::size_t size() const {
    return data_.size() / static_cast<std::size_t>(order_);
  }
  bool empty() const { return data_.empty(); }

  // Throws ValidationError if the context length is not order-1, if <pad> is
  // the target, or if <pad> appears after a non-pad context word.
  void Append(std::span<const WordId> context, WordId target);

  NGramWindow operator[](std::size_t i) const {
    const std::size_t n = static_cast<std::size_t>(order_);
    return {std::span<const WordId>(data_.data() + i * n, n - 1),
            data_[i * n + n - 1]};
  }
  // Context followed by target.
  std::span<const WordId> NGram(std::size_t i) const {
    const std::size_t n = static_cast<std::size_t>(order_);
    return {data_.data() + i * n, n};
  }

 private:
  int order_;
  std::vector<WordId> data_;
};

// Slides an order-n window over the corpus. Sentence-independent mode pads
// every sentence start with <pad>; straddling mode pads only the stream
// start. Every corpus token is the target of exactly one window.
WindowSequence ExtractWindows(const CorpusStream &corpus, int order);

// Counts for one level m: m-grams (context of length m-1 plus target) and
// their contexts.
struct LevelCounts {
  explicit LevelCounts(int m) : ngrams(m), ngram_counts(), contexts(m - 1) {}

  NGramIndex ngrams;
  std::vector<std::int64_t> ngram_counts;
  NGramIndex contexts;
  std::vector<std::int64_t> context_counts;
};

// Exact n-gram sufficient statistics for orders 1..order(). Lower orders are
// the suffixes of the highest-order windows.
class ContextStats {
 public:
  explicit ContextStats(int order);

  int order() const { return order_; }
  // T_w: number of windows accumulated.
  std::int64_t total() const { return total_; }

  const LevelCounts &level(int m) const { return levels_.at(m - 1); }

  // count(h, w); the order is ngram.size().
  std::int64_t Count(std::span<const WordId> ngram) const;
  // count(h); the order is h.size() + 1.
  std::int64_t ContextCount(std::span<const WordId> context) const;

  void Add(const NGramWindow &window, std::int64_t count = 1);
  // Adds counts of 'other' (same order) into this.
  void Merge(const ContextStats &other);

  // Text format: "order TAB ids TAB count", sorted by (order, ids).
  void Write(std::ostream &out) const;
  static ContextStats Read(std::istream &in);

  bool operator==(const ContextStats &other) const;

 private:
  void AddNGram(int m, std::span<const WordId> ngram, std::int64_t count);

  int order_;
  std::int64_t total_ = 0;
  std::vector<LevelCounts> levels_;
};

ContextStats Accumulate(const WindowSequence &windows);
// Splits the windows into 'shards' contiguous blocks, counts them on separate
// threads and merges; the result does not depend on the shard count.
ContextStats AccumulateSharded(const WindowSequence &windows, int shards);

enum class TargetRegime { kOneHot, kMultinomial, kWeightedMultinomial };

std::string_view ToString(TargetRegime regime);
// Accepts "onehot" / "multinomial" / "weighted".
TargetRegime ParseTargetRegime(std::string_view text);

struct TargetMass {
  WordId word;
  double prob;
};

struct TargetRecord {
  std::vector<WordId> context;
  TargetRegime regime;
  std::vector<TargetMass> payload;
  double weight;
};

// one_hot: one record per window. multinomial: one record per distinct
// context, payload f(.|h), weight 1. weighted: same with weight count(h).
// Distinct contexts appear in order of first occurrence in 'windows'.
std::vector<TargetRecord> BuildTargets(const ContextStats &stats,
                                       const WindowSequence &windows,
                                       TargetRegime regime);

// Percentage (0..100) of test m-grams, m = 1..min(orders), whose full m-gram
// was seen in training. With include_padded=false, m-grams containing <pad>
// are dropped from numerator and denominator; an order left with no m-grams
// reports NaN.
std::vector<double> HitRatio(const ContextStats &train_stats,
                             const WindowSequence &test_windows,
                             bool include_padded);

}  // namespace nglm

#endif  // NGLM_NGRAM_STATS_H_
