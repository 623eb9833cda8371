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

#ifndef NGLM_BACKOFF_LM_H_
#define NGLM_BACKOFF_LM_H_

#include <cstddef>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "nglm/corpus.h"
#include "nglm/ngram_index.h"
#include "nglm/ngram_stats.h"
#include "nglm/scorer.h"

namespace nglm {

enum class Smoothing { kKatz, kKneserNeyInterpolated };

std::string_view ToString(Smoothing smoothing);
// Accepts "katz" / "kn".
Smoothing ParseSmoothing(std::string_view text);

// ARPA log-probability of entries that are contexts only (e.g. <pad>).
inline constexpr double kArpaZeroLog10 = -99.0;

// Back-off n-gram model: per level m a table m-gram -> (ln p, ln bow).
// Probabilities are natural log in memory and log10 on disk. The predicted
// vocabulary is every word except <pad>, which only occurs in contexts.
class ArpaModel : public NGramScorer {
 public:
  struct Entry {
    double log_prob;
    double log_backoff;  // 0 when absent
  };

  ArpaModel(int order, Vocabulary vocab, Smoothing smoothing);

  int order() const override { return order_; }
  std::size_t vocab_size() const override { return vocab_.size(); }
  std::string Describe() const override;
  const Vocabulary &vocabulary() const { return vocab_; }
  Smoothing smoothing() const { return smoothing_; }

  // Inserts or overwrites an entry; the level is ngram.size().
  void Set(std::span<const WordId> ngram, double log_prob, double log_backoff);
  const Entry *Find(std::span<const WordId> ngram) const;
  std::size_t NumEntries(int m) const { return levels_.at(m - 1).index.size(); }
  const NGramIndex &Index(int m) const { return levels_.at(m - 1).index; }
  const Entry &EntryAt(int m, std::size_t i) const {
    return levels_.at(m - 1).entries[i];
  }

  // Back-off recursion; contexts longer than order()-1 are truncated to
  // their most recent words. Throws ValidationError for w = <pad> or an id
  // outside the vocabulary.
  double LogProb(std::span<const WordId> context, WordId word) const;
  double Prob(std::span<const WordId> context, WordId word) const override;

 private:
  struct Level {
    explicit Level(int m) : index(m) {}
    NGramIndex index;
    std::vector<Entry> entries;
  };

  int order_;
  Vocabulary vocab_;
  Smoothing smoothing_;
  std::vector<Level> levels_;
};

inline constexpr int kDefaultGoodTuringMax = 5;

// Katz back-off with Good-Turing discounting of counts 1..gt_max.
ArpaModel EstimateKatz(const ContextStats &stats, const Vocabulary &vocab,
                       int order, int gt_max = kDefaultGoodTuringMax);

// Interpolated Kneser-Ney with one discount D = n1 / (n1 + 2 n2) per level,
// folded into back-off form.
ArpaModel EstimateKneserNey(const ContextStats &stats, const Vocabulary &vocab,
                            int order);

// Good-Turing/Katz discount ratios d_r for r = 0..gt_max (index 0 unused);
// r with an unusable estimate get 1.0. Exposed for testing.
std::vector<double> KatzDiscounts(std::span<const std::int64_t> count_of_counts,
                                  int gt_max, int level);

// Used when a level has no count-one n-grams and n1 / (n1 + 2 n2) is
// undefined or zero.
inline constexpr double kKneserNeyFallbackDiscount = 0.5;

// Kneser-Ney discount D for one level from its counts-of-counts n1, n2.
double KneserNeyDiscount(std::int64_t n1, std::int64_t n2, int level);

}  // namespace nglm

#endif  // NGLM_BACKOFF_LM_H_
