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

#include "nglm/backoff_lm.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include <spdlog/spdlog.h>

#include "nglm/error.h"

namespace nglm {
namespace {

constexpr double kLn10 = 2.302585092994045684;
// Leftover mass below this is treated as none.
constexpr double kMinMass = 1e-12;

double ZeroLogProb() { return kArpaZeroLog10 * kLn10; }

// Number of words a back-off model predicts: everything but <pad>.
std::size_t NumPredicted(const Vocabulary &vocab) { return vocab.size() - 1; }

void CheckOrder(const ContextStats &stats, int order) {
  if (order < 1) throw ValidationError("model order must be >= 1");
  if (stats.order() < order) {
    throw ValidationError("statistics of order " +
                          std::to_string(stats.order()) +
                          " cannot support a model of order " +
                          std::to_string(order));
  }
}

ArpaModel UniformModel(const Vocabulary &vocab, Smoothing smoothing) {
  ArpaModel model(1, vocab, smoothing);
  const double lp = -std::log(static_cast<double>(NumPredicted(vocab)));
  for (WordId w = 0; w < static_cast<WordId>(vocab.size()); ++w) {
    const WordId id[] = {w};
    model.Set(id, w == kPadId ? ZeroLogProb() : lp, 0.0);
  }
  return model;
}

// Sets the back-off weight of context h, creating a context-only entry if h
// was never itself predicted (contexts ending in <pad>).
void SetBackoff(ArpaModel &model, std::span<const WordId> h, double log_bow) {
  if (const ArpaModel::Entry *e = model.Find(h)) {
    model.Set(h, e->log_prob, log_bow);
  } else {
    model.Set(h, ZeroLogProb(), log_bow);
  }
}

// Successors of each context at one level, as (word, count) runs.
struct Grouped {
  std::vector<std::size_t> ngram_order;  // n-gram indices grouped by context
  std::vector<std::size_t> begin;        // per context: start in ngram_order
};

Grouped GroupByContext(const NGramIndex &ngrams, const NGramIndex &contexts) {
  Grouped g;
  std::vector<std::size_t> counts(contexts.size() + 1, 0);
  std::vector<std::size_t> ctx_of(ngrams.size());
  for (std::size_t i = 0; i < ngrams.size(); ++i) {
    auto key = ngrams.Key(i);
    ctx_of[i] = contexts.Find(key.first(key.size() - 1));
    ++counts[ctx_of[i] + 1];
  }
  for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
  g.begin = counts;
  g.ngram_order.resize(ngrams.size());
  for (std::size_t i = 0; i < ngrams.size(); ++i) {
    g.ngram_order[counts[ctx_of[i]]++] = i;
  }
  return g;
}

}  // namespace

std::string_view ToString(Smoothing smoothing) {
  return smoothing == Smoothing::kKatz ? "katz" : "kneser_ney_interpolated";
}

Smoothing ParseSmoothing(std::string_view text) {
  if (text == "katz") return Smoothing::kKatz;
  if (text == "kn" || text == "kneser_ney_interpolated") {
    return Smoothing::kKneserNeyInterpolated;
  }
  throw ValidationError("unknown smoothing '" + std::string(text) +
                        "' (expected katz|kn)");
}

ArpaModel::ArpaModel(int order, Vocabulary vocab, Smoothing smoothing)
    : order_(order), vocab_(std::move(vocab)), smoothing_(smoothing) {
  if (order < 1) throw ValidationError("model order must be >= 1");
  for (int m = 1; m <= order; ++m) levels_.emplace_back(m);
}

std::string ArpaModel::Describe() const {
  return std::string(ToString(smoothing_)) + " " + std::to_string(order_) +
         "-gram";
}

void ArpaModel::Set(std::span<const WordId> ngram, double log_prob,
                    double log_backoff) {
  const int m = static_cast<int>(ngram.size());
  if (m < 1 || m > order_) {
    throw ValidationError("n-gram length " + std::to_string(m) +
                          " outside model order " + std::to_string(order_));
  }
  if (!std::isfinite(log_prob) || log_prob > 1e-12 ||
      !std::isfinite(log_backoff)) {
    throw NumericalError("back-off entry with non-finite or positive log "
                         "probability");
  }
  Level &level = levels_[static_cast<std::size_t>(m - 1)];
  auto [i, inserted] = level.index.Insert(ngram);
  if (inserted) level.entries.push_back({});
  level.entries[i] = {std::min(log_prob, 0.0), log_backoff};
}

const ArpaModel::Entry *ArpaModel::Find(std::span<const WordId> ngram) const {
  const int m = static_cast<int>(ngram.size());
  if (m < 1 || m > order_) return nullptr;
  const Level &level = levels_[static_cast<std::size_t>(m - 1)];
  const std::size_t i = level.index.Find(ngram);
  return i == NGramIndex::kNotFound ? nullptr : &level.entries[i];
}

double ArpaModel::LogProb(std::span<const WordId> context, WordId word) const {
  if (word == kPadId || word < 0 ||
      static_cast<std::size_t>(word) >= vocab_.size()) {
    throw ValidationError("word id " + std::to_string(word) +
                          " is not a predictable vocabulary word");
  }
  if (context.size() > static_cast<std::size_t>(order_ - 1)) {
    context = context.last(static_cast<std::size_t>(order_ - 1));
  }
  std::vector<WordId> ngram(context.begin(), context.end());
  ngram.push_back(word);
  double log_bow = 0.0;
  for (std::size_t len = context.size();; --len) {
    std::span<const WordId> full(ngram.data() + (context.size() - len),
                                 len + 1);
    if (const Entry *e = Find(full)) return log_bow + e->log_prob;
    if (len == 0) return -std::numeric_limits<double>::infinity();
    if (const Entry *h = Find(full.first(len))) log_bow += h->log_backoff;
  }
}

double ArpaModel::Prob(std::span<const WordId> context, WordId word) const {
  return std::exp(LogProb(context, word));
}

std::vector<double> KatzDiscounts(std::span<const std::int64_t> n, int gt_max,
                                  int level) {
  // n[r] = number of n-grams seen exactly r times, r = 0..gt_max+1.
  std::vector<double> d(static_cast<std::size_t>(gt_max) + 1, 1.0);
  if (gt_max <= 0) return d;
  auto nr = [&](int r) -> double {
    return r < static_cast<int>(n.size()) ? static_cast<double>(n[r]) : 0.0;
  };
  if (nr(1) == 0) {
    spdlog::warn("Katz level {}: no singletons; Good-Turing discounting "
                 "disabled",
                 level);
    return d;
  }
  const double a = (gt_max + 1) * nr(gt_max + 1) / nr(1);
  if (a >= 1.0) {
    spdlog::warn("Katz level {}: Good-Turing normalizer {} >= 1; discounting "
                 "disabled",
                 level, a);
    return d;
  }
  for (int r = 1; r <= gt_max; ++r) {
    if (nr(r) == 0 || nr(r + 1) == 0) {
      if (nr(r) != 0) {
        spdlog::warn("Katz level {}: N{} = 0; count {} left undiscounted",
                     level, r + 1, r);
      }
      continue;
    }
    const double r_star = (r + 1) * nr(r + 1) / nr(r);
    const double dr = (r_star / r - a) / (1.0 - a);
    if (dr > 0.0 && dr <= 1.0) {
      d[static_cast<std::size_t>(r)] = dr;
    } else {
      spdlog::warn("Katz level {}: discount {} for count {} out of range; "
                   "left undiscounted",
                   level, dr, r);
    }
  }
  return d;
}

double KneserNeyDiscount(std::int64_t n1, std::int64_t n2, int level) {
  if (n1 < 0 || n2 < 0) {
    throw ValidationError("counts-of-counts must be non-negative");
  }
  if (n1 == 0) {
    spdlog::warn("Kneser-Ney level {}: no singletons (n2={}); using discount {}",
                 level, n2, kKneserNeyFallbackDiscount);
    return kKneserNeyFallbackDiscount;
  }
  return static_cast<double>(n1) / static_cast<double>(n1 + 2 * n2);
}

ArpaModel EstimateKatz(const ContextStats &stats, const Vocabulary &vocab,
                       int order, int gt_max) {
  CheckOrder(stats, order);
  if (gt_max < 0) throw ValidationError("gt_max must be >= 0");
  if (stats.total() == 0) return UniformModel(vocab, Smoothing::kKatz);

  ArpaModel model(order, vocab, Smoothing::kKatz);
  const std::size_t num_predicted = NumPredicted(vocab);

  auto discounts_for = [&](const LevelCounts &lv, int m) {
    std::vector<std::int64_t> n(static_cast<std::size_t>(gt_max) + 2, 0);
    for (std::int64_t c : lv.ngram_counts) {
      if (c <= gt_max + 1) ++n[static_cast<std::size_t>(c)];
    }
    return KatzDiscounts(n, gt_max, m);
  };
  auto discounted = [&](const std::vector<double> &d, std::int64_t c) {
    return c <= gt_max ? d[static_cast<std::size_t>(c)] * static_cast<double>(c)
                       : static_cast<double>(c);
  };

  // Unigrams.
  {
    const LevelCounts &lv = stats.level(1);
    const std::vector<double> d = discounts_for(lv, 1);
    const double total = static_cast<double>(stats.total());
    std::vector<double> p(vocab.size(), 0.0);
    double seen_mass = 0.0;
    std::size_t num_seen = 0;
    for (std::size_t i = 0; i < lv.ngrams.size(); ++i) {
      const WordId w = lv.ngrams.Key(i)[0];
      p[static_cast<std::size_t>(w)] = discounted(d, lv.ngram_counts[i]) / total;
      seen_mass += p[static_cast<std::size_t>(w)];
      ++num_seen;
    }
    const std::size_t num_unseen = num_predicted - num_seen;
    double unseen_each = 0.0;
    if (num_unseen == 0) {
      for (double &x : p) x /= seen_mass;
    } else {
      double leftover = 1.0 - seen_mass;
      if (leftover <= kMinMass) {
        leftover = 1.0 / (total + 1.0);
        spdlog::warn("Katz unigrams: no discounted mass for {} unseen words; "
                     "reserving {}",
                     num_unseen, leftover);
        for (double &x : p) x *= (1.0 - leftover) / seen_mass;
      }
      unseen_each = leftover / static_cast<double>(num_unseen);
    }
    for (WordId w = 0; w < static_cast<WordId>(vocab.size()); ++w) {
      const WordId id[] = {w};
      if (w == kPadId) {
        model.Set(id, ZeroLogProb(), 0.0);
        continue;
      }
      const double pw = p[static_cast<std::size_t>(w)];
      model.Set(id, std::log(pw > 0.0 ? pw : unseen_each), 0.0);
    }
  }

  for (int m = 2; m <= order; ++m) {
    const LevelCounts &lv = stats.level(m);
    const std::vector<double> d = discounts_for(lv, m);
    const Grouped groups = GroupByContext(lv.ngrams, lv.contexts);
    std::vector<double> probs;
    for (std::size_t c = 0; c < lv.contexts.size(); ++c) {
      auto h = lv.contexts.Key(c);
      const double count_h = static_cast<double>(lv.context_counts[c]);
      const std::size_t b = groups.begin[c], e = groups.begin[c + 1];
      probs.assign(e - b, 0.0);
      double seen_mass = 0.0, lower_mass = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t i = groups.ngram_order[k];
        probs[k - b] = discounted(d, lv.ngram_counts[i]) / count_h;
        seen_mass += probs[k - b];
        lower_mass +=
            model.Prob(h.subspan(1), lv.ngrams.Key(i).back());
      }
      double log_bow = 0.0;
      if (e - b == num_predicted) {
        for (double &x : probs) x /= seen_mass;
      } else {
        double leftover = 1.0 - seen_mass;
        if (leftover <= kMinMass) {
          leftover = 1.0 / (count_h + 1.0);
          for (double &x : probs) x *= (1.0 - leftover) / seen_mass;
        }
        double denom = 1.0 - lower_mass;
        if (denom <= kMinMass) {
          // Recompute the unseen lower-order mass directly.
          std::vector<char> seen(vocab.size(), 0);
          for (std::size_t k = b; k < e; ++k) {
            seen[static_cast<std::size_t>(
                lv.ngrams.Key(groups.ngram_order[k]).back())] = 1;
          }
          denom = 0.0;
          for (WordId w = 0; w < static_cast<WordId>(vocab.size()); ++w) {
            if (w != kPadId && !seen[static_cast<std::size_t>(w)]) {
              denom += model.Prob(h.subspan(1), w);
            }
          }
        }
        log_bow = std::log(leftover) - std::log(denom);
      }
      for (std::size_t k = b; k < e; ++k) {
        model.Set(lv.ngrams.Key(groups.ngram_order[k]), std::log(probs[k - b]),
                  0.0);
      }
      SetBackoff(model, h, log_bow);
    }
  }
  return model;
}

ArpaModel EstimateKneserNey(const ContextStats &stats, const Vocabulary &vocab,
                            int order) {
  CheckOrder(stats, order);
  if (stats.total() == 0) {
    return UniformModel(vocab, Smoothing::kKneserNeyInterpolated);
  }
  ArpaModel model(order, vocab, Smoothing::kKneserNeyInterpolated);

  // Adjusted counts: raw at the top level, continuation counts N1+(. h w)
  // below.
  std::vector<std::vector<std::int64_t>> adjusted(
      static_cast<std::size_t>(order));
  adjusted[static_cast<std::size_t>(order - 1)] = stats.level(order).ngram_counts;
  for (int m = order - 1; m >= 1; --m) {
    const LevelCounts &lv = stats.level(m);
    const LevelCounts &up = stats.level(m + 1);
    std::vector<std::int64_t> cont(lv.ngrams.size(), 0);
    for (std::size_t i = 0; i < up.ngrams.size(); ++i) {
      const std::size_t j = lv.ngrams.Find(up.ngrams.Key(i).subspan(1));
      ++cont[j];
    }
    adjusted[static_cast<std::size_t>(m - 1)] = std::move(cont);
  }

  std::vector<double> discount(static_cast<std::size_t>(order));
  for (int m = 1; m <= order; ++m) {
    std::int64_t n1 = 0, n2 = 0;
    for (std::int64_t c : adjusted[static_cast<std::size_t>(m - 1)]) {
      n1 += c == 1;
      n2 += c == 2;
    }
    discount[static_cast<std::size_t>(m - 1)] = KneserNeyDiscount(n1, n2, m);
  }

  // Unigrams, interpolated with the uniform distribution.
  {
    const LevelCounts &lv = stats.level(1);
    const auto &a = adjusted[0];
    const double dsc = discount[0];
    double denom = 0.0;
    for (std::int64_t c : a) denom += static_cast<double>(c);
    const double gamma = dsc * static_cast<double>(a.size()) / denom;
    const double uniform =
        1.0 / static_cast<double>(NumPredicted(vocab));
    std::vector<double> p(vocab.size(), gamma * uniform);
    for (std::size_t i = 0; i < lv.ngrams.size(); ++i) {
      p[static_cast<std::size_t>(lv.ngrams.Key(i)[0])] +=
          std::max(static_cast<double>(a[i]) - dsc, 0.0) / denom;
    }
    for (WordId w = 0; w < static_cast<WordId>(vocab.size()); ++w) {
      const WordId id[] = {w};
      model.Set(id, w == kPadId ? ZeroLogProb()
                                : std::log(p[static_cast<std::size_t>(w)]),
                0.0);
    }
  }

  for (int m = 2; m <= order; ++m) {
    const LevelCounts &lv = stats.level(m);
    const auto &a = adjusted[static_cast<std::size_t>(m - 1)];
    const double dsc = discount[static_cast<std::size_t>(m - 1)];
    const Grouped groups = GroupByContext(lv.ngrams, lv.contexts);
    for (std::size_t c = 0; c < lv.contexts.size(); ++c) {
      auto h = lv.contexts.Key(c);
      const std::size_t b = groups.begin[c], e = groups.begin[c + 1];
      double denom = 0.0;
      for (std::size_t k = b; k < e; ++k) {
        denom += static_cast<double>(a[groups.ngram_order[k]]);
      }
      const double gamma = dsc * static_cast<double>(e - b) / denom;
      for (std::size_t k = b; k < e; ++k) {
        const std::size_t i = groups.ngram_order[k];
        auto ngram = lv.ngrams.Key(i);
        const double p =
            std::max(static_cast<double>(a[i]) - dsc, 0.0) / denom +
            gamma * model.Prob(h.subspan(1), ngram.back());
        model.Set(ngram, std::log(p), 0.0);
      }
      SetBackoff(model, h, std::log(gamma));
    }
  }
  return model;
}

}  // namespace nglm
