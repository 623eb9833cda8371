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

#include "nglm/ngram_stats.h"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>

#include "nglm/error.h"

namespace nglm {

WindowSequence::WindowSequence(int order) : order_(order) {
  if (order < 1) throw ValidationError("n-gram order must be >= 1");
}

void WindowSequence::Append(std::span<const WordId> context, WordId target) {
  if (context.size() + 1 != static_cast<std::size_t>(order_)) {
    throw ValidationError("window with context length " +
                          std::to_string(context.size()) +
                          " appended to order-" + std::to_string(order_) +
                          " sequence");
  }
  if (target == kPadId) throw ValidationError("<pad> cannot be a target");
  bool seen_word = false;
  for (WordId id : context) {
    if (id == kPadId && seen_word) {
      throw ValidationError("<pad> may only appear as a leftmost run");
    }
    seen_word = seen_word || id != kPadId;
  }
  data_.insert(data_.end(), context.begin(), context.end());
  data_.push_back(target);
}

WindowSequence ExtractWindows(const CorpusStream &corpus, int order) {
  WindowSequence windows(order);
  const std::size_t context_len = static_cast<std::size_t>(order - 1);
  std::vector<WordId> history(context_len, kPadId);
  auto advance = [&](WordId w) {
    if (context_len == 0) return;
    std::rotate(history.begin(), history.begin() + 1, history.end());
    history.back() = w;
  };
  for (const Sentence &sentence : corpus.sentences()) {
    if (corpus.mode() == BoundaryMode::kSentenceIndependent) {
      std::fill(history.begin(), history.end(), kPadId);
    }
    for (WordId w : sentence.ids) {
      windows.Append(history, w);
      advance(w);
    }
  }
  return windows;
}

ContextStats::ContextStats(int order) : order_(order) {
  if (order < 1) throw ValidationError("n-gram order must be >= 1");
  levels_.reserve(static_cast<std::size_t>(order));
  for (int m = 1; m <= order; ++m) levels_.emplace_back(m);
}

void ContextStats::AddNGram(int m, std::span<const WordId> ngram,
                            std::int64_t count) {
  LevelCounts &level = levels_[static_cast<std::size_t>(m - 1)];
  auto [i, inserted] = level.ngrams.Insert(ngram);
  if (inserted) level.ngram_counts.push_back(0);
  level.ngram_counts[i] += count;
  auto [j, ctx_inserted] = level.contexts.Insert(ngram.first(ngram.size() - 1));
  if (ctx_inserted) level.context_counts.push_back(0);
  level.context_counts[j] += count;
}

void ContextStats::Add(const NGramWindow &window, std::int64_t count) {
  if (window.context.size() + 1 != static_cast<std::size_t>(order_)) {
    throw ValidationError("window order " +
                          std::to_string(window.context.size() + 1) +
                          " does not match statistics order " +
                          std::to_string(order_));
  }
  std::vector<WordId> ngram(window.context.begin(), window.context.end());
  ngram.push_back(window.target);
  std::span<const WordId> full(ngram);
  for (int m = 1; m <= order_; ++m) {
    AddNGram(m, full.last(static_cast<std::size_t>(m)), count);
  }
  total_ += count;
}

void ContextStats::Merge(const ContextStats &other) {
  if (other.order_ != order_) {
    throw ValidationError("cannot merge statistics of different orders");
  }
  for (int m = 1; m <= order_; ++m) {
    const LevelCounts &src = other.level(m);
    for (std::size_t i = 0; i < src.ngrams.size(); ++i) {
      AddNGram(m, src.ngrams.Key(i), src.ngram_counts[i]);
    }
  }
  total_ += other.total_;
}

std::int64_t ContextStats::Count(std::span<const WordId> ngram) const {
  const int m = static_cast<int>(ngram.size());
  if (m < 1 || m > order_) return 0;
  const LevelCounts &lv = level(m);
  const std::size_t i = lv.ngrams.Find(ngram);
  return i == NGramIndex::kNotFound ? 0 : lv.ngram_counts[i];
}

std::int64_t ContextStats::ContextCount(std::span<const WordId> context) const {
  const int m = static_cast<int>(context.size()) + 1;
  if (m > order_) return 0;
  const LevelCounts &lv = level(m);
  const std::size_t i = lv.contexts.Find(context);
  return i == NGramIndex::kNotFound ? 0 : lv.context_counts[i];
}

void ContextStats::Write(std::ostream &out) const {
  for (int m = 1; m <= order_; ++m) {
    const LevelCounts &lv = level(m);
    for (std::size_t i : lv.ngrams.SortedIndices()) {
      out << m << '\t';
      auto key = lv.ngrams.Key(i);
      for (std::size_t k = 0; k < key.size(); ++k) {
        if (k > 0) out << ' ';
        out << key[k];
      }
      out << '\t' << lv.ngram_counts[i] << '\n';
    }
  }
}

ContextStats ContextStats::Read(std::istream &in) {
  struct Record {
    int order;
    std::vector<WordId> ids;
    std::int64_t count;
  };
  std::vector<Record> records;
  std::string line;
  std::size_t line_no = 0;
  int max_order = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    const auto tab1 = line.find('\t');
    const auto tab2 =
        tab1 == std::string::npos ? tab1 : line.find('\t', tab1 + 1);
    if (tab2 == std::string::npos) {
      throw ParseError("expected 'order<TAB>ids<TAB>count'", line_no);
    }
    Record r;
    try {
      std::size_t used = 0;
      r.order = std::stoi(line.substr(0, tab1), &used);
      if (used != tab1) throw std::invalid_argument("order");
      std::istringstream ids(line.substr(tab1 + 1, tab2 - tab1 - 1));
      long long id;
      while (ids >> id) {
        if (id < 0 || id > std::numeric_limits<WordId>::max()) {
          throw std::invalid_argument("id");
        }
        r.ids.push_back(static_cast<WordId>(id));
      }
      if (!ids.eof()) throw std::invalid_argument("ids");
      r.count = std::stoll(line.substr(tab2 + 1), &used);
      if (used != line.size() - tab2 - 1) throw std::invalid_argument("count");
    } catch (const std::exception &) {
      throw ParseError("malformed count record", line_no);
    }
    if (r.order < 1 || static_cast<int>(r.ids.size()) != r.order ||
        r.count <= 0) {
      throw ParseError("count record order/ids/count mismatch", line_no);
    }
    max_order = std::max(max_order, r.order);
    records.push_back(std::move(r));
  }
  ContextStats stats(max_order);
  for (const Record &r : records) {
    stats.AddNGram(r.order, r.ids, r.count);
    if (r.order == 1) stats.total_ += r.count;
  }
  for (int m = 2; m <= max_order; ++m) {
    std::int64_t sum = 0;
    for (std::int64_t c : stats.level(m).ngram_counts) sum += c;
    if (sum != stats.total_) {
      throw ParseError("order-" + std::to_string(m) +
                           " counts do not sum to the unigram total",
                       line_no);
    }
  }
  return stats;
}

bool ContextStats::operator==(const ContextStats &other) const {
  if (order_ != other.order_ || total_ != other.total_) return false;
  for (int m = 1; m <= order_; ++m) {
    const LevelCounts &a = level(m);
    const LevelCounts &b = other.level(m);
    if (a.ngrams.size() != b.ngrams.size()) return false;
    for (std::size_t i = 0; i < a.ngrams.size(); ++i) {
      if (other.Count(a.ngrams.Key(i)) != a.ngram_counts[i]) return false;
    }
  }
  return true;
}

ContextStats Accumulate(const WindowSequence &windows) {
  ContextStats stats(windows.order());
  for (std::size_t i = 0; i < windows.size(); ++i) stats.Add(windows[i]);
  return stats;
}

ContextStats AccumulateSharded(const WindowSequence &windows, int shards) {
  if (shards <= 1 || windows.size() < 2) return Accumulate(windows);
  const std::size_t n = windows.size();
  const std::size_t k = std::min<std::size_t>(static_cast<std::size_t>(shards), n);
  std::vector<ContextStats> parts(k, ContextStats(windows.order()));
  std::vector<std::thread> workers;
  for (std::size_t s = 0; s < k; ++s) {
    workers.emplace_back([&, s] {
      const std::size_t begin = n * s / k;
      const std::size_t end = n * (s + 1) / k;
      for (std::size_t i = begin; i < end; ++i) parts[s].Add(windows[i]);
    });
  }
  for (auto &w : workers) w.join();
  for (std::size_t s = 1; s < k; ++s) parts[0].Merge(parts[s]);
  return std::move(parts[0]);
}

std::string_view ToString(TargetRegime regime) {
  switch (regime) {
    case TargetRegime::kOneHot:
      return "onehot";
    case TargetRegime::kMultinomial:
      return "multinomial";
    case TargetRegime::kWeightedMultinomial:
      return "weighted";
  }
  return "?";
}

TargetRegime ParseTargetRegime(std::string_view text) {
  if (text == "onehot") return TargetRegime::kOneHot;
  if (text == "multinomial") return TargetRegime::kMultinomial;
  if (text == "weighted") return TargetRegime::kWeightedMultinomial;
  throw ValidationError("unknown training regime '" + std::string(text) +
                        "' (expected onehot|multinomial|weighted)");
}

std::vector<TargetRecord> BuildTargets(const ContextStats &stats,
                                       const WindowSequence &windows,
                                       TargetRegime regime) {
  const int n = windows.order();
  if (stats.order() < n) {
    throw ValidationError("statistics order " + std::to_string(stats.order()) +
                          " is below window order " + std::to_string(n));
  }
  std::vector<TargetRecord> records;
  if (regime == TargetRegime::kOneHot) {
    records.reserve(windows.size());
    for (std::size_t i = 0; i < windows.size(); ++i) {
      NGramWindow w = windows[i];
      if (stats.Count(windows.NGram(i)) == 0) {
        throw ValidationError(
            "window n-gram absent from statistics (mixed corpora?)");
      }
      records.push_back({std::vector<WordId>(w.context.begin(), w.context.end()),
                         regime,
                         {{w.target, 1.0}},
                         1.0});
    }
    return records;
  }

  // Group successors by context at level n.
  const LevelCounts &lv = stats.level(n);
  std::vector<std::vector<TargetMass>> successors(lv.contexts.size());
  for (std::size_t i : lv.ngrams.SortedIndices()) {
    auto key = lv.ngrams.Key(i);
    const std::size_t c = lv.contexts.Find(key.first(key.size() - 1));
    successors[c].push_back(
        {key.back(), static_cast<double>(lv.ngram_counts[i])});
  }
  std::vector<char> emitted(lv.contexts.size(), 0);
  for (std::size_t i = 0; i < windows.size(); ++i) {
    NGramWindow w = windows[i];
    const std::size_t c = lv.contexts.Find(w.context);
    if (c == NGramIndex::kNotFound) {
      throw ValidationError("context absent from statistics (mixed corpora?)");
    }
    if (emitted[c]) continue;
    emitted[c] = 1;
    const double count_h = static_cast<double>(lv.context_counts[c]);
    TargetRecord record{std::vector<WordId>(w.context.begin(), w.context.end()),
                        regime,
                        successors[c],
                        regime == TargetRegime::kWeightedMultinomial ? count_h
                                                                     : 1.0};
    for (TargetMass &m : record.payload) m.prob /= count_h;
    records.push_back(std::move(record));
  }
  return records;
}

std::vector<double> HitRatio(const ContextStats &train_stats,
                             const WindowSequence &test_windows,
                             bool include_padded) {
  if (test_windows.empty()) {
    throw EmptyCorpusError("hit ratio needs a non-empty test set");
  }
  const int max_m = std::min(train_stats.order(), test_windows.order());
  std::vector<double> ratios;
  for (int m = 1; m <= max_m; ++m) {
    std::int64_t hits = 0, total = 0;
    for (std::size_t i = 0; i < test_windows.size(); ++i) {
      auto ngram = test_windows.NGram(i).last(static_cast<std::size_t>(m));
      if (!include_padded &&
          std::find(ngram.begin(), ngram.end(), kPadId) != ngram.end()) {
        continue;
      }
      ++total;
      if (train_stats.Count(ngram) > 0) ++hits;
    }
    ratios.push_back(total == 0 ? std::numeric_limits<double>::quiet_NaN()
                                : 100.0 * static_cast<double>(hits) /
                                      static_cast<double>(total));
  }
  return ratios;
}

}  // namespace nglm
