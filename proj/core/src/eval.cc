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

#include "nglm/eval.h"

#include <cmath>
#include <iomanip>
#include <limits>
#include <numeric>
#include <sstream>
#include <thread>

#include "json.hpp"
#include "nglm/error.h"

namespace nglm {

void NGramScorer::WindowLogProbs(const WindowSequence &windows,
                                 std::size_t begin, std::size_t end,
                                 std::span<double> out) const {
  for (std::size_t i = begin; i < end; ++i) {
    const NGramWindow w = windows[i];
    out[i - begin] = std::log(Prob(w.context, w.target));
  }
}

void NGramScorer::ContextLogProbs(std::span<const WordId> context,
                                  std::span<const WordId> words,
                                  std::span<double> out) const {
  for (std::size_t i = 0; i < words.size(); ++i) {
    out[i] = std::log(Prob(context, words[i]));
  }
}

std::string EvalReport::ToJson() const {
  nlohmann::ordered_json j;
  j["model"] = model;
  j["boundary"] = boundary;
  j["num_tokens"] = num_tokens;
  j["oov_rate"] = oov_rate;
  j["cross_entropy"] = cross_entropy;
  j["bits_per_token"] = bits_per_token;
  j["perplexity"] = perplexity;
  if (!hit_ratios.empty()) {
    nlohmann::json h = nlohmann::json::array();
    for (double r : hit_ratios) {
      if (std::isnan(r)) {
        h.push_back(nullptr);
      } else {
        h.push_back(r);
      }
    }
    j["hit_ratios"] = h;
  }
  return j.dump();
}

std::string EvalReport::ToTable() const {
  std::ostringstream out;
  auto row = [&](const std::string &key, const std::string &value) {
    out << std::left << std::setw(16) << key << value << '\n';
  };
  auto num = [](double v, int digits) {
    std::ostringstream s;
    s << std::fixed << std::setprecision(digits) << v;
    return s.str();
  };
  row("model", model);
  row("boundary", boundary);
  row("tokens", std::to_string(num_tokens));
  row("oov rate", num(oov_rate, 6));
  row("cross-entropy", num(cross_entropy, 6) + " nats");
  row("bits/token", num(bits_per_token, 6));
  row("perplexity", num(perplexity, 4));
  for (std::size_t m = 0; m < hit_ratios.size(); ++m) {
    row("hit " + std::to_string(m + 1) + "-gram",
        std::isnan(hit_ratios[m]) ? "n/a" : num(hit_ratios[m], 2) + "%");
  }
  return out.str();
}

EvalReport MakeReport(double total_log_prob, std::size_t num_tokens,
                      double oov_rate, std::string boundary,
                      std::string model) {
  if (num_tokens == 0) throw EmptyCorpusError("no tokens to evaluate");
  EvalReport r;
  r.num_tokens = num_tokens;
  r.cross_entropy = -total_log_prob / static_cast<double>(num_tokens);
  r.perplexity = std::exp(r.cross_entropy);
  r.bits_per_token = r.cross_entropy / std::log(2.0);
  r.oov_rate = oov_rate;
  r.boundary = std::move(boundary);
  r.model = std::move(model);
  if (!std::isfinite(r.perplexity)) {
    throw NumericalError("perplexity overflowed");
  }
  return r;
}

double CorpusLogLikelihood(const NGramScorer &scorer,
                           const CorpusStream &corpus, int workers) {
  if (corpus.num_tokens() == 0) {
    throw EmptyCorpusError("evaluation corpus has no tokens");
  }
  const WindowSequence windows = ExtractWindows(corpus, scorer.order());
  const auto &sentences = corpus.sentences();
  // Window offset of each sentence; one window per token.
  std::vector<std::size_t> offset(sentences.size() + 1, 0);
  for (std::size_t s = 0; s < sentences.size(); ++s) {
    offset[s + 1] = offset[s] + sentences[s].size();
  }
  std::vector<double> per_sentence(sentences.size(), 0.0);
  auto work = [&](std::size_t first, std::size_t last) {
    std::vector<double> lp;
    for (std::size_t s = first; s < last; ++s) {
      lp.resize(offset[s + 1] - offset[s]);
      scorer.WindowLogProbs(windows, offset[s], offset[s + 1], lp);
      double sum = 0.0;
      for (std::size_t t = 0; t < lp.size(); ++t) {
        if (!(lp[t] > -std::numeric_limits<double>::infinity()) ||
            std::isnan(lp[t])) {
          throw NumericalError("non-positive probability at sentence " +
                               std::to_string(s + 1) + ", token " +
                               std::to_string(t + 1));
        }
        sum += lp[t];
      }
      per_sentence[s] = sum;
    }
  };
  const std::size_t k = static_cast<std::size_t>(std::max(1, workers));
  if (k == 1 || sentences.size() < 2 * k) {
    work(0, sentences.size());
  } else {
    std::vector<std::thread> threads;
    std::vector<std::exception_ptr> errors(k);
    const std::size_t chunk = (sentences.size() + k - 1) / k;
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t a = std::min(sentences.size(), i * chunk);
      const std::size_t b = std::min(sentences.size(), a + chunk);
      threads.emplace_back([&, i, a, b] {
        try {
          work(a, b);
        } catch (...) {
          errors[i] = std::current_exception();
        }
      });
    }
    for (auto &t : threads) t.join();
    for (auto &e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }
  return std::accumulate(per_sentence.begin(), per_sentence.end(), 0.0);
}

EvalReport EvaluatePerplexity(const NGramScorer &scorer,
                              const CorpusStream &corpus, int workers) {
  const double ll = CorpusLogLikelihood(scorer, corpus, workers);
  return MakeReport(ll, corpus.num_tokens(), OovRate(corpus),
                    std::string(ToString(corpus.mode())), scorer.Describe());
}

double CrossEntropyFromWindows(const NGramScorer &scorer,
                               const WindowSequence &windows) {
  if (windows.empty()) throw EmptyCorpusError("no windows to score");
  std::vector<double> lp(windows.size());
  scorer.WindowLogProbs(windows, 0, windows.size(), lp);
  double sum = 0.0;
  for (std::size_t i = 0; i < lp.size(); ++i) {
    if (std::isnan(lp[i]) || std::isinf(lp[i])) {
      throw NumericalError("non-positive probability at window " +
                           std::to_string(i));
    }
    sum += lp[i];
  }
  return -sum / static_cast<double>(windows.size());
}

double CrossEntropyFromStats(const NGramScorer &scorer,
                             const ContextStats &stats) {
  if (stats.total() == 0) throw EmptyCorpusError("no counts to score");
  const int n = scorer.order();
  if (stats.order() < n) {
    throw ValidationError("statistics order is below the model order");
  }
  const LevelCounts &lv = stats.level(n);
  // Successor lists per context, in sorted n-gram order.
  std::vector<std::vector<std::size_t>> groups(lv.contexts.size());
  for (std::size_t i : lv.ngrams.SortedIndices()) {
    auto key = lv.ngrams.Key(i);
    groups[lv.contexts.Find(key.first(key.size() - 1))].push_back(i);
  }
  double sum = 0.0;
  std::vector<WordId> words;
  std::vector<double> lp;
  for (std::size_t c : lv.contexts.SortedIndices()) {
    const auto context = lv.contexts.Key(c);
    words.clear();
    for (std::size_t i : groups[c]) words.push_back(lv.ngrams.Key(i).back());
    lp.resize(words.size());
    scorer.ContextLogProbs(context, words, lp);
    // count(h) * f(w|h) == count(h, w)
    for (std::size_t k = 0; k < words.size(); ++k) {
      if (std::isnan(lp[k]) || std::isinf(lp[k])) {
        throw NumericalError("non-positive probability for a counted n-gram");
      }
      sum += static_cast<double>(lv.ngram_counts[groups[c][k]]) * lp[k];
    }
  }
  return -sum / static_cast<double>(stats.total());
}

}  // namespace nglm
