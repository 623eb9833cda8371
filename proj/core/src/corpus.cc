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

#include "nglm/corpus.h"

#include <algorithm>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "nglm/error.h"

namespace nglm {
namespace {

bool IsSpecial(std::string_view word) {
  return word == kUnknownWord || word == kEndOfSentence || word == kPadding;
}

template <typename Fn>
void ForEachToken(std::string_view line, Fn &&fn) {
  std::size_t i = 0;
  const auto is_space = [](char c) {
    return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' ||
           c == '\v';
  };
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) fn(line.substr(i, j - i));
    i = j;
  }
}

// Token frequencies over the whole text, specials excluded.
std::map<std::string, std::int64_t> CountWords(std::istream &text,
                                               std::int64_t *num_tokens) {
  std::map<std::string, std::int64_t> counts;
  std::string line;
  *num_tokens = 0;
  while (std::getline(text, line)) {
    ForEachToken(line, [&](std::string_view token) {
      ++*num_tokens;
      if (!IsSpecial(token)) ++counts[std::string(token)];
    });
  }
  return counts;
}

}  // namespace

Vocabulary::Vocabulary() {
  Append(std::string(kUnknownWord));
  Append(std::string(kEndOfSentence));
  Append(std::string(kPadding));
}

void Vocabulary::Append(const std::string &word) {
  ids_.emplace(word, static_cast<WordId>(words_.size()));
  words_.push_back(word);
}

Vocabulary Vocabulary::FromWordList(std::span<const std::string> words) {
  Vocabulary vocab;
  for (const std::string &word : words) {
    if (IsSpecial(word)) continue;
    if (word.empty() ||
        word.find_first_of(" \t\r\n") != std::string::npos) {
      throw ValidationError("vocabulary word '" + word +
                            "' is empty or contains whitespace");
    }
    if (vocab.Contains(word)) {
      throw ValidationError("duplicate word in word list: '" + word + "'");
    }
    vocab.Append(word);
  }
  return vocab;
}

Vocabulary Vocabulary::Read(std::istream &in) {
  std::vector<std::string> words;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line_no <= kNumSpecials) {
      static constexpr std::string_view kExpected[] = {
          kUnknownWord, kEndOfSentence, kPadding};
      if (line != kExpected[line_no - 1]) {
        throw ParseError("vocabulary file must start with <unk>, </s>, <pad>",
                         line_no);
      }
      continue;
    }
    if (line.empty()) throw ParseError("empty vocabulary entry", line_no);
    words.push_back(line);
  }
  if (line_no < kNumSpecials) {
    throw ParseError("vocabulary file is missing special symbols", line_no);
  }
  try {
    return FromWordList(words);
  } catch (const ValidationError &e) {
    throw ParseError(e.what(), line_no);
  }
}

void Vocabulary::Write(std::ostream &out) const {
  for (const std::string &word : words_) out << word << '\n';
}

std::optional<WordId> Vocabulary::Find(std::string_view word) const {
  auto it = ids_.find(std::string(word));
  if (it == ids_.end()) return std::nullopt;
  return it->second;
}

WordId Vocabulary::Id(std::string_view word) const {
  return Find(word).value_or(kUnkId);
}

const std::string &Vocabulary::Word(WordId id) const {
  if (id < 0 || static_cast<std::size_t>(id) >= words_.size()) {
    throw ValidationError("word id " + std::to_string(id) +
                          " outside vocabulary of size " +
                          std::to_string(words_.size()));
  }
  return words_[static_cast<std::size_t>(id)];
}

Vocabulary BuildVocabulary(std::istream &training_text,
                           std::optional<std::size_t> max_size) {
  std::int64_t num_tokens = 0;
  auto counts = CountWords(training_text, &num_tokens);
  if (num_tokens == 0) {
    throw EmptyCorpusError("training text contains no tokens");
  }
  if (max_size && *max_size == 0) {
    throw ValidationError("max vocabulary size must be positive");
  }
  std::vector<std::pair<std::string, std::int64_t>> ranked(counts.begin(),
                                                           counts.end());
  // std::map iteration is already lexicographic, so a stable sort on count
  // keeps the tie-break.
  std::stable_sort(ranked.begin(), ranked.end(),
                   [](const auto &a, const auto &b) {
                     return a.second > b.second;
                   });
  if (max_size && ranked.size() > *max_size) ranked.resize(*max_size);
  std::vector<std::string> words;
  words.reserve(ranked.size());
  for (auto &[word, count] : ranked) words.push_back(std::move(word));
  return Vocabulary::FromWordList(words);
}

Vocabulary BuildVocabulary(std::istream &training_text,
                           std::span<const std::string> fixed_word_list) {
  std::int64_t num_tokens = 0;
  CountWords(training_text, &num_tokens);
  if (num_tokens == 0) {
    throw EmptyCorpusError("training text contains no tokens");
  }
  return Vocabulary::FromWordList(fixed_word_list);
}

Sentence EncodeSentence(std::string_view line, const Vocabulary &vocab) {
  Sentence sentence;
  ForEachToken(line, [&](std::string_view token) {
    std::optional<WordId> id = vocab.Find(token);
    if (!id || *id == kEosId || *id == kPadId || *id == kUnkId) {
      sentence.ids.push_back(kUnkId);
      ++sentence.oov_count;
    } else {
      sentence.ids.push_back(*id);
    }
  });
  sentence.ids.push_back(kEosId);
  return sentence;
}

std::string DecodeSentence(const Sentence &sentence, const Vocabulary &vocab) {
  std::string out;
  for (std::size_t i = 0; i + 1 < sentence.ids.size(); ++i) {
    if (i > 0) out += ' ';
    out += vocab.Word(sentence.ids[i]);
  }
  return out;
}

std::string_view ToString(BoundaryMode mode) {
  return mode == BoundaryMode::kStraddling ? "straddle" : "independent";
}

BoundaryMode ParseBoundaryMode(std::string_view text) {
  if (text == "independent") return BoundaryMode::kSentenceIndependent;
  if (text == "straddle") return BoundaryMode::kStraddling;
  throw ValidationError("unknown boundary mode '" + std::string(text) +
                        "' (expected independent|straddle)");
}

void CorpusStream::Add(Sentence sentence) {
  if (sentence.ids.empty() || sentence.ids.back() != kEosId ||
      std::count(sentence.ids.begin(), sentence.ids.end(), kEosId) != 1) {
    throw ValidationError("sentence must end in exactly one </s>");
  }
  if (std::find(sentence.ids.begin(), sentence.ids.end(), kPadId) !=
      sentence.ids.end()) {
    throw ValidationError("sentence may not contain <pad>");
  }
  num_tokens_ += sentence.ids.size();
  num_oov_ += sentence.oov_count;
  sentences_.push_back(std::move(sentence));
}

std::vector<WordId> CorpusStream::Flatten() const {
  std::vector<WordId> ids;
  ids.reserve(num_tokens_);
  for (const Sentence &s : sentences_) {
    ids.insert(ids.end(), s.ids.begin(), s.ids.end());
  }
  return ids;
}

CorpusStream ReadCorpus(std::istream &text, const Vocabulary &vocab,
                        BoundaryMode mode) {
  CorpusStream corpus(mode);
  std::string line;
  while (std::getline(text, line)) {
    corpus.Add(EncodeSentence(line, vocab));
  }
  return corpus;
}

double OovRate(const CorpusStream &corpus) {
  if (corpus.num_tokens() == 0) {
    throw EmptyCorpusError("OOV rate of an empty corpus is undefined");
  }
  return static_cast<double>(corpus.num_oov()) /
         static_cast<double>(corpus.num_tokens());
}

}  // namespace nglm
