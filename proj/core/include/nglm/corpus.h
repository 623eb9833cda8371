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

#ifndef NGLM_CORPUS_H_
#define NGLM_CORPUS_H_

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace nglm {

using WordId = std::int32_t;

inline constexpr std::string_view kUnknownWord = "<unk>";
inline constexpr std::string_view kEndOfSentence = "</s>";
inline constexpr std::string_view kPadding = "<pad>";

// Specials always occupy the first three ids, in this order.
inline constexpr WordId kUnkId = 0;
inline constexpr WordId kEosId = 1;
inline constexpr WordId kPadId = 2;
inline constexpr std::size_t kNumSpecials = 3;

// Closed word <-> id map. Ids are dense in [0, size()).
class Vocabulary {
 public:
  // Vocabulary holding only the three specials.
  Vocabulary();

  // Exactly 'words' plus the specials. Specials inside 'words' are skipped;
  // any other repeated word is a ValidationError.
  static Vocabulary FromWordList(std::span<const std::string> words);

  // One word per line, line number = id, specials first.
  static Vocabulary Read(std::istream &in);
  void Write(std::ostream &out) const;

  std::size_t size() const { return words_.size(); }
  // Maps out-of-vocabulary words to kUnkId.
  WordId Id(std::string_view word) const;
  std::optional<WordId> Find(std::string_view word) const;
  const std::string &Word(WordId id) const;
  bool Contains(std::string_view word) const { return Find(word).has_value(); }
  const std::vector<std::string> &words() const { return words_; }

  WordId unk() const { return kUnkId; }
  WordId eos() const { return kEosId; }
  WordId pad() const { return kPadId; }

  bool operator==(const Vocabulary &other) const {
    return words_ == other.words_;
  }

 private:
  void Append(const std::string &word);

  std::vector<std::string> words_;
  std::unordered_map<std::string, WordId> ids_;
};

// Builds a vocabulary from line-per-sentence text. With no fixed list, keeps
// the max_size most frequent words (ties broken lexicographically); an empty
// max_size means unlimited. Throws EmptyCorpusError when the text holds no
// tokens.
Vocabulary BuildVocabulary(std::istream &training_text,
                           std::optional<std::size_t> max_size = std::nullopt);
Vocabulary BuildVocabulary(std::istream &training_text,
                           std::span<const std::string> fixed_word_list);

// A sentence always ends in exactly one </s>. oov_count records how many of
// its tokens had to be mapped to <unk>.
struct Sentence {
  std::vector<WordId> ids;
  std::size_t oov_count = 0;

  std::size_t size() const { return ids.size(); }
};

// Whitespace tokenization; unknown tokens (and the surface forms of </s> and
// <pad> inside a line) become <unk>. A literal "<unk>" token counts as OOV.
Sentence EncodeSentence(std::string_view line, const Vocabulary &vocab);

// Inverse of EncodeSentence up to OOV replacement; the trailing </s> is
// dropped.
std::string DecodeSentence(const Sentence &sentence, const Vocabulary &vocab);

enum class BoundaryMode { kSentenceIndependent, kStraddling };

std::string_view ToString(BoundaryMode mode);
// Accepts "independent" / "straddle".
BoundaryMode ParseBoundaryMode(std::string_view text);

class CorpusStream {
 public:
  CorpusStream() = default;
  explicit CorpusStream(BoundaryMode mode) : mode_(mode) {}

  void Add(Sentence sentence);

  BoundaryMode mode() const { return mode_; }
  void set_mode(BoundaryMode mode) { mode_ = mode; }
  const std::vector<Sentence> &sentences() const { return sentences_; }
  std::size_t num_sentences() const { return sentences_.size(); }

  // T: every token including </s>; padding is never counted.
  std::size_t num_tokens() const { return num_tokens_; }
  std::size_t num_oov() const { return num_oov_; }

  // All ids in order, sentences concatenated.
  std::vector<WordId> Flatten() const;

 private:
  BoundaryMode mode_ = BoundaryMode::kSentenceIndependent;
  std::vector<Sentence> sentences_;
  std::size_t num_tokens_ = 0;
  std::size_t num_oov_ = 0;
};

CorpusStream ReadCorpus(std::istream &text, const Vocabulary &vocab,
                        BoundaryMode mode);

// Fraction of tokens mapped to <unk>; </s> is in the denominator. Throws
// EmptyCorpusError for T = 0.
double OovRate(const CorpusStream &corpus);

}  // namespace nglm

#endif  // NGLM_CORPUS_H_
