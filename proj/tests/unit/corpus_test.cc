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

#include <sstream>

#include <gtest/gtest.h>

#include "nglm/error.h"

namespace nglm {
namespace {

Vocabulary Build(const std::string &text,
                 std::optional<std::size_t> max_size = std::nullopt) {
  std::istringstream in(text);
  return BuildVocabulary(in, max_size);
}

TEST(Vocabulary, SpecialsHaveFixedIds) {
  Vocabulary v;
  EXPECT_EQ(v.size(), 3u);
  EXPECT_EQ(v.Id("<unk>"), kUnkId);
  EXPECT_EQ(v.Id("</s>"), kEosId);
  EXPECT_EQ(v.Id("<pad>"), kPadId);
  EXPECT_EQ(v.Word(kPadId), "<pad>");
}

TEST(Vocabulary, UnlimitedKeepsEveryWord) {
  const Vocabulary v = Build("a b a\nb c");
  EXPECT_EQ(v.size(), 6u);
  for (const char *w : {"a", "b", "c", "<unk>", "</s>", "<pad>"}) {
    EXPECT_TRUE(v.Contains(w)) << w;
  }
}

TEST(Vocabulary, TruncationBreaksTiesLexicographically) {
  const Vocabulary v = Build("a b a\nb c", 2);
  EXPECT_EQ(v.size(), 5u);
  EXPECT_TRUE(v.Contains("a"));
  EXPECT_TRUE(v.Contains("b"));
  EXPECT_EQ(v.Id("c"), kUnkId);
  // Ties in both directions of input order give the same result.
  const Vocabulary w = Build("d c d c b", 2);
  EXPECT_TRUE(w.Contains("c"));
  EXPECT_TRUE(w.Contains("d"));
  EXPECT_FALSE(w.Contains("b"));
  const Vocabulary x = Build("z y x", 2);
  EXPECT_EQ(x.words()[3], "x");
  EXPECT_EQ(x.words()[4], "y");
}

TEST(Vocabulary, FrequencyOrdersIds) {
  const Vocabulary v = Build("b b b a a c");
  EXPECT_EQ(v.Id("b"), 3);
  EXPECT_EQ(v.Id("a"), 4);
  EXPECT_EQ(v.Id("c"), 5);
}

TEST(Vocabulary, Deterministic) {
  const std::string text = "q w e r t y q w e q\nw w r";
  EXPECT_EQ(Build(text, 3), Build(text, 3));
}

TEST(Vocabulary, EmptyInputIsAnError) {
  EXPECT_THROW(Build(""), EmptyCorpusError);
  EXPECT_THROW(Build("\n \n\t\n"), EmptyCorpusError);
}

TEST(Vocabulary, FixedWordList) {
  const std::vector<std::string> list = {"x", "<unk>", "y"};
  std::istringstream in("a b c");
  const Vocabulary v = BuildVocabulary(in, std::span<const std::string>(list));
  EXPECT_EQ(v.size(), 5u);
  EXPECT_EQ(v.Id("x"), 3);
  EXPECT_EQ(v.Id("y"), 4);
  EXPECT_EQ(v.Id("a"), kUnkId);

  const std::vector<std::string> dup = {"x", "y", "x"};
  std::istringstream in2("a");
  EXPECT_THROW(BuildVocabulary(in2, std::span<const std::string>(dup)),
               ValidationError);
}

TEST(Vocabulary, FileRoundTrip) {
  const Vocabulary v = Build("the cat sat on the mat");
  std::stringstream s;
  v.Write(s);
  EXPECT_EQ(Vocabulary::Read(s), v);
}

TEST(Vocabulary, ReadRejectsBadFiles) {
  std::istringstream wrong_order("</s>\n<unk>\n<pad>\na\n");
  EXPECT_THROW(Vocabulary::Read(wrong_order), ParseError);
  std::istringstream dup("<unk>\n</s>\n<pad>\na\nb\na\n");
  try {
    Vocabulary::Read(dup);
    FAIL() << "duplicate accepted";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.kind(), "parse_error");
  }
  std::istringstream short_file("<unk>\n");
  EXPECT_THROW(Vocabulary::Read(short_file), ParseError);
  std::istringstream blank("<unk>\n</s>\n<pad>\n\n");
  try {
    Vocabulary::Read(blank);
    FAIL() << "blank entry accepted";
  } catch (const ParseError &e) {
    EXPECT_EQ(e.line(), 4u);
  }
}

TEST(Encode, MapsWordsAndAppendsEos) {
  const Vocabulary v = Vocabulary::FromWordList(std::vector<std::string>{"a", "b"});
  const Sentence s = EncodeSentence("a b", v);
  EXPECT_EQ(s.ids, (std::vector<WordId>{3, 4, kEosId}));
  EXPECT_EQ(s.oov_count, 0u);
}

TEST(Encode, UnknownWordsBecomeUnk) {
  const Vocabulary v = Vocabulary::FromWordList(std::vector<std::string>{"a", "b"});
  const Sentence s = EncodeSentence("a z", v);
  EXPECT_EQ(s.ids, (std::vector<WordId>{3, kUnkId, kEosId}));
  EXPECT_EQ(s.oov_count, 1u);
}

TEST(Encode, EmptyLine) {
  const Sentence s = EncodeSentence("", Vocabulary());
  EXPECT_EQ(s.ids, std::vector<WordId>{kEosId});
}

TEST(Encode, LiteralSpecialsAreOutOfVocabulary) {
  const Vocabulary v = Vocabulary::FromWordList(std::vector<std::string>{"a"});
  const Sentence s = EncodeSentence("a </s> <pad> <unk>", v);
  EXPECT_EQ(s.ids, (std::vector<WordId>{3, kUnkId, kUnkId, kUnkId, kEosId}));
  EXPECT_EQ(s.oov_count, 3u);
}

TEST(Encode, DecodeRoundTrip) {
  const Vocabulary v =
      Vocabulary::FromWordList(std::vector<std::string>{"a", "b", "c"});
  EXPECT_EQ(DecodeSentence(EncodeSentence("a  b\tc", v), v), "a b c");
  EXPECT_EQ(DecodeSentence(EncodeSentence("a x c", v), v), "a <unk> c");
  EXPECT_EQ(DecodeSentence(EncodeSentence("", v), v), "");
}

TEST(Corpus, TokenCountsAndOovRate) {
  const Vocabulary v = Vocabulary::FromWordList(std::vector<std::string>{"a", "b"});
  std::istringstream in("a z");
  const CorpusStream c = ReadCorpus(in, v, BoundaryMode::kSentenceIndependent);
  EXPECT_EQ(c.num_tokens(), 3u);
  EXPECT_NEAR(OovRate(c), 1.0 / 3.0, 1e-15);

  std::istringstream clean("a b\nb\n");
  EXPECT_EQ(OovRate(ReadCorpus(clean, v, BoundaryMode::kStraddling)), 0.0);
  EXPECT_THROW(OovRate(CorpusStream()), EmptyCorpusError);
}

TEST(Corpus, TokenCountIgnoresBoundaryMode) {
  const Vocabulary v = Vocabulary::FromWordList(std::vector<std::string>{"a", "b"});
  const std::string text = "a b\n\nb a a\n";
  std::istringstream x(text), y(text);
  const auto ind = ReadCorpus(x, v, BoundaryMode::kSentenceIndependent);
  const auto str = ReadCorpus(y, v, BoundaryMode::kStraddling);
  EXPECT_EQ(ind.num_tokens(), str.num_tokens());
  EXPECT_EQ(ind.num_tokens(), 3u + 1u + 4u);
  EXPECT_EQ(ind.Flatten(), str.Flatten());
}

TEST(Corpus, RejectsMalformedSentences) {
  CorpusStream c;
  EXPECT_THROW(c.Add(Sentence{{3, 4}, 0}), ValidationError);
  EXPECT_THROW(c.Add(Sentence{{kEosId, 3, kEosId}, 0}), ValidationError);
  EXPECT_THROW(c.Add(Sentence{{kPadId, 3, kEosId}, 0}), ValidationError);
  EXPECT_THROW(c.Add(Sentence{{}, 0}), ValidationError);
  c.Add(Sentence{{kEosId}, 0});
  EXPECT_EQ(c.num_tokens(), 1u);
}

TEST(Corpus, BoundaryModeNames) {
  EXPECT_EQ(ParseBoundaryMode("independent"), BoundaryMode::kSentenceIndependent);
  EXPECT_EQ(ParseBoundaryMode("straddle"), BoundaryMode::kStraddling);
  EXPECT_EQ(ToString(BoundaryMode::kStraddling), "straddle");
  EXPECT_THROW(ParseBoundaryMode("both"), ValidationError);
}

}  // namespace
}  // namespace nglm
