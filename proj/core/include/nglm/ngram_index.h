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

#ifndef NGLM_NGRAM_INDEX_H_
#define NGLM_NGRAM_INDEX_H_

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "nglm/corpus.h"

namespace nglm {

// Open-addressing map from fixed-length id tuples to dense indices
// 0..size()-1 in insertion order. Keys live contiguously in one arena, so a
// table of a few million n-grams costs (order * 4 + ~12) bytes per entry.
class NGramIndex {
 public:
  static constexpr std::size_t kNotFound = static_cast<std::size_t>(-1);

  explicit NGramIndex(int order = 0);

  int order() const { return order_; }
  std::size_t size() const { return size_; }
  bool empty() const { return size_ == 0; }

  // Returns (index, inserted).
  std::pair<std::size_t, bool> Insert(std::span<const WordId> key);
  std::size_t Find(std::span<const WordId> key) const;
  bool Contains(std::span<const WordId> key) const {
    return Find(key) != kNotFound;
  }

  std::span<const WordId> Key(std::size_t index) const {
    return {keys_.data() + index * static_cast<std::size_t>(order_),
            static_cast<std::size_t>(order_)};
  }

  // Indices ordered lexicographically by key.
  std::vector<std::size_t> SortedIndices() const;

  void Reserve(std::size_t n);

 private:
  static std::uint64_t Hash(std::span<const WordId> key);
  void Grow();

  int order_;
  std::size_t size_ = 0;
  std::vector<WordId> keys_;
  // 0 marks an empty slot, otherwise dense index + 1.
  std::vector<std::uint32_t> slots_;
};

}  // namespace nglm

#endif  // NGLM_NGRAM_INDEX_H_
