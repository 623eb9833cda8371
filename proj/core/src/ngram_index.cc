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

#include "nglm/ngram_index.h"

#include <algorithm>
#include <bit>
#include <limits>
#include <numeric>

#include "nglm/error.h"

namespace nglm {

NGramIndex::NGramIndex(int order) : order_(order), slots_(16, 0) {
  if (order < 0) throw ValidationError("n-gram index order must be >= 0");
}

std::uint64_t NGramIndex::Hash(std::span<const WordId> key) {
  std::uint64_t h = 0x9E3779B97F4A7C15ull;
  for (WordId id : key) {
    h ^= static_cast<std::uint32_t>(id);
    h *= 0xBF58476D1CE4E5B9ull;
    h ^= h >> 31;
  }
  h ^= h >> 29;
  h *= 0x94D049BB133111EBull;
  h ^= h >> 32;
  return h;
}

std::size_t NGramIndex::Find(std::span<const WordId> key) const {
  if (key.size() != static_cast<std::size_t>(order_)) return kNotFound;
  const std::size_t mask = slots_.size() - 1;
  for (std::size_t slot = Hash(key) & mask;; slot = (slot + 1) & mask) {
    const std::uint32_t entry = slots_[slot];
    if (entry == 0) return kNotFound;
    const std::size_t index = entry - 1;
    auto stored = Key(index);
    if (std::equal(stored.begin(), stored.end(), key.begin())) return index;
  }
}

std::pair<std::size_t, bool> NGramIndex::Insert(std::span<const WordId> key) {
  if (key.size() != static_cast<std::size_t>(order_)) {
    throw ValidationError("n-gram of length " + std::to_string(key.size()) +
                          " inserted into order-" + std::to_string(order_) +
                          " index");
  }
  if ((size_ + 1) * 4 > slots_.size() * 3) Grow();
  const std::size_t mask = slots_.size() - 1;
  for (std::size_t slot = Hash(key) & mask;; slot = (slot + 1) & mask) {
    const std::uint32_t entry = slots_[slot];
    if (entry == 0) {
      if (size_ >= std::numeric_limits<std::uint32_t>::max() - 1) {
        throw ValidationError("n-gram index capacity exceeded");
      }
      keys_.insert(keys_.end(), key.begin(), key.end());
      slots_[slot] = static_cast<std::uint32_t>(size_ + 1);
      return {size_++, true};
    }
    auto stored = Key(entry - 1);
    if (std::equal(stored.begin(), stored.end(), key.begin())) {
      return {entry - 1, false};
    }
  }
}

void NGramIndex::Grow() {
  std::vector<std::uint32_t> old(slots_.size() * 2, 0);
  old.swap(slots_);
  const std::size_t mask = slots_.size() - 1;
  for (std::uint32_t entry : old) {
    if (entry == 0) continue;
    std::size_t slot = Hash(Key(entry - 1)) & mask;
    while (slots_[slot] != 0) slot = (slot + 1) & mask;
    slots_[slot] = entry;
  }
}

void NGramIndex::Reserve(std::size_t n) {
  keys_.reserve(n * static_cast<std::size_t>(order_));
  const std::size_t wanted = std::bit_ceil(n * 4 / 3 + 16);
  while (slots_.size() < wanted) Grow();
}

std::vector<std::size_t> NGramIndex::SortedIndices() const {
  std::vector<std::size_t> order(size_);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [this](std::size_t a, std::size_t b) {
    auto ka = Key(a);
    auto kb = Key(b);
    return std::lexicographical_compare(ka.begin(), ka.end(), kb.begin(),
                                        kb.end());
  });
  return order;
}

}  // namespace nglm
