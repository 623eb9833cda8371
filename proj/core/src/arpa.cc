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

#include "nglm/arpa.h"

#include <charconv>
#include <cmath>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "nglm/error.h"

namespace nglm {
namespace {

constexpr double kLn10 = 2.302585092994045684;
constexpr std::string_view kSmoothingTag = "# smoothing: ";

bool ParseDouble(std::string_view text, double *value) {
  auto [ptr, ec] =
      std::from_chars(text.data(), text.data() + text.size(), *value);
  return ec == std::errc() && ptr == text.data() + text.size();
}

std::vector<std::string_view> SplitFields(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t i = 0;
  while (i <= line.size()) {
    const std::size_t j = line.find('\t', i);
    const std::size_t end = j == std::string_view::npos ? line.size() : j;
    fields.push_back(line.substr(i, end - i));
    if (j == std::string_view::npos) break;
    i = j + 1;
  }
  return fields;
}

}  // namespace

void WriteArpa(std::ostream &out, const ArpaModel &model) {
  const Vocabulary &vocab = model.vocabulary();
  out << kSmoothingTag << ToString(model.smoothing()) << "\n\n";
  out << "\\data\\\n";
  for (int m = 1; m <= model.order(); ++m) {
    out << "ngram " << m << '=' << model.NumEntries(m) << '\n';
  }
  out << std::fixed << std::setprecision(6);
  for (int m = 1; m <= model.order(); ++m) {
    out << "\n\\" << m << "-grams:\n";
    const NGramIndex &index = model.Index(m);
    for (std::size_t i : index.SortedIndices()) {
      const ArpaModel::Entry &e = model.EntryAt(m, i);
      out << e.log_prob / kLn10 << '\t';
      auto key = index.Key(i);
      for (std::size_t k = 0; k < key.size(); ++k) {
        if (k > 0) out << ' ';
        out << vocab.Word(key[k]);
      }
      if (m < model.order()) out << '\t' << e.log_backoff / kLn10;
      out << '\n';
    }
  }
  out << "\n\\end\\\n";
}

ArpaModel ReadArpa(std::istream &in, const Vocabulary &vocab) {
  std::string line;
  std::size_t line_no = 0;
  Smoothing smoothing = Smoothing::kKneserNeyInterpolated;

  auto next_line = [&]() -> bool {
    if (!std::getline(in, line)) return false;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    return true;
  };

  // Preamble up to \data\.
  bool found_data = false;
  while (next_line()) {
    if (line.rfind(kSmoothingTag, 0) == 0) {
      try {
        smoothing = ParseSmoothing(line.substr(kSmoothingTag.size()));
      } catch (const ValidationError &) {
        throw ParseError("unknown smoothing tag", line_no);
      }
    }
    if (line == "\\data\\") {
      found_data = true;
      break;
    }
  }
  if (!found_data) throw ParseError("missing \\data\\ header", line_no);

  std::vector<std::size_t> expected;
  while (next_line()) {
    if (line.empty()) {
      if (expected.empty()) continue;
      break;
    }
    if (line.rfind("ngram ", 0) != 0) {
      throw ParseError("expected 'ngram m=K' line", line_no);
    }
    const std::size_t eq = line.find('=');
    std::size_t m = 0, count = 0;
    try {
      if (eq == std::string::npos) throw std::invalid_argument("=");
      std::size_t used = 0;
      m = std::stoul(line.substr(6, eq - 6), &used);
      if (used != eq - 6) throw std::invalid_argument("m");
      count = std::stoul(line.substr(eq + 1), &used);
      if (used != line.size() - eq - 1) throw std::invalid_argument("count");
    } catch (const std::exception &) {
      throw ParseError("malformed ngram count line", line_no);
    }
    if (m != expected.size() + 1) {
      throw ParseError("ngram counts must be listed for orders 1, 2, ...",
                       line_no);
    }
    expected.push_back(count);
  }
  if (expected.empty()) throw ParseError("no ngram counts in header", line_no);

  const int order = static_cast<int>(expected.size());
  ArpaModel model(order, vocab, smoothing);
  std::vector<WordId> ngram;
  for (int m = 1; m <= order; ++m) {
    while (next_line() && line.empty()) {
    }
    const std::string header = "\\" + std::to_string(m) + "-grams:";
    if (line != header) {
      throw ParseError("expected section header '" + header + "'", line_no);
    }
    std::size_t read = 0;
    while (next_line() && !line.empty()) {
      if (line[0] == '\\') break;
      auto fields = SplitFields(line);
      const bool has_bow = fields.size() == 3;
      if (fields.size() != 2 && !has_bow) {
        throw ParseError("expected 'log10prob<TAB>words[<TAB>log10bow]'",
                         line_no);
      }
      double log10_prob = 0.0, log10_bow = 0.0;
      if (!ParseDouble(fields[0], &log10_prob) ||
          (has_bow && !ParseDouble(fields[2], &log10_bow))) {
        throw ParseError("malformed number", line_no);
      }
      if (!std::isfinite(log10_prob) || log10_prob > 0.0 ||
          !std::isfinite(log10_bow)) {
        throw ParseError("log probability must be finite and <= 0", line_no);
      }
      ngram.clear();
      std::istringstream words{std::string(fields[1])};
      std::string word;
      while (words >> word) {
        std::optional<WordId> id = vocab.Find(word);
        if (!id) throw ParseError("word '" + word + "' not in vocabulary", line_no);
        ngram.push_back(*id);
      }
      if (static_cast<int>(ngram.size()) != m) {
        throw ParseError("expected " + std::to_string(m) + " words", line_no);
      }
      if (model.Find(ngram)) throw ParseError("duplicate n-gram", line_no);
      model.Set(ngram, log10_prob * kLn10, log10_bow * kLn10);
      ++read;
    }
    if (read != expected[static_cast<std::size_t>(m - 1)]) {
      throw ParseError("section " + std::to_string(m) + "-grams has " +
                           std::to_string(read) + " entries but header says " +
                           std::to_string(expected[static_cast<std::size_t>(m - 1)]),
                       line_no);
    }
    if (!line.empty() && line[0] == '\\' && line != "\\end\\") {
      throw ParseError("missing blank line before next section", line_no);
    }
    if (line == "\\end\\") {
      if (m != order) throw ParseError("premature \\end\\", line_no);
      return model;
    }
  }
  while (next_line()) {
    if (line.empty()) continue;
    if (line == "\\end\\") return model;
    throw ParseError("expected \\end\\", line_no);
  }
  throw ParseError("missing \\end\\", line_no);
}

}  // namespace nglm
