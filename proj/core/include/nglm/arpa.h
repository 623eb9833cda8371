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

#ifndef NGLM_ARPA_H_
#define NGLM_ARPA_H_

#include <iosfwd>

#include "nglm/backoff_lm.h"
#include "nglm/corpus.h"

namespace nglm {

// Standard ARPA layout: \data\ header with "ngram m=K" lines, one
// \m-grams: section per level ("log10prob TAB words [TAB log10bow]") and
// \end\. Values are printed with 6 decimals. The smoothing tag travels in a
// comment line before \data\.
void WriteArpa(std::ostream &out, const ArpaModel &model);

// Words must belong to 'vocab'. Throws ParseError with the offending line.
ArpaModel ReadArpa(std::istream &in, const Vocabulary &vocab);

}  // namespace nglm

#endif  // NGLM_ARPA_H_
