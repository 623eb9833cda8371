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

#ifndef NGLM_NN_CHECKPOINT_H_
#define NGLM_NN_CHECKPOINT_H_

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>

#include "nglm/nn/parameters.h"

namespace nglm::nn {

enum class FloatWidth { k32 = 32, k64 = 64 };

FloatWidth ParseFloatWidth(int bits);

// Binary layout, little-endian:
//   "NGF1" | version u8 | float width u8 (32 or 64)
//   per parameter: name length u32 | name | rank u32 | dims u64... |
//                  row-major values
//   total byte count of everything above, u64
// Only parameter values are stored; gradients and optimizer state are not.
void WriteCheckpoint(std::ostream &out, const ParameterStore &store,
                     FloatWidth width);
ParameterStore ReadCheckpoint(std::istream &in, FloatWidth *width = nullptr);

// Writes 'path' plus a sidecar 'path.json' holding metadata_json verbatim.
void SaveCheckpoint(const std::filesystem::path &path,
                    const ParameterStore &store, FloatWidth width,
                    std::string_view metadata_json);
ParameterStore LoadCheckpoint(const std::filesystem::path &path,
                              std::string *metadata_json = nullptr);

std::filesystem::path SidecarPath(const std::filesystem::path &checkpoint);

}  // namespace nglm::nn

#endif  // NGLM_NN_CHECKPOINT_H_
