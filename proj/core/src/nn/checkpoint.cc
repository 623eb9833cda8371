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

#include "nglm/nn/checkpoint.h"

#include <array>
#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <vector>

#include "nglm/error.h"

namespace nglm::nn {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

constexpr std::array<char, 4> kMagic = {'N', 'G', 'F', '1'};
constexpr std::uint8_t kVersion = 1;

class Writer {
 public:
  explicit Writer(std::ostream &out) : out_(out) {}
  template <typename T>
  void Put(const T &value) {
    Bytes(&value, sizeof(T));
  }
  void Bytes(const void *data, std::size_t n) {
    out_.write(static_cast<const char *>(data), static_cast<std::streamsize>(n));
    written_ += n;
  }
  std::uint64_t written() const { return written_; }

 private:
  std::ostream &out_;
  std::uint64_t written_ = 0;
};

class Reader {
 public:
  explicit Reader(std::istream &in) : in_(in) {}
  template <typename T>
  T Get() {
    T value;
    Bytes(&value, sizeof(T));
    return value;
  }
  void Bytes(void *data, std::size_t n) {
    in_.read(static_cast<char *>(data), static_cast<std::streamsize>(n));
    if (static_cast<std::size_t>(in_.gcount()) != n) {
      throw ParseError("truncated checkpoint", 0);
    }
    read_ += n;
  }
  std::uint64_t read() const { return read_; }

 private:
  std::istream &in_;
  std::uint64_t read_ = 0;
};

}  // namespace

FloatWidth ParseFloatWidth(int bits) {
  if (bits == 32) return FloatWidth::k32;
  if (bits == 64) return FloatWidth::k64;
  throw ValidationError("float width must be 32 or 64");
}

void WriteCheckpoint(std::ostream &out, const ParameterStore &store,
                     FloatWidth width) {
  Writer w(out);
  w.Bytes(kMagic.data(), kMagic.size());
  w.Put<std::uint8_t>(kVersion);
  w.Put<std::uint8_t>(static_cast<std::uint8_t>(width));
  for (const Parameter &p : store.parameters()) {
    w.Put<std::uint32_t>(static_cast<std::uint32_t>(p.name.size()));
    w.Bytes(p.name.data(), p.name.size());
    if (p.is_vector) {
      w.Put<std::uint32_t>(1);
      w.Put<std::uint64_t>(static_cast<std::uint64_t>(p.value.rows()));
    } else {
      w.Put<std::uint32_t>(2);
      w.Put<std::uint64_t>(static_cast<std::uint64_t>(p.value.rows()));
      w.Put<std::uint64_t>(static_cast<std::uint64_t>(p.value.cols()));
    }
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        if (width == FloatWidth::k32) {
          w.Put<float>(static_cast<float>(p.value(i, j)));
        } else {
          w.Put<double>(p.value(i, j));
        }
      }
    }
  }
  const std::uint64_t length = w.written();
  w.Put<std::uint64_t>(length);
  if (!out) throw IoError("failed to write checkpoint");
}

ParameterStore ReadCheckpoint(std::istream &in, FloatWidth *width_out) {
  // Slurp so the trailing length can be located.
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string bytes = buffer.str();
  if (bytes.size() < kMagic.size() + 2 + sizeof(std::uint64_t)) {
    throw ParseError("checkpoint too short", 0);
  }
  std::uint64_t length;
  std::memcpy(&length, bytes.data() + bytes.size() - sizeof(length),
              sizeof(length));
  if (length != bytes.size() - sizeof(length)) {
    throw ParseError("checkpoint length checksum mismatch", 0);
  }
  std::istringstream body(bytes.substr(0, length));
  Reader r(body);
  std::array<char, 4> magic;
  r.Bytes(magic.data(), magic.size());
  if (magic != kMagic) throw ParseError("bad checkpoint magic", 0);
  if (r.Get<std::uint8_t>() != kVersion) {
    throw ParseError("unsupported checkpoint version", 0);
  }
  const std::uint8_t width_bits = r.Get<std::uint8_t>();
  if (width_bits != 32 && width_bits != 64) {
    throw ParseError("bad checkpoint float width", 0);
  }
  const FloatWidth width = static_cast<FloatWidth>(width_bits);
  if (width_out) *width_out = width;

  ParameterStore store;
  while (r.read() < length) {
    const auto name_len = r.Get<std::uint32_t>();
    if (name_len == 0 || name_len > length - r.read()) {
      throw ParseError("bad parameter name length", 0);
    }
    std::string name(name_len, '\0');
    r.Bytes(name.data(), name_len);
    const auto rank = r.Get<std::uint32_t>();
    if (rank != 1 && rank != 2) throw ParseError("bad parameter rank", 0);
    const auto rows = r.Get<std::uint64_t>();
    const std::uint64_t cols = rank == 2 ? r.Get<std::uint64_t>() : 1;
    const std::uint64_t elem = width == FloatWidth::k32 ? 4 : 8;
    if (rows == 0 || cols == 0 || rows * cols * elem > length - r.read()) {
      throw ParseError("parameter '" + name + "' overruns checkpoint", 0);
    }
    Parameter &p = rank == 1
                       ? store.AddVector(name, static_cast<Eigen::Index>(rows))
                       : store.Add(name, static_cast<Eigen::Index>(rows),
                                   static_cast<Eigen::Index>(cols));
    for (Eigen::Index i = 0; i < p.value.rows(); ++i) {
      for (Eigen::Index j = 0; j < p.value.cols(); ++j) {
        p.value(i, j) = width == FloatWidth::k32
                            ? static_cast<double>(r.Get<float>())
                            : r.Get<double>();
      }
    }
    CheckFinite(p.value, name);
  }
  return store;
}

std::filesystem::path SidecarPath(const std::filesystem::path &checkpoint) {
  std::filesystem::path p = checkpoint;
  p += ".json";
  return p;
}

void SaveCheckpoint(const std::filesystem::path &path,
                    const ParameterStore &store, FloatWidth width,
                    std::string_view metadata_json) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  WriteCheckpoint(out, store, width);
  std::ofstream meta(SidecarPath(path));
  if (!meta) throw IoError("cannot write checkpoint metadata");
  meta << metadata_json << '\n';
}

ParameterStore LoadCheckpoint(const std::filesystem::path &path,
                              std::string *metadata_json) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint '" + path.string() + "'");
  ParameterStore store = ReadCheckpoint(in);
  if (metadata_json) {
    std::ifstream meta(SidecarPath(path));
    if (!meta) throw IoError("missing checkpoint metadata '" +
                             SidecarPath(path).string() + "'");
    std::ostringstream s;
    s << meta.rdbuf();
    *metadata_json = s.str();
  }
  return store;
}

}  // namespace nglm::nn
