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

#ifndef NGLM_ERROR_H_
#define NGLM_ERROR_H_

#include <cstddef>
#include <stdexcept>
#include <string>

namespace nglm {

// Base of every error raised by the library. kind() is a stable, machine
// readable tag used by the command-line front end.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string &message)
      : std::runtime_error(message), kind_(std::move(kind)) {}
  const std::string &kind() const { return kind_; }

 private:
  std::string kind_;
};

class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string &message)
      : Error("validation_error", message) {}
};

class EmptyCorpusError : public Error {
 public:
  explicit EmptyCorpusError(const std::string &message)
      : Error("empty_corpus", message) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string &message)
      : Error("numerical_error", message) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string &message) : Error("io_error", message) {}
};

// Malformed input file; line() is 1-based (0 when not applicable).
class ParseError : public Error {
 public:
  ParseError(const std::string &message, std::size_t line)
      : Error("parse_error", message + " at line " + std::to_string(line)),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

}  // namespace nglm

#endif  // NGLM_ERROR_H_
