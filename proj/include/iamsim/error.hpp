// Copyright 2026 The iamsim Authors.
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

#pragma once

#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace iamsim {

// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input text: policy JSON, scenario JSON, log lines, patterns.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A structurally valid document that breaks referential or type invariants.
// Carries every violation found, not just the first one.
class ValidationError : public Error {
 public:
  explicit ValidationError(std::vector<std::string> violations)
      : Error(join(violations)), violations_(std::move(violations)) {}

  const std::vector<std::string>& violations() const noexcept {
    return violations_;
  }

 private:
  static std::string join(const std::vector<std::string>& violations) {
    std::string out = std::to_string(violations.size()) + " violation(s)";
    for (const auto& v : violations) {
      out += "\n  - ";
      out += v;
    }
    return out;
  }

  std::vector<std::string> violations_;
};

class NotFoundError : public Error {
 public:
  using Error::Error;
};

// A request or argument that breaks an operation's precondition.
class InvalidRequestError : public Error {
 public:
  using Error::Error;
};

// A file could not be opened, read, or written.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace iamsim
