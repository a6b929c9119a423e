// Copyright (c) 2026 The gils Authors. All Rights Reserved.
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

namespace gils {

/// Bad arguments, bad configuration, violated preconditions. CLI exit code 2.
struct ValidationError : std::runtime_error {
  explicit ValidationError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Shape or dimension mismatch between numeric containers.
struct DimensionError : ValidationError {
  explicit DimensionError(const std::string& msg) : ValidationError(msg) {}
};

/// Filesystem and serialization failures. CLI exit code 3.
struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed file contents (bad magic, bad version, unparseable row).
struct FormatError : IoError {
  explicit FormatError(const std::string& msg) : IoError(msg) {}
};

/// Payload shorter than the header promised.
struct TruncationError : IoError {
  TruncationError(const std::string& msg, std::size_t expected_bytes,
                  std::size_t actual_bytes)
      : IoError(msg + " (expected " + std::to_string(expected_bytes) +
                " bytes, got " + std::to_string(actual_bytes) + ")"),
        expected(expected_bytes),
        actual(actual_bytes) {}
  std::size_t expected;
  std::size_t actual;
};

/// Non-finite values or diverging iterations. CLI exit code 4.
struct NumericError : std::runtime_error {
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace gils
