// Copyright 2026 The usdh Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

namespace usdh {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed or unreadable on-disk data. Carries the byte offset at which the
/// problem was detected when one is meaningful.
class FormatError : public Error {
 public:
  FormatError(const std::string& what, std::uint64_t offset);
  explicit FormatError(const std::string& what);

  bool has_offset() const { return has_offset_; }
  std::uint64_t offset() const { return offset_; }

 private:
  std::uint64_t offset_ = 0;
  bool has_offset_ = false;
};

/// Dimension or shape disagreement between arguments.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument outside its documented domain (zero sizes, bad weights, ...).
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Training aborted: non-finite loss, divergence, or an inapplicable stage.
class TrainingError : public Error {
 public:
  using Error::Error;
};

}  // namespace usdh
