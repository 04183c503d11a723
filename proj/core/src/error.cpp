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

#include "usdh/error.hpp"

namespace usdh {

FormatError::FormatError(const std::string& what, std::uint64_t offset)
    : Error(what + " (byte offset " + std::to_string(offset) + ")"),
      offset_(offset),
      has_offset_(true) {}

FormatError::FormatError(const std::string& what) : Error(what) {}

}  // namespace usdh
