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

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace usdh {

/// Plain-text key=value lines. Blank lines and lines starting with '#' are
/// ignored; whitespace around keys and values is trimmed. Used for feature
/// manifests, config files and report output.
using KeyValues = std::map<std::string, std::string>;

KeyValues parse_key_values(std::string_view text);
std::string format_key_values(const KeyValues& kv);

KeyValues read_key_values(const std::filesystem::path& path);
void write_key_values(const KeyValues& kv, const std::filesystem::path& path);

/// Sidecar manifest for a feature file: "<features>.manifest".
std::filesystem::path manifest_path(const std::filesystem::path& features);
/// nullopt if the sidecar is absent.
std::optional<KeyValues> read_manifest(const std::filesystem::path& features);
void write_manifest(const KeyValues& kv, const std::filesystem::path& features);

/// Comma-separated list of reals ("1,0.5, 0.25"). Throws InvalidArgument.
std::vector<double> parse_real_list(std::string_view text);
/// Shortest text that parses back to exactly `v`.
std::string format_real(double v);

std::string format_real_list(const std::vector<double>& values);

}  // namespace usdh
