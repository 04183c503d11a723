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

#include "usdh/manifest.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "usdh/error.hpp"

namespace usdh {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

KeyValues parse_key_values(std::string_view text) {
  KeyValues kv;
  std::size_t line_no = 0;
  while (!text.empty()) {
    ++line_no;
    const auto eol = text.find('\n');
    const std::string_view line = trim(text.substr(0, eol));
    text = eol == std::string_view::npos ? std::string_view{} : text.substr(eol + 1);
    if (line.empty() || line.front() == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw InvalidArgument("line " + std::to_string(line_no) + ": expected key=value");
    }
    const auto key = trim(line.substr(0, eq));
    if (key.empty()) throw InvalidArgument("line " + std::to_string(line_no) + ": empty key");
    kv[std::string(key)] = std::string(trim(line.substr(eq + 1)));
  }
  return kv;
}

std::string format_key_values(const KeyValues& kv) {
  std::string out;
  for (const auto& [k, v] : kv) {
    out += k;
    out += '=';
    out += v;
    out += '\n';
  }
  return out;
}

KeyValues read_key_values(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path.string() + " for reading");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return parse_key_values(buf.str());
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path.string() + ": " + e.what());
  }
}

void write_key_values(const KeyValues& kv, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << format_key_values(kv);
  if (!out) throw Error("write failed for " + path.string());
}

std::filesystem::path manifest_path(const std::filesystem::path& features) {
  return std::filesystem::path(features.string() + ".manifest");
}

std::optional<KeyValues> read_manifest(const std::filesystem::path& features) {
  const auto path = manifest_path(features);
  if (!std::filesystem::exists(path)) return std::nullopt;
  return read_key_values(path);
}

void write_manifest(const KeyValues& kv, const std::filesystem::path& features) {
  write_key_values(kv, manifest_path(features));
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> out;
  text = trim(text);
  if (text.empty()) return out;
  while (true) {
    const auto comma = text.find(',');
    const auto item = trim(text.substr(0, comma));
    double v = 0;
    // "1/8" style fractions are accepted alongside plain decimals.
    const auto slash = item.find('/');
    auto parse = [&](std::string_view s, double& dst) {
      const auto res = std::from_chars(s.data(), s.data() + s.size(), dst);
      if (res.ec != std::errc{} || res.ptr != s.data() + s.size()) {
        throw InvalidArgument("not a number: '" + std::string(item) + "'");
      }
    };
    if (slash == std::string_view::npos) {
      parse(item, v);
    } else {
      double num = 0, den = 0;
      parse(trim(item.substr(0, slash)), num);
      parse(trim(item.substr(slash + 1)), den);
      if (den == 0) throw InvalidArgument("zero denominator in '" + std::string(item) + "'");
      v = num / den;
    }
    out.push_back(v);
    if (comma == std::string_view::npos) break;
    text = text.substr(comma + 1);
  }
  return out;
}

std::string format_real(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

std::string format_real_list(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += ',';
    out += format_real(values[i]);
  }
  return out;
}

}  // namespace usdh
