// Copyright 2026 The userside authors
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

#ifndef USERSIDE_CSV_HPP
#define USERSIDE_CSV_HPP

#include <charconv>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "userside/core.hpp"

/**
 * @file csv.hpp
 * @brief Minimal comma-separated file handling.
 *
 * All files this library reads or writes are plain comma-separated values
 * without quoting or escaping; fields are integers, decimals or simple
 * labels. Parse failures surface as ParseError with a 1-based line number.
 */

namespace userside::csv {

/** Splits one line on commas; no quoting, empty fields preserved. */
inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      fields.emplace_back(line.substr(start));
      return fields;
    }
    fields.emplace_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

inline long long parse_int(std::string_view field, std::size_t line) {
  long long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw ParseError("expected an integer, got '" + std::string(field) + "'", line);
  }
  return value;
}

inline double parse_double(std::string_view field, std::size_t line) {
  // std::from_chars for doubles is incomplete on some standard libraries,
  // so go through strtod with an explicit full-consumption check.
  const std::string buf(field);
  char* end = nullptr;
  const double value = std::strtod(buf.c_str(), &end);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw ParseError("expected a number, got '" + std::string(field) + "'", line);
  }
  return value;
}

/**
 * Reads a whole file into lines, dropping trailing '\r' so CRLF input works.
 * A trailing newline does not produce a final empty line.
 */
inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open " + path.string());
  }
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

/**
 * Writes `content` to `path` atomically: the bytes land in a sibling
 * temporary file which is renamed over the target, so readers never observe
 * a half-written file.
 */
inline void atomic_write(const std::filesystem::path& path, std::string_view content) {
  const std::filesystem::path tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) {
      throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    }
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) {
      throw std::runtime_error("short write to " + tmp.string());
    }
  }
  std::filesystem::rename(tmp, path);
}

/** Fixed-precision decimal formatting, stable across locales. */
inline std::string format_double(double value, int precision = 6) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", precision, value);
  return std::string(buf);
}

}  // namespace userside::csv

#endif  // USERSIDE_CSV_HPP
