// Copyright 2026 The culture_bridge Authors
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

#ifndef CULTURE_BRIDGE__CSV_HPP_
#define CULTURE_BRIDGE__CSV_HPP_

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "culture_bridge/error.hpp"

namespace culture_bridge::csv
{

inline std::string_view trim(std::string_view s)
{
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep = ',')
{
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find(sep, start);
    if (pos == std::string_view::npos) {
      out.push_back(trim(line.substr(start)));
      break;
    }
    out.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> to_double(std::string_view s)
{
  double v = 0.0;
  const auto * end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec != std::errc() || ptr != end) return std::nullopt;
  return v;
}

inline std::optional<std::int64_t> to_int(std::string_view s)
{
  std::int64_t v = 0;
  const auto * end = s.data() + s.size();
  const auto [ptr, ec] = std::from_chars(s.data(), end, v);
  if (ec == std::errc() && ptr == end) return v;
  // Some exports write integral columns as "3.0".
  if (const auto d = to_double(s); d && *d == static_cast<double>(static_cast<std::int64_t>(*d))) {
    return static_cast<std::int64_t>(*d);
  }
  return std::nullopt;
}

/// Shortest text that parses back to the identical double.
inline std::string format_double(double v)
{
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

/// Header row plus data rows, lines kept for zero-copy field views.
struct Table
{
  std::vector<std::string> header;
  std::vector<std::string> lines;
  std::vector<std::size_t> line_numbers;  // 1-based line number of each data row

  std::optional<std::size_t> column(std::string_view name) const
  {
    for (std::size_t i = 0; i < header.size(); ++i) {
      if (header[i] == name) return i;
    }
    return std::nullopt;
  }
};

inline Table read_table(const std::string & path)
{
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  Table table;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++number;
    if (trim(line).empty()) continue;
    if (!have_header) {
      for (auto f : split(line)) table.header.emplace_back(f);
      // Tolerate a UTF-8 byte order mark on the first column.
      if (!table.header.empty() && table.header[0].rfind("\xEF\xBB\xBF", 0) == 0) {
        table.header[0].erase(0, 3);
      }
      have_header = true;
      continue;
    }
    table.lines.push_back(line);
    table.line_numbers.push_back(number);
  }
  if (!have_header) throw Error(ErrorCode::EmptyFile, path + " has no header row");
  if (table.lines.empty()) throw Error(ErrorCode::EmptyFile, path + " has no data rows");
  return table;
}

}  // namespace culture_bridge::csv

#endif  // CULTURE_BRIDGE__CSV_HPP_
