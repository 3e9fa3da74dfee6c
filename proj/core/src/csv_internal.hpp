#pragma once

#include <charconv>
#include <string>
#include <vector>

#include "softrestrict/model.hpp"

namespace softrestrict::detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string current;
  for (const char ch : line) {
    if (ch == ',') {
      cells.push_back(current);
      current.clear();
    } else {
      current += ch;
    }
  }
  cells.push_back(current);
  for (auto& cell : cells) {
    const auto first = cell.find_first_not_of(" \t\r");
    const auto last = cell.find_last_not_of(" \t\r");
    cell = first == std::string::npos ? std::string() : cell.substr(first, last - first + 1);
  }
  return cells;
}

inline double parse_csv_double(const std::string& cell, std::size_t row,
                               const std::string& column) {
  double v = 0.0;
  const char* begin = cell.data();
  const char* end = begin + cell.size();
  const auto res = std::from_chars(begin, end, v);
  if (res.ec != std::errc{} || res.ptr != end)
    throw DataError("CSV: cannot parse value '" + cell + "' in column '" + column +
                    "', data row " + std::to_string(row));
  return v;
}

} // namespace softrestrict::detail
