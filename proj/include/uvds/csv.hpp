#pragma once

#include <charconv>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "uvds/error.hpp"
#include "uvds/types.hpp"

namespace uvds {

/// Shortest decimal form that parses back to the identical double.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

inline double parse_double(std::string_view token, const std::string& where) {
  double value = 0.0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorKind::IoError,
         where + ": cannot parse '" + std::string(token) + "' as a number");
  return value;
}

inline long parse_int(std::string_view token, const std::string& where) {
  long value = 0;
  const char* begin = token.data();
  const char* end = begin + token.size();
  const auto res = std::from_chars(begin, end, value);
  if (res.ec != std::errc() || res.ptr != end)
    fail(ErrorKind::IoError,
         where + ": cannot parse '" + std::string(token) + "' as an integer");
  return value;
}

namespace detail {

inline std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  // A lone empty final line is the artifact of a trailing terminator.
  if (!lines.empty() && lines.back().empty()) lines.pop_back();
  return lines;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  size_t start = 0;
  while (true) {
    const size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      out.push_back(line.substr(start));
      return out;
    }
    out.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
}

}  // namespace detail

/// Dense numeric CSV: no header, `.` decimal point, `\n` terminators.
inline Matrix read_csv_matrix(const std::string& path) {
  const std::vector<std::string> lines = detail::read_lines(path);
  if (lines.empty()) fail(ErrorKind::IoError, path + " is empty");
  const auto first = detail::split_commas(lines[0]);
  const Index cols = static_cast<Index>(first.size());
  Matrix m(static_cast<Index>(lines.size()), cols);
  for (size_t r = 0; r < lines.size(); ++r) {
    const auto cells = detail::split_commas(lines[r]);
    if (static_cast<Index>(cells.size()) != cols)
      fail(ErrorKind::IoError, path + " row " + std::to_string(r + 1) +
                                   " has " + std::to_string(cells.size()) +
                                   " cells, expected " + std::to_string(cols));
    for (Index c = 0; c < cols; ++c)
      m(static_cast<Index>(r), c) = parse_double(
          cells[static_cast<size_t>(c)], path + " row " + std::to_string(r + 1));
  }
  require_finite(m, path);
  return m;
}

inline void write_csv_matrix(const std::string& path, const Matrix& m) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  for (Index r = 0; r < m.rows(); ++r) {
    for (Index c = 0; c < m.cols(); ++c) {
      if (c > 0) out << ',';
      out << format_double(m(r, c));
    }
    out << '\n';
  }
  if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

/// One positive integer per line.
inline std::vector<int> read_csv_labels(const std::string& path) {
  const std::vector<std::string> lines = detail::read_lines(path);
  if (lines.empty()) fail(ErrorKind::IoError, path + " is empty");
  std::vector<int> labels;
  labels.reserve(lines.size());
  for (size_t r = 0; r < lines.size(); ++r) {
    const long v = parse_int(lines[r], path + " row " + std::to_string(r + 1));
    if (v < 1)
      fail(ErrorKind::IoError, path + " row " + std::to_string(r + 1) +
                                   ": labels must be positive, got " +
                                   std::to_string(v));
    labels.push_back(static_cast<int>(v));
  }
  return labels;
}

inline void write_csv_labels(const std::string& path,
                             const std::vector<int>& labels) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write " + path);
  for (const int v : labels) out << v << '\n';
  if (!out) fail(ErrorKind::IoError, "write failed for " + path);
}

}  // namespace uvds
