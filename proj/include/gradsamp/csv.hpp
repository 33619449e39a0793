#pragma once

#include <Eigen/Dense>

#include <charconv>
#include <cstdio>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include "gradsamp/errors.hpp"
#include "gradsamp/linalg.hpp"

namespace gradsamp {

namespace detail {

// 17 significant digits: the shortest format guaranteed to round-trip a
// binary64 value through decimal text.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::vector<std::string_view> split_csv_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    if (comma == std::string_view::npos) {
      cells.push_back(line.substr(start));
      break;
    }
    cells.push_back(line.substr(start, comma - start));
    start = comma + 1;
  }
  return cells;
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) {
    s.remove_prefix(1);
  }
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

inline double parse_cell(std::string_view cell, std::size_t line,
                         std::size_t column) {
  const std::string_view t = trim(cell);
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
  if (ec != std::errc{} || ptr != t.data() + t.size() || t.empty()) {
    throw ParseError("load_csv: non-numeric cell '" + std::string(cell) + "'",
                     line, column);
  }
  return value;
}

}  // namespace detail

// Reads a rectangular numeric CSV into a Dataset, extracting column y_index
// (0-based) as the response and keeping the remaining columns as the design,
// row order preserved.
inline Dataset load_csv(const std::string& path, Eigen::Index y_index,
                        bool header) {
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open '" + path + "'");

  std::string line;
  std::size_t line_no = 0;
  std::size_t ncols = 0;
  std::vector<double> xdata;
  std::vector<double> ydata;

  if (header) {
    if (!std::getline(in, line)) throw ParseError("load_csv: empty file", 1, 1);
    ++line_no;
    ncols = detail::split_csv_line(line).size();
    if (y_index < 0 || y_index >= static_cast<Eigen::Index>(ncols)) {
      throw DimensionMismatch("load_csv: y column " + std::to_string(y_index) +
                              " out of range for " + std::to_string(ncols) +
                              " columns");
    }
  }

  while (std::getline(in, line)) {
    ++line_no;
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split_csv_line(line);
    if (ncols == 0) {
      ncols = cells.size();
      if (y_index < 0 || y_index >= static_cast<Eigen::Index>(ncols)) {
        throw DimensionMismatch("load_csv: y column " + std::to_string(y_index) +
                                " out of range for " + std::to_string(ncols) +
                                " columns");
      }
    }
    if (cells.size() != ncols) {
      throw DimensionMismatch("load_csv: row at line " + std::to_string(line_no) +
                              " has " + std::to_string(cells.size()) +
                              " cells, expected " + std::to_string(ncols));
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const double v = detail::parse_cell(cells[c], line_no, c + 1);
      if (static_cast<Eigen::Index>(c) == y_index) {
        ydata.push_back(v);
      } else {
        xdata.push_back(v);
      }
    }
  }

  if (ydata.empty()) throw ParseError("load_csv: no data rows", line_no + 1, 1);
  if (ncols < 2) {
    throw DimensionMismatch("load_csv: need at least one predictor column");
  }

  const Eigen::Index n = static_cast<Eigen::Index>(ydata.size());
  const Eigen::Index d = static_cast<Eigen::Index>(ncols) - 1;
  return Dataset(DenseMatrix(n, d, xdata),
                 Eigen::Map<Eigen::VectorXd>(ydata.data(), n));
}

// Same, addressing the response column by header name.
inline Dataset load_csv(const std::string& path, const std::string& y_column,
                        bool header) {
  if (!header) {
    throw std::invalid_argument("load_csv: column name lookup requires a header row");
  }
  std::ifstream in(path);
  if (!in) throw IoError("load_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line)) throw ParseError("load_csv: empty file", 1, 1);
  const auto names = detail::split_csv_line(line);
  Eigen::Index y_index = -1;
  for (std::size_t c = 0; c < names.size(); ++c) {
    if (detail::trim(names[c]) == y_column) {
      y_index = static_cast<Eigen::Index>(c);
      break;
    }
  }
  if (y_index < 0) {
    throw DimensionMismatch("load_csv: no column named '" + y_column + "'");
  }
  return load_csv(path, y_index, header);
}

// Writes x1..xd,y with full round-trip precision.
inline void write_dataset_csv(const Dataset& data, const std::string& path,
                              bool header = true) {
  std::ofstream out(path);
  if (!out) throw IoError("write_dataset_csv: cannot open '" + path + "'");
  const Eigen::Index n = data.n();
  const Eigen::Index d = data.d();
  if (header) {
    for (Eigen::Index j = 0; j < d; ++j) out << 'x' << (j + 1) << ',';
    out << "y\n";
  }
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < d; ++j) {
      out << detail::format_double(data.x(i, j)) << ',';
    }
    out << detail::format_double(data.y(i)) << '\n';
  }
  if (!out) throw IoError("write_dataset_csv: write failed for '" + path + "'");
}

}  // namespace gradsamp
