#pragma once

#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "cdrodeo/dataset.hpp"
#include "cdrodeo/errors.hpp"

namespace cdrodeo {

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

inline std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

/// Serialize a double with enough digits to round-trip exactly.
inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace detail

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<double> values;  // rows x columns, row-major; NaN marks empty cells
  int rows = 0;
};

/// Reads a headered numeric CSV. Lines starting with '#' are skipped, so
/// artifacts that carry a config-echo comment line reload cleanly. Malformed
/// or non-finite cells are collected (up to ten) and reported together.
inline CsvTable load_csv_table(const std::string& path, bool allow_empty_cells = false) {
  std::ifstream in(path);
  if (!in) throw input_error("cannot open CSV file: " + path);

  CsvTable table;
  std::string line;
  bool have_header = false;
  long line_no = 0;
  std::vector<std::string> problems;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (line[0] == '#') continue;
    if (!have_header) {
      for (const std::string& name : detail::split_csv_line(line))
        table.columns.push_back(detail::trim(name));
      if (table.columns.empty()) throw input_error(path + ": empty header row");
      have_header = true;
      continue;
    }
    const std::vector<std::string> cells = detail::split_csv_line(line);
    if (cells.size() != table.columns.size()) {
      problems.push_back("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(table.columns.size()) + " cells, got " +
                         std::to_string(cells.size()));
      if (problems.size() >= 10) break;
      continue;
    }
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const std::string cell = detail::trim(cells[c]);
      double v = std::nan("");
      if (cell.empty()) {
        if (!allow_empty_cells) {
          problems.push_back("line " + std::to_string(line_no) + ", column '" +
                             table.columns[c] + "': empty cell");
          if (problems.size() >= 10) break;
        }
      } else {
        char* end = nullptr;
        v = std::strtod(cell.c_str(), &end);
        if (end != cell.c_str() + cell.size() || !std::isfinite(v)) {
          problems.push_back("line " + std::to_string(line_no) + ", column '" +
                             table.columns[c] + "': non-finite value '" + cell + "'");
          v = std::nan("");
          if (problems.size() >= 10) break;
        }
      }
      table.values.push_back(v);
    }
    if (problems.size() >= 10) break;
    ++table.rows;
  }
  if (!have_header) throw input_error(path + ": no header row");
  if (!problems.empty() && !allow_empty_cells) {
    std::string msg = path + ": rejected, offending cells:";
    for (const std::string& p : problems) msg += "\n  " + p;
    throw input_error(msg);
  }
  return table;
}

/// Loads a dataset: header row plus at least d1+1 numeric columns, rows
/// parsed as (X_1..X_d1, Y_1..Y_d2).
inline Dataset load_csv(const std::string& path, int d1) {
  if (d1 < 0) throw input_error("d1 must be nonnegative");
  CsvTable table = load_csv_table(path);
  const int width = static_cast<int>(table.columns.size());
  if (d1 >= width)
    throw input_error(path + ": d1=" + std::to_string(d1) +
                      " leaves no response column (file has " + std::to_string(width) +
                      " columns)");
  if (table.rows < 1) throw input_error(path + ": no data rows");
  return make_dataset(std::move(table.values), table.rows, d1, width - d1);
}

inline void write_dataset_csv(const std::string& path, const Dataset& data,
                              const std::string& config_comment = "") {
  std::ofstream out(path);
  if (!out) throw input_error("cannot write CSV file: " + path);
  if (!config_comment.empty()) out << "# " << config_comment << "\n";
  for (int j = 0; j < data.d1; ++j) out << "x" << (j + 1) << (j + 1 < data.d ? "," : "");
  for (int j = 0; j < data.d2; ++j)
    out << (data.d2 > 1 ? "y" + std::to_string(j + 1) : std::string("y"))
        << (data.d1 + j + 1 < data.d ? "," : "");
  out << "\n";
  for (int i = 0; i < data.n; ++i) {
    for (int k = 0; k < data.d; ++k)
      out << detail::format_double(data.at(i, k)) << (k + 1 < data.d ? "," : "");
    out << "\n";
  }
  if (!out) throw input_error("write failed: " + path);
}

}  // namespace cdrodeo
