#include "shiftbench/csv.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include "shiftbench/errors.hpp"

namespace shiftbench {

namespace {

std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(trim(line.substr(start, comma - start)));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

bool parse_double(std::string_view cell, double& out) {
  if (!cell.empty() && cell.front() == '+') cell.remove_prefix(1);
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && !cell.empty();
}

bool parse_index(std::string_view cell, std::size_t& out) {
  const auto* end = cell.data() + cell.size();
  const auto [ptr, ec] = std::from_chars(cell.data(), end, out);
  return ec == std::errc() && ptr == end && !cell.empty();
}

[[noreturn]] void fail(std::string_view source, std::size_t line, const std::string& what) {
  throw Error(ErrorCode::ParseError,
              std::string(source) + ":" + std::to_string(line) + ": " + what);
}

std::ifstream open(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  return in;
}

}  // namespace

CsvMatrix read_matrix_csv(std::istream& in, std::string_view source_name) {
  CsvMatrix m;
  std::string raw;
  std::size_t line_no = 0;
  bool first = true;
  std::vector<double> row;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto line = trim(raw);
    if (line.empty()) continue;
    const auto cells = split(line);
    row.assign(cells.size(), 0.0);
    bool numeric = true;
    for (std::size_t i = 0; i < cells.size(); ++i) numeric = numeric && parse_double(cells[i], row[i]);
    if (first && !numeric) {
      for (auto c : cells) m.class_names.emplace_back(c);
      m.cols = cells.size();
      first = false;
      continue;
    }
    first = false;
    if (m.cols == 0) m.cols = cells.size();
    if (cells.size() != m.cols) {
      fail(source_name, line_no, "expected " + std::to_string(m.cols) + " columns, found " +
                                     std::to_string(cells.size()));
    }
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (!parse_double(cells[i], row[i])) {
        fail(source_name, line_no, "column " + std::to_string(i + 1) + ": '" +
                                       std::string(cells[i]) + "' is not a number");
      }
      if (!std::isfinite(row[i])) {
        fail(source_name, line_no, "column " + std::to_string(i + 1) + " is not finite");
      }
    }
    m.values.insert(m.values.end(), row.begin(), row.end());
    m.row_lines.push_back(line_no);
    ++m.rows;
  }
  if (m.rows == 0) fail(source_name, line_no, "no data rows");
  return m;
}

CsvMatrix read_matrix_csv(const std::filesystem::path& path) {
  auto in = open(path);
  return read_matrix_csv(in, path.string());
}

std::vector<std::size_t> read_labels_csv(std::istream& in, std::string_view source_name,
                                         std::span<const std::string> class_names) {
  std::vector<std::size_t> labels;
  std::string raw;
  std::size_t line_no = 0;
  bool first = true;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto cell = trim(raw);
    if (cell.empty()) continue;
    std::size_t idx = 0;
    if (parse_index(cell, idx)) {
      labels.push_back(idx);
    } else if (auto it = std::find(class_names.begin(), class_names.end(), cell);
               it != class_names.end()) {
      labels.push_back(static_cast<std::size_t>(it - class_names.begin()));
    } else if (first) {
      // header row
    } else {
      fail(source_name, line_no, "'" + std::string(cell) + "' is not a class index or name");
    }
    first = false;
  }
  if (labels.empty()) fail(source_name, line_no, "no labels");
  return labels;
}

std::vector<std::size_t> read_labels_csv(const std::filesystem::path& path,
                                         std::span<const std::string> class_names) {
  auto in = open(path);
  return read_labels_csv(in, path.string(), class_names);
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_matrix_csv(std::ostream& out, std::size_t rows, std::size_t cols,
                      std::span<const double> values, std::span<const std::string> class_names) {
  if (!class_names.empty()) {
    for (std::size_t i = 0; i < class_names.size(); ++i) {
      out << (i ? "," : "") << class_names[i];
    }
    out << '\n';
  }
  for (std::size_t k = 0; k < rows; ++k) {
    for (std::size_t i = 0; i < cols; ++i) {
      out << (i ? "," : "") << format_double(values[k * cols + i]);
    }
    out << '\n';
  }
}

void write_labels_csv(std::ostream& out, std::span<const std::size_t> labels) {
  out << "label\n";
  for (std::size_t y : labels) out << y << '\n';
}

}  // namespace shiftbench
