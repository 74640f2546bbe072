#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace shiftbench {

/// A rectangular numeric CSV with an optional single header row of class names.
struct CsvMatrix {
  std::vector<std::string> class_names;  // empty when the file had no header
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;  // row-major
  std::vector<std::size_t> row_lines;  // 1-based source line of each data row
};

/// Parse errors are ParseError with "<source>:<line>: ..." messages.
CsvMatrix read_matrix_csv(std::istream& in, std::string_view source_name);
CsvMatrix read_matrix_csv(const std::filesystem::path& path);

/// Labels one per line, as class indices or as names from `class_names`.
/// A first line that is neither is taken as a header.
std::vector<std::size_t> read_labels_csv(std::istream& in, std::string_view source_name,
                                         std::span<const std::string> class_names = {});
std::vector<std::size_t> read_labels_csv(const std::filesystem::path& path,
                                         std::span<const std::string> class_names = {});

/// Shortest decimal text that parses back to the identical double.
std::string format_double(double v);

void write_matrix_csv(std::ostream& out, std::size_t rows, std::size_t cols,
                      std::span<const double> values,
                      std::span<const std::string> class_names = {});
void write_labels_csv(std::ostream& out, std::span<const std::size_t> labels);

}  // namespace shiftbench
