#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "shiftbench/types.hpp"

namespace shiftbench::cli {

struct MatrixInput {
  std::vector<std::string> class_names;
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::vector<double> values;
  std::vector<std::size_t> row_lines;
  std::string path;
};

MatrixInput read_matrix(const std::filesystem::path& path);

/// Validates as posteriors; failures name the file and line.
PosteriorMatrix to_posteriors(const MatrixInput& in);
LogitMatrix to_logits(const MatrixInput& in);

std::vector<std::size_t> read_labels(const std::filesystem::path& path,
                                     const std::vector<std::string>& class_names);

/// A single-row CSV (optionally headed) holding a class prior.
ProbabilitySimplex read_prior(const std::filesystem::path& path);

}  // namespace shiftbench::cli
