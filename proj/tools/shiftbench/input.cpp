#include "shiftbench/input.hpp"

#include "shiftbench/csv.hpp"
#include "shiftbench/errors.hpp"

namespace shiftbench::cli {

MatrixInput read_matrix(const std::filesystem::path& path) {
  auto csv = read_matrix_csv(path);
  return MatrixInput{std::move(csv.class_names), csv.rows, csv.cols, std::move(csv.values),
                     std::move(csv.row_lines), path.string()};
}

namespace {

template <class Build>
auto with_line_numbers(const MatrixInput& in, Build&& build) {
  try {
    return build();
  } catch (const Error& e) {
    if (e.row() && *e.row() < in.row_lines.size()) {
      throw Error(e.code(), in.path + ":" + std::to_string(in.row_lines[*e.row()]) + ": " +
                                e.detail());
    }
    throw Error(e.code(), in.path + ": " + e.detail());
  }
}

}  // namespace

PosteriorMatrix to_posteriors(const MatrixInput& in) {
  return with_line_numbers(in, [&] { return PosteriorMatrix(in.rows, in.cols, in.values); });
}

LogitMatrix to_logits(const MatrixInput& in) {
  return with_line_numbers(in, [&] { return LogitMatrix(in.rows, in.cols, in.values); });
}

std::vector<std::size_t> read_labels(const std::filesystem::path& path,
                                     const std::vector<std::string>& class_names) {
  return read_labels_csv(path, class_names);
}

ProbabilitySimplex read_prior(const std::filesystem::path& path) {
  const auto csv = read_matrix_csv(path);
  if (csv.rows != 1) {
    throw Error(ErrorCode::ParseError, path.string() + ": a prior file holds exactly one row");
  }
  try {
    return validate_simplex(csv.values);
  } catch (const Error& e) {
    throw Error(e.code(), path.string() + ":" + std::to_string(csv.row_lines[0]) + ": " + e.detail());
  }
}

}  // namespace shiftbench::cli
