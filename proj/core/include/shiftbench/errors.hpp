#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace shiftbench {

enum class ErrorCode {
  NegativeEntry,
  SumOutOfTolerance,
  DimensionTooSmall,
  NonFiniteValue,
  DimensionMismatch,
  ZeroSourceEntry,
  DegenerateSupport,
  EmptyBatch,
  EmptyInput,
  LabelOutOfRange,
  MissingLogits,
  MissingPosteriors,
  SingleClassBatch,
  NonFiniteLogits,
  MissingValidation,
  SingularConfusion,
  EmptyConfidentSet,
  InvalidAlpha,
  InvalidTemperature,
  MissingRequiredClass,
  ClassWithNoValidationSamples,
  InvalidArgument,
  ParseError,
};

std::string_view to_string(ErrorCode code) noexcept;

// Every failure raised by the library. `row()` is set when the failure can be
// pinned to one sample of a matrix.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> row = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> row() const noexcept { return row_; }
  /// The message without the code and row prefix.
  const std::string& detail() const noexcept { return detail_; }

 private:
  ErrorCode code_;
  std::string detail_;
  std::optional<std::size_t> row_;
};

}  // namespace shiftbench
