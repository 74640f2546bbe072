#include "shiftbench/errors.hpp"

namespace shiftbench {

std::string_view to_string(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::NegativeEntry: return "NegativeEntry";
    case ErrorCode::SumOutOfTolerance: return "SumOutOfTolerance";
    case ErrorCode::DimensionTooSmall: return "DimensionTooSmall";
    case ErrorCode::NonFiniteValue: return "NonFiniteValue";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::ZeroSourceEntry: return "ZeroSourceEntry";
    case ErrorCode::DegenerateSupport: return "DegenerateSupport";
    case ErrorCode::EmptyBatch: return "EmptyBatch";
    case ErrorCode::EmptyInput: return "EmptyInput";
    case ErrorCode::LabelOutOfRange: return "LabelOutOfRange";
    case ErrorCode::MissingLogits: return "MissingLogits";
    case ErrorCode::MissingPosteriors: return "MissingPosteriors";
    case ErrorCode::SingleClassBatch: return "SingleClassBatch";
    case ErrorCode::NonFiniteLogits: return "NonFiniteLogits";
    case ErrorCode::MissingValidation: return "MissingValidation";
    case ErrorCode::SingularConfusion: return "SingularConfusion";
    case ErrorCode::EmptyConfidentSet: return "EmptyConfidentSet";
    case ErrorCode::InvalidAlpha: return "InvalidAlpha";
    case ErrorCode::InvalidTemperature: return "InvalidTemperature";
    case ErrorCode::MissingRequiredClass: return "MissingRequiredClass";
    case ErrorCode::ClassWithNoValidationSamples: return "ClassWithNoValidationSamples";
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::ParseError: return "ParseError";
  }
  return "Unknown";
}

namespace {
std::string decorate(ErrorCode code, const std::string& message,
                     std::optional<std::size_t> row) {
  std::string out(to_string(code));
  if (row) out += " (row " + std::to_string(*row) + ")";
  if (!message.empty()) out += ": " + message;
  return out;
}
}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> row)
    : std::runtime_error(decorate(code, message, row)), code_(code), detail_(message), row_(row) {}

}  // namespace shiftbench
