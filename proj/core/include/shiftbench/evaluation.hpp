#pragma once

#include <cstddef>
#include <string_view>

#include "shiftbench/types.hpp"

namespace shiftbench {

/// How the source prior used as the weight denominator is computed from a
/// validation batch.
enum class WeightConvention {
  SoftMean,   // column means of the validation posteriors
  HardCount,  // empirical validation label frequencies
};

std::string_view to_string(WeightConvention c) noexcept;
WeightConvention parse_weight_convention(std::string_view name);

/// Source prior from a validation batch. HardCount leaves absent classes at
/// zero; pass the result through guard_source_prior before dividing by it.
ProbabilitySimplex source_prior(const LabeledBatch& validation, WeightConvention convention);

/// Floors every entry at 1 / (2 * validation_size) and renormalizes, so the
/// prior can serve as a weight denominator.
ProbabilitySimplex guard_source_prior(const ProbabilitySimplex& prior,
                                      std::size_t validation_size);

/// w_i = distribution_i / source_i. Throws ZeroSourceEntry.
ShiftWeights weights_from(const ProbabilitySimplex& distribution,
                          const ProbabilitySimplex& source);

/// Mean squared error (1/m) sum (estimated_i - truth_i)^2.
double mse_weights(const ShiftWeights& estimated, const ShiftWeights& truth);

/// Reports show weight MSE multiplied by this factor.
inline constexpr double kMseReportScale = 1e3;

struct AdaptationMetrics {
  double accuracy_before = 0.0;
  double accuracy_after = 0.0;
  double macro_recall_before = 0.0;
  double macro_recall_after = 0.0;
};

/// Accuracy and macro recall of the raw argmaxes versus argmaxes after each
/// row is reweighted by `weights` (the prior update with ratio w). Classes
/// with no test support are left out of the macro average.
AdaptationMetrics adaptation_metrics(const LabeledBatch& test, const ShiftWeights& weights,
                                     const ProbabilitySimplex& source);

}  // namespace shiftbench
