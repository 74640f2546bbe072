#include <vector>

#include <gtest/gtest.h>

#include "shiftbench/errors.hpp"
#include "shiftbench/evaluation.hpp"

namespace shiftbench {
namespace {

using Rows = std::vector<std::vector<double>>;

TEST(SourcePrior, ConventionsOnHandInstance) {
  const LabeledBatch b(PosteriorMatrix::from_rows(Rows{{0.6, 0.4}, {0.8, 0.2}}), {0, 1});
  const auto soft = source_prior(b, WeightConvention::SoftMean);
  EXPECT_NEAR(soft[0], 0.7, 1e-15);
  EXPECT_NEAR(soft[1], 0.3, 1e-15);
  EXPECT_EQ(source_prior(b, WeightConvention::HardCount).to_vector(),
            (std::vector<double>{0.5, 0.5}));
}

TEST(SourcePrior, OneHotCorrectPosteriorsAgree) {
  const LabeledBatch b(PosteriorMatrix::from_rows(Rows{{1, 0, 0}, {0, 1, 0}, {0, 1, 0}}), {0, 1, 1});
  EXPECT_EQ(source_prior(b, WeightConvention::SoftMean),
            source_prior(b, WeightConvention::HardCount));
}

TEST(SourcePrior, AbsentClassIsZeroUntilGuarded) {
  const LabeledBatch b(PosteriorMatrix::from_rows(Rows{{0.6, 0.4}, {0.8, 0.2}}), {0, 0});
  const auto hard = source_prior(b, WeightConvention::HardCount);
  EXPECT_EQ(hard[1], 0.0);
  const auto guarded = guard_source_prior(hard, 2);
  // Floor 1/(2*2) = 0.25, then renormalized: [1, 0.25] / 1.25.
  EXPECT_NEAR(guarded[0], 0.8, 1e-15);
  EXPECT_NEAR(guarded[1], 0.2, 1e-15);
  // Entries already above the floor are untouched.
  EXPECT_EQ(guard_source_prior(validate_simplex({0.5, 0.5}), 2), validate_simplex({0.5, 0.5}));
}

TEST(SourcePrior, ConventionNames) {
  EXPECT_EQ(to_string(WeightConvention::SoftMean), "soft_mean");
  EXPECT_EQ(parse_weight_convention("hard"), WeightConvention::HardCount);
  EXPECT_THROW(parse_weight_convention("median"), Error);
}

TEST(WeightsFrom, Examples) {
  const auto half = validate_simplex({0.5, 0.5});
  EXPECT_EQ(weights_from(half, half).to_vector(), (std::vector<double>{1.0, 1.0}));
  const auto w = weights_from(validate_simplex({0.8, 0.2}), half);
  EXPECT_NEAR(w[0], 1.6, 1e-15);
  EXPECT_NEAR(w[1], 0.4, 1e-15);
  EXPECT_EQ(weights_from(validate_simplex({0.0, 1.0}), half).to_vector(),
            (std::vector<double>{0.0, 2.0}));
  try {
    weights_from(half, validate_simplex({1.0, 0.0}));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ZeroSourceEntry);
  }
}

TEST(MseWeights, Examples) {
  const ShiftWeights a({1.6, 0.4});
  EXPECT_EQ(mse_weights(a, a), 0.0);
  EXPECT_NEAR(mse_weights(a, ShiftWeights({1.5, 0.5})), 0.01, 1e-15);
  EXPECT_NEAR(mse_weights(a, ShiftWeights({1.5, 0.5})) * kMseReportScale, 10.0, 1e-12);
  EXPECT_THROW(mse_weights(a, ShiftWeights({1.0, 1.0, 1.0})), Error);
}

TEST(AdaptationMetrics, UnitWeightsChangeNothing) {
  const LabeledBatch b(PosteriorMatrix::from_rows(Rows{{0.6, 0.4}, {0.3, 0.7}, {0.55, 0.45}}),
                       {0, 0, 1});
  const auto m = adaptation_metrics(b, ShiftWeights({1.0, 1.0}), validate_simplex({0.4, 0.6}));
  EXPECT_EQ(m.accuracy_before, m.accuracy_after);
  EXPECT_EQ(m.macro_recall_before, m.macro_recall_after);
}

TEST(AdaptationMetrics, FourSampleHandInstance) {
  // Reweighted rows (2 p0, 0.5 p1): (1.2,0.2) (0.6,0.35) (0.3,0.425) (0.9,0.275)
  const LabeledBatch b(
      PosteriorMatrix::from_rows(Rows{{0.6, 0.4}, {0.3, 0.7}, {0.15, 0.85}, {0.45, 0.55}}),
      {1, 0, 1, 0});
  const auto m = adaptation_metrics(b, ShiftWeights({2.0, 0.5}), validate_simplex({0.5, 0.5}));
  EXPECT_DOUBLE_EQ(m.accuracy_before, 0.25);
  EXPECT_DOUBLE_EQ(m.accuracy_after, 0.75);
  EXPECT_DOUBLE_EQ(m.macro_recall_before, 0.25);
  EXPECT_DOUBLE_EQ(m.macro_recall_after, 0.75);
}

TEST(AdaptationMetrics, OneHotCorrectStaysPerfect) {
  const LabeledBatch b(PosteriorMatrix::from_rows(Rows{{1, 0, 0}, {0, 0, 1}}), {0, 2});
  const auto m =
      adaptation_metrics(b, ShiftWeights({0.1, 5.0, 0.3}), ProbabilitySimplex::uniform(3));
  EXPECT_EQ(m.accuracy_before, 1.0);
  EXPECT_EQ(m.accuracy_after, 1.0);
  // Class 1 has no support and is left out of the macro average.
  EXPECT_EQ(m.macro_recall_after, 1.0);
}

}  // namespace
}  // namespace shiftbench
