#include "shiftbench/evaluation.hpp"

#include <algorithm>
#include <string>

#include "shiftbench/errors.hpp"
#include "shiftbench/estimators.hpp"
#include "shiftbench/prior_update.hpp"

namespace shiftbench {

std::string_view to_string(WeightConvention c) noexcept {
  return c == WeightConvention::SoftMean ? "soft_mean" : "hard_count";
}

WeightConvention parse_weight_convention(std::string_view name) {
  if (name == "soft_mean" || name == "soft") return WeightConvention::SoftMean;
  if (name == "hard_count" || name == "hard") return WeightConvention::HardCount;
  throw Error(ErrorCode::InvalidArgument, "unknown weight convention '" + std::string(name) + "'");
}

ProbabilitySimplex source_prior(const LabeledBatch& validation, WeightConvention convention) {
  if (validation.size() == 0) throw Error(ErrorCode::EmptyBatch, "empty validation batch");
  if (convention == WeightConvention::SoftMean) {
    return mean_prediction(validation.posteriors(), PredictionMode::Soft);
  }
  const auto counts = validation.label_counts();
  return ProbabilitySimplex::normalize(std::vector<double>(counts.begin(), counts.end()));
}

ProbabilitySimplex guard_source_prior(const ProbabilitySimplex& prior,
                                      std::size_t validation_size) {
  if (validation_size == 0) throw Error(ErrorCode::EmptyBatch, "empty validation batch");
  const double floor = 1.0 / (2.0 * static_cast<double>(validation_size));
  if (std::all_of(prior.begin(), prior.end(), [&](double p) { return p >= floor; })) {
    return prior;
  }
  std::vector<double> v(prior.begin(), prior.end());
  for (auto& p : v) p = std::max(p, floor);
  return ProbabilitySimplex::normalize(std::move(v));
}

ShiftWeights weights_from(const ProbabilitySimplex& distribution,
                          const ProbabilitySimplex& source) {
  if (distribution.size() != source.size()) {
    throw Error(ErrorCode::DimensionMismatch, "distribution and source lengths differ");
  }
  std::vector<double> w(source.size());
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(source[i] > 0.0)) {
      throw Error(ErrorCode::ZeroSourceEntry, "source prior of class " + std::to_string(i));
    }
    w[i] = distribution[i] / source[i];
  }
  return ShiftWeights(std::move(w));
}

double mse_weights(const ShiftWeights& estimated, const ShiftWeights& truth) {
  if (estimated.size() != truth.size() || truth.size() == 0) {
    throw Error(ErrorCode::DimensionMismatch, "weight vectors differ in length");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < truth.size(); ++i) {
    const double d = estimated[i] - truth[i];
    total += d * d;
  }
  return total / static_cast<double>(truth.size());
}

namespace {

struct Scores {
  double accuracy;
  double macro_recall;
};

Scores score(const std::vector<std::size_t>& predicted, const std::vector<std::size_t>& labels,
             std::size_t classes) {
  std::vector<double> support(classes, 0.0), hits(classes, 0.0);
  double correct = 0.0;
  for (std::size_t k = 0; k < labels.size(); ++k) {
    support[labels[k]] += 1.0;
    if (predicted[k] == labels[k]) {
      hits[labels[k]] += 1.0;
      correct += 1.0;
    }
  }
  double recall_sum = 0.0;
  double present = 0.0;
  for (std::size_t i = 0; i < classes; ++i) {
    if (support[i] == 0.0) continue;
    recall_sum += hits[i] / support[i];
    present += 1.0;
  }
  return {correct / static_cast<double>(labels.size()), recall_sum / present};
}

}  // namespace

AdaptationMetrics adaptation_metrics(const LabeledBatch& test, const ShiftWeights& weights,
                                     const ProbabilitySimplex& source) {
  if (test.size() == 0) throw Error(ErrorCode::EmptyBatch, "empty test batch");
  const auto& post = test.posteriors();
  if (weights.size() != post.cols() || source.size() != post.cols()) {
    throw Error(ErrorCode::DimensionMismatch, "weights, source and posterior widths differ");
  }
  // Target w * source makes the update ratio proportional to w.
  std::vector<double> target(source.size());
  for (std::size_t i = 0; i < target.size(); ++i) target[i] = weights[i] * source[i];
  const auto updated =
      batch_prior_update(post, source, ProbabilitySimplex::normalize(std::move(target)));

  std::vector<std::size_t> before(test.size()), after(test.size());
  for (std::size_t k = 0; k < test.size(); ++k) {
    before[k] = post.row_argmax(k);
    after[k] = updated.row_argmax(k);
  }
  const auto b = score(before, test.labels(), post.cols());
  const auto a = score(after, test.labels(), post.cols());
  return {b.accuracy, a.accuracy, b.macro_recall, a.macro_recall};
}

}  // namespace shiftbench
