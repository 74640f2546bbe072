#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "shiftbench/estimators.hpp"
#include "shiftbench/types.hpp"

namespace shiftbench {

/// m spherical Gaussians with shared variance and a class prior. Posteriors
/// it emits are the exact Bayes posteriors under `prior()`.
class GaussianOracle {
 public:
  GaussianOracle(std::vector<std::vector<double>> means, double variance,
                 ProbabilitySimplex prior);

  /// Means at (separation / sqrt 2) * e_i in R^m, so every pair of class
  /// means is `separation` apart.
  static GaussianOracle simplex(std::size_t classes, double separation, double variance,
                                ProbabilitySimplex prior);

  std::size_t classes() const noexcept { return means_.size(); }
  std::size_t dimension() const noexcept { return means_.front().size(); }
  double variance() const noexcept { return variance_; }
  const ProbabilitySimplex& prior() const noexcept { return prior_; }
  const std::vector<std::vector<double>>& means() const noexcept { return means_; }

  /// Normalized log posteriors at `x`.
  void log_posterior(std::span<const double> x, std::span<double> out) const;
  ProbabilitySimplex posterior(std::span<const double> x) const;

 private:
  std::vector<std::vector<double>> means_;
  double variance_;
  ProbabilitySimplex prior_;
};

/// Draws y ~ `prior`, x ~ N(mu_y, variance I) and records the oracle's exact
/// posteriors (under the oracle's own prior) with their logs as logits.
LabeledBatch oracle_generate(const GaussianOracle& oracle, const ProbabilitySimplex& prior,
                             std::size_t n, std::uint64_t seed);

/// Divides logits by `temperature` and recomputes posteriors. Labels are untouched.
LabeledBatch distort(const LabeledBatch& batch, double temperature);

/// One draw from the symmetric Dirichlet Dir(alpha * 1_m) via normalized Gamma draws.
ProbabilitySimplex sample_dirichlet_prior(double alpha, std::size_t classes, std::uint64_t seed);

struct SubsamplePlan {
  std::size_t n_total = 0;
  std::vector<std::size_t> per_class;
};

/// Largest without-replacement sample size matching `target` given the
/// available per-class counts, split by largest remainder.
SubsamplePlan plan_subsample(std::span<const std::size_t> counts,
                             const ProbabilitySimplex& target);

/// Indices (ascending) of a without-replacement sample whose label mix follows `target`.
std::vector<std::size_t> subsample_without_replacement(std::span<const std::size_t> labels,
                                                       const ProbabilitySimplex& target,
                                                       std::uint64_t seed);

struct DirichletShiftScenario {
  double alpha = 1.0;
  std::uint64_t seed = 0;
  ProbabilitySimplex target_prior;
  std::size_t n_total = 0;
  std::vector<std::size_t> selected_indices;
};

/// Target prior from Dir(alpha) with `seed`, then the maximal subsample of `labels`.
DirichletShiftScenario make_dirichlet_scenario(std::span<const std::size_t> labels,
                                               std::size_t classes, double alpha,
                                               std::uint64_t seed);

/// Conditional confusion p(predicted | true) from a labeled validation batch.
ConfusionMatrix estimate_confusion(const LabeledBatch& validation, PredictionMode mode);

}  // namespace shiftbench
