#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <variant>
#include <vector>

#include "shiftbench/types.hpp"

namespace shiftbench {

struct EstimateResult {
  explicit EstimateResult(ProbabilitySimplex d) : distribution(std::move(d)) {}

  ProbabilitySimplex distribution;
  std::size_t iterations = 0;         // EM only
  std::optional<double> tau_used;     // LEIP only
  std::map<std::string, double> diagnostics;
  std::vector<double> objective_trace;  // EM, when requested
};

// ---------------------------------------------------------------- CC

/// Classify-and-count: frequency of each row's argmax (ties to the lowest index).
EstimateResult estimate_cc(const PosteriorMatrix& test);

// ---------------------------------------------------------------- EM

struct EmInitSourcePrior {};
struct EmInitSoftMeanValidation {};
struct EmInitExplicit {
  ProbabilitySimplex prior;
};
using EmInit = std::variant<EmInitSourcePrior, EmInitSoftMeanValidation, EmInitExplicit>;

struct EmConfig {
  EmInit init = EmInitSourcePrior{};
  double tol = 1e-8;  // L1 distance between successive priors
  std::size_t max_iter = 10'000;
  bool record_objective = false;
};

/// Default EM configuration: soft-mean initialization when validation
/// posteriors will be supplied, otherwise the source prior.
EmConfig default_em_config(bool have_validation);

/// Mean log-likelihood ratio of the test batch under `prior` relative to
/// `source`; EM never decreases it.
double em_objective(const PosteriorMatrix& test, const ProbabilitySimplex& source,
                    const ProbabilitySimplex& prior);

/// Expectation-maximization re-estimation of the test class prior.
/// `validation` is required when cfg.init is EmInitSoftMeanValidation.
EstimateResult estimate_em(const PosteriorMatrix& test, const ProbabilitySimplex& source,
                           const EmConfig& cfg = {},
                           const PosteriorMatrix* validation = nullptr);

// ---------------------------------------------------------------- confusion-matrix methods

enum class PredictionMode { Soft, Hard };

/// Soft: column means of the posteriors. Hard: frequencies of row argmaxes.
ProbabilitySimplex mean_prediction(const PosteriorMatrix& test, PredictionMode mode);

/// Largest condition number accepted before a confusion solve is refused.
inline constexpr double kMaxConditionNumber = 1e12;

struct WeightEstimate {
  ShiftWeights weights;             // clipped to >= 0 and rescaled against the source
  std::vector<double> unclipped;    // raw linear-system solution
  double condition_number = 0.0;    // of the joint confusion matrix
  bool clipped = false;
  double lambda = 0.0;
};

/// Solves C_joint w = u_hat with C_joint(i,j) = C(i,j) * source[j].
WeightEstimate estimate_bbsl(const ConfusionMatrix& confusion, const ProbabilitySimplex& u_hat,
                             const ProbabilitySimplex& source);

struct RllsConfig {
  double alpha = 0.01;
  double delta = 0.05;
  std::optional<double> lambda_override;
  /// When set (and no override is given) lambda follows the RLLS confidence
  /// radius for this many validation samples instead of defaulting to alpha.
  std::optional<std::size_t> validation_size;
};

/// alpha * 3 * (2 log(2m/delta) / (3n) + sqrt(2 log(2m/delta) / n)).
double rlls_lambda(double alpha, double delta, std::size_t classes, std::size_t n);
double resolve_rlls_lambda(const RllsConfig& cfg, std::size_t classes);

/// Ridge-regularized moment matching toward the no-shift solution w = 1.
WeightEstimate estimate_rlls(const ConfusionMatrix& confusion, const ProbabilitySimplex& u_hat,
                             const ProbabilitySimplex& source, const RllsConfig& cfg = {});

/// Target distribution implied by weights against `source`: w_i * source_i, renormalized.
ProbabilitySimplex distribution_from_weights(const ShiftWeights& w,
                                             const ProbabilitySimplex& source);

// ---------------------------------------------------------------- LEIP

inline constexpr double kDefaultRecallFloor = 0.3;

/// Threshold from the minimum per-class recall: with r = min(diag(C)) (or the
/// mean recall when r < recall_floor), returns the r-quantile from the top of
/// `top_probs` by nearest rank, i.e. element ceil(r*N)-1 of the descending sort.
double select_tau(const ConfusionMatrix& confusion, std::span<const double> top_probs,
                  double recall_floor = kDefaultRecallFloor);

struct TauAuto {};
struct TauExplicit {
  double value;
};
using TauChoice = std::variant<TauAuto, TauExplicit>;

struct LeipConfig {
  TauChoice tau = TauAuto{};
  /// When set, running class distributions are floored at this value and
  /// renormalized before each prior update.
  std::optional<double> floor_epsilon;
  double recall_floor = kDefaultRecallFloor;
};

/// Label shift estimation with incremental prior update. Confident rows
/// (max prob >= tau) seed a label distribution; the remaining rows are
/// re-targeted one by one in descending confidence, each adding its updated
/// argmax to the running distribution; a final pass re-targets every row with
/// the resulting distribution and counts argmaxes.
///
/// `confusion` (conditional) is required when tau is TauAuto. Throws
/// EmptyConfidentSet when no row reaches tau.
EstimateResult estimate_leip(const PosteriorMatrix& test, const ProbabilitySimplex& source,
                             const LeipConfig& cfg = {},
                             const ConfusionMatrix* confusion = nullptr);

}  // namespace shiftbench
