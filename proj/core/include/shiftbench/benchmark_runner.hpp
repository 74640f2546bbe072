#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "shiftbench/calibration.hpp"
#include "shiftbench/estimators.hpp"
#include "shiftbench/evaluation.hpp"
#include "shiftbench/simulation.hpp"

namespace shiftbench {

enum class EstimatorKind { CC, EM, LEIP, BBSL, RLLS, RLLSHard };

/// cc, em, leip, bbsl, rlls, rlls-hard
std::string_view to_string(EstimatorKind kind) noexcept;
EstimatorKind parse_estimator_kind(std::string_view name);

struct BenchmarkConfig {
  std::vector<double> alphas{0.1, 1.0, 10.0};
  std::size_t runs_per_alpha = 50;
  std::vector<EstimatorKind> estimators{EstimatorKind::CC, EstimatorKind::EM,
                                        EstimatorKind::LEIP, EstimatorKind::RLLS};
  std::vector<CalibratorKind> calibrations{CalibratorKind::Identity};
  std::uint64_t base_seed = 0;
  std::size_t validation_size = 2500;
  WeightConvention convention = WeightConvention::SoftMean;
  double em_tol = 1e-8;
  std::size_t em_max_iter = 10'000;
  std::optional<double> leip_tau;  // unset: chosen from the validation confusion
  std::optional<double> leip_floor;
  RllsConfig rlls;
};

/// Throws InvalidArgument naming the offending field.
void validate(const BenchmarkConfig& cfg);

struct OracleSource {
  GaussianOracle oracle;
  std::size_t pool_size = 0;
};

struct IngestedSource {
  LabeledBatch pool;
};

using DataSource = std::variant<OracleSource, IngestedSource>;

/// Everything one estimator needs from the fixed validation split.
struct ValidationContext {
  PosteriorMatrix posteriors;
  std::vector<std::size_t> labels;
  ProbabilitySimplex soft_source;   // soft-mean prior, used inside EM/LEIP
  ProbabilitySimplex hard_source;   // guarded label frequencies
  ProbabilitySimplex weight_source; // denominator under the configured convention
  ConfusionMatrix hard_confusion;
  ConfusionMatrix soft_confusion;
};

ValidationContext make_validation_context(const LabeledBatch& calibrated_validation,
                                          WeightConvention convention);

/// Estimated target distribution for one estimator on one test batch.
EstimateResult run_estimator(EstimatorKind kind, const PosteriorMatrix& test,
                             const ValidationContext& validation, const BenchmarkConfig& cfg);

struct BenchmarkRun {
  std::size_t alpha_index = 0;
  double alpha = 0.0;
  std::size_t run = 0;
  std::uint64_t seed = 0;
  EstimatorKind estimator{};
  CalibratorKind calibration{};
  double mse = 0.0;  // NaN when `error` is set
  std::size_t n_test = 0;
  std::optional<double> tau_used;
  std::vector<double> distribution;
  std::optional<std::string> error;
};

struct BenchmarkCell {
  double alpha = 0.0;
  EstimatorKind estimator{};
  CalibratorKind calibration{};
  double mean_mse = 0.0;
  double std_mse = 0.0;  // sample standard deviation, 0 for a single run
  std::vector<double> run_mses;
  std::size_t failures = 0;
};

struct BenchmarkReport {
  BenchmarkConfig config;
  std::uint64_t config_hash = 0;
  std::vector<BenchmarkRun> runs;   // ordered by (calibration, alpha, run, estimator)
  std::vector<BenchmarkCell> cells; // ordered by (calibration, alpha, estimator)
};

/// One (calibration, alpha, run) scenario evaluated for every configured
/// estimator. Exposed so a single cell can be replayed by hand.
struct PreparedData {
  ValidationContext validation;
  PosteriorMatrix test_pool;
  std::vector<std::size_t> test_labels;
};

/// Splits the pool by a base_seed-determined permutation and applies the
/// calibrator fitted on the validation split.
std::vector<PreparedData> prepare_benchmark_data(const BenchmarkConfig& cfg,
                                                 const DataSource& source);

std::vector<BenchmarkRun> run_scenario(const BenchmarkConfig& cfg, const PreparedData& data,
                                       CalibratorKind calibration, std::size_t alpha_index,
                                       std::size_t run);

/// Full sweep. Results are identical for any `jobs` >= 1.
BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const DataSource& source,
                              std::size_t jobs = 1);

/// Per-scenario seed: hash of (base_seed, alpha_index, run_index).
std::uint64_t scenario_seed(std::uint64_t base_seed, std::size_t alpha_index, std::size_t run);

}  // namespace shiftbench
