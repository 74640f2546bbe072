#include "shiftbench/benchmark_runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <thread>

#include "shiftbench/errors.hpp"
#include "shiftbench/rng.hpp"
#include "shiftbench/serialization.hpp"

namespace shiftbench {

std::string_view to_string(EstimatorKind kind) noexcept {
  switch (kind) {
    case EstimatorKind::CC: return "cc";
    case EstimatorKind::EM: return "em";
    case EstimatorKind::LEIP: return "leip";
    case EstimatorKind::BBSL: return "bbsl";
    case EstimatorKind::RLLS: return "rlls";
    case EstimatorKind::RLLSHard: return "rlls-hard";
  }
  return "cc";
}

EstimatorKind parse_estimator_kind(std::string_view name) {
  if (name == "cc") return EstimatorKind::CC;
  if (name == "em") return EstimatorKind::EM;
  if (name == "leip") return EstimatorKind::LEIP;
  if (name == "bbsl") return EstimatorKind::BBSL;
  if (name == "rlls") return EstimatorKind::RLLS;
  if (name == "rlls-hard" || name == "rlls_hard") return EstimatorKind::RLLSHard;
  throw Error(ErrorCode::InvalidArgument, "unknown estimator '" + std::string(name) + "'");
}

void validate(const BenchmarkConfig& cfg) {
  if (cfg.alphas.empty()) throw Error(ErrorCode::InvalidArgument, "alphas: must be nonempty");
  for (double a : cfg.alphas) {
    if (!(a > 0.0) || !std::isfinite(a)) {
      throw Error(ErrorCode::InvalidAlpha, "alphas: every alpha must be positive");
    }
  }
  if (cfg.runs_per_alpha == 0) {
    throw Error(ErrorCode::InvalidArgument, "runs_per_alpha: must be >= 1");
  }
  if (cfg.estimators.empty()) {
    throw Error(ErrorCode::InvalidArgument, "estimators: must be nonempty");
  }
  if (cfg.calibrations.empty()) {
    throw Error(ErrorCode::InvalidArgument, "calibrations: must be nonempty");
  }
  if (cfg.validation_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "validation_size: must be >= 1");
  }
}

std::uint64_t scenario_seed(std::uint64_t base_seed, std::size_t alpha_index, std::size_t run) {
  return derive_seed(base_seed, alpha_index, run);
}

ValidationContext make_validation_context(const LabeledBatch& calibrated_validation,
                                          WeightConvention convention) {
  const std::size_t n = calibrated_validation.size();
  auto soft = guard_source_prior(source_prior(calibrated_validation, WeightConvention::SoftMean), n);
  auto hard =
      guard_source_prior(source_prior(calibrated_validation, WeightConvention::HardCount), n);
  auto weight_source = convention == WeightConvention::SoftMean ? soft : hard;
  return ValidationContext{calibrated_validation.posteriors(),
                           calibrated_validation.labels(),
                           std::move(soft),
                           std::move(hard),
                           std::move(weight_source),
                           estimate_confusion(calibrated_validation, PredictionMode::Hard),
                           estimate_confusion(calibrated_validation, PredictionMode::Soft)};
}

EstimateResult run_estimator(EstimatorKind kind, const PosteriorMatrix& test,
                             const ValidationContext& validation, const BenchmarkConfig& cfg) {
  switch (kind) {
    case EstimatorKind::CC: return estimate_cc(test);
    case EstimatorKind::EM: {
      EmConfig em;
      em.init = EmInitSoftMeanValidation{};
      em.tol = cfg.em_tol;
      em.max_iter = cfg.em_max_iter;
      return estimate_em(test, validation.soft_source, em, &validation.posteriors);
    }
    case EstimatorKind::LEIP: {
      LeipConfig leip;
      if (cfg.leip_tau) leip.tau = TauExplicit{*cfg.leip_tau};
      leip.floor_epsilon = cfg.leip_floor;
      return estimate_leip(test, validation.soft_source, leip, &validation.hard_confusion);
    }
    case EstimatorKind::BBSL:
    case EstimatorKind::RLLS:
    case EstimatorKind::RLLSHard: {
      const bool soft = kind == EstimatorKind::RLLS;
      const auto& confusion = soft ? validation.soft_confusion : validation.hard_confusion;
      const auto u_hat = mean_prediction(test, soft ? PredictionMode::Soft : PredictionMode::Hard);
      const auto w = kind == EstimatorKind::BBSL
                         ? estimate_bbsl(confusion, u_hat, validation.hard_source)
                         : estimate_rlls(confusion, u_hat, validation.hard_source, cfg.rlls);
      EstimateResult r{distribution_from_weights(w.weights, validation.hard_source)};
      r.diagnostics["condition_number"] = w.condition_number;
      r.diagnostics["clipped"] = w.clipped ? 1.0 : 0.0;
      r.diagnostics["lambda"] = w.lambda;
      return r;
    }
  }
  throw Error(ErrorCode::InvalidArgument, "unknown estimator");
}

namespace {

LabeledBatch materialize_pool(const BenchmarkConfig& cfg, const DataSource& source) {
  if (const auto* o = std::get_if<OracleSource>(&source)) {
    return oracle_generate(o->oracle, o->oracle.prior(), o->pool_size,
                           derive_seed(cfg.base_seed, 0x504F4F4CULL));
  }
  return std::get<IngestedSource>(source).pool;
}

PosteriorMatrix posteriors_under(const Calibrator& c, const LabeledBatch& batch) {
  if (c.kind() == CalibratorKind::Identity && batch.has_posteriors()) return batch.posteriors();
  return c.apply(batch.logits());
}

}  // namespace

std::vector<PreparedData> prepare_benchmark_data(const BenchmarkConfig& cfg,
                                                 const DataSource& source) {
  validate(cfg);
  const LabeledBatch pool = materialize_pool(cfg, source);
  if (cfg.validation_size >= pool.size()) {
    throw Error(ErrorCode::InvalidArgument,
                "validation_size: must be smaller than the labeled pool (" +
                    std::to_string(pool.size()) + ")");
  }
  std::vector<std::size_t> perm(pool.size());
  std::iota(perm.begin(), perm.end(), 0);
  CounterRng rng(derive_seed(cfg.base_seed, 0x53504C4954ULL));
  for (std::size_t i = perm.size() - 1; i > 0; --i) {
    std::swap(perm[i], perm[rng.below(i + 1)]);
  }
  std::vector<std::size_t> val_idx(perm.begin(), perm.begin() + cfg.validation_size);
  std::vector<std::size_t> test_idx(perm.begin() + cfg.validation_size, perm.end());
  std::sort(val_idx.begin(), val_idx.end());
  std::sort(test_idx.begin(), test_idx.end());
  const LabeledBatch validation = pool.select(val_idx);
  const LabeledBatch test = pool.select(test_idx);

  std::vector<PreparedData> out;
  for (CalibratorKind kind : cfg.calibrations) {
    const Calibrator c = kind == CalibratorKind::Identity
                             ? Calibrator::identity()
                             : fit_calibrator(kind, validation).calibrator;
    LabeledBatch calibrated(posteriors_under(c, validation), validation.labels());
    out.push_back(PreparedData{make_validation_context(calibrated, cfg.convention),
                               posteriors_under(c, test), test.labels()});
  }
  return out;
}

std::vector<BenchmarkRun> run_scenario(const BenchmarkConfig& cfg, const PreparedData& data,
                                       CalibratorKind calibration, std::size_t alpha_index,
                                       std::size_t run) {
  const double alpha = cfg.alphas.at(alpha_index);
  const std::uint64_t seed = scenario_seed(cfg.base_seed, alpha_index, run);
  const std::size_t m = data.test_pool.cols();

  std::vector<BenchmarkRun> rows;
  auto base_row = [&](EstimatorKind e) {
    BenchmarkRun r;
    r.alpha_index = alpha_index;
    r.alpha = alpha;
    r.run = run;
    r.seed = seed;
    r.estimator = e;
    r.calibration = calibration;
    return r;
  };

  std::optional<PosteriorMatrix> test;
  std::optional<ShiftWeights> truth;
  std::string scenario_error;
  try {
    const auto scenario = make_dirichlet_scenario(data.test_labels, m, alpha, seed);
    test = data.test_pool.select(scenario.selected_indices);
    std::vector<double> realized(m, 0.0);
    for (std::size_t k : scenario.selected_indices) realized[data.test_labels[k]] += 1.0;
    truth = weights_from(ProbabilitySimplex::normalize(std::move(realized)),
                         data.validation.hard_source);
  } catch (const std::exception& e) {
    scenario_error = e.what();
  }

  for (EstimatorKind e : cfg.estimators) {
    BenchmarkRun r = base_row(e);
    if (!test) {
      r.mse = std::numeric_limits<double>::quiet_NaN();
      r.error = scenario_error;
      rows.push_back(std::move(r));
      continue;
    }
    r.n_test = test->rows();
    try {
      const auto est = run_estimator(e, *test, data.validation, cfg);
      r.tau_used = est.tau_used;
      r.distribution = est.distribution.to_vector();
      r.mse = mse_weights(weights_from(est.distribution, data.validation.weight_source), *truth);
    } catch (const std::exception& ex) {
      r.mse = std::numeric_limits<double>::quiet_NaN();
      r.error = ex.what();
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

BenchmarkReport run_benchmark(const BenchmarkConfig& cfg, const DataSource& source,
                              std::size_t jobs) {
  const auto prepared = prepare_benchmark_data(cfg, source);
  const std::size_t n_alpha = cfg.alphas.size();
  const std::size_t n_runs = cfg.runs_per_alpha;
  const std::size_t n_tasks = prepared.size() * n_alpha * n_runs;

  std::vector<std::vector<BenchmarkRun>> results(n_tasks);
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t t = next++; t < n_tasks; t = next++) {
      const std::size_t c = t / (n_alpha * n_runs);
      const std::size_t a = (t / n_runs) % n_alpha;
      const std::size_t r = t % n_runs;
      results[t] = run_scenario(cfg, prepared[c], cfg.calibrations[c], a, r);
    }
  };
  jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n_tasks, 1));
  if (jobs == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t j = 0; j < jobs; ++j) pool.emplace_back(worker);
  }

  BenchmarkReport report;
  report.config = cfg;
  report.config_hash = config_hash(cfg);
  for (auto& task : results) {
    for (auto& row : task) report.runs.push_back(std::move(row));
  }

  const std::size_t n_est = cfg.estimators.size();
  for (std::size_t c = 0; c < prepared.size(); ++c) {
    for (std::size_t a = 0; a < n_alpha; ++a) {
      for (std::size_t e = 0; e < n_est; ++e) {
        BenchmarkCell cell;
        cell.alpha = cfg.alphas[a];
        cell.estimator = cfg.estimators[e];
        cell.calibration = cfg.calibrations[c];
        for (std::size_t r = 0; r < n_runs; ++r) {
          const auto& row = results[(c * n_alpha + a) * n_runs + r][e];
          if (row.error) {
            ++cell.failures;
          } else {
            cell.run_mses.push_back(row.mse);
          }
        }
        const double k = static_cast<double>(cell.run_mses.size());
        if (k > 0) {
          cell.mean_mse = std::accumulate(cell.run_mses.begin(), cell.run_mses.end(), 0.0) / k;
          double ss = 0.0;
          for (double v : cell.run_mses) ss += (v - cell.mean_mse) * (v - cell.mean_mse);
          cell.std_mse = k > 1 ? std::sqrt(ss / (k - 1.0)) : 0.0;
        } else {
          cell.mean_mse = std::numeric_limits<double>::quiet_NaN();
        }
        report.cells.push_back(std::move(cell));
      }
    }
  }
  return report;
}

}  // namespace shiftbench
