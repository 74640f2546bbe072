#pragma once

#include <cstdint>
#include <set>
#include <string>

#include <nlohmann/json.hpp>

#include "shiftbench/benchmark_runner.hpp"
#include "shiftbench/calibration.hpp"
#include "shiftbench/estimators.hpp"
#include "shiftbench/simulation.hpp"

namespace shiftbench {

using Json = nlohmann::json;

Json to_json(const ProbabilitySimplex& p);
ProbabilitySimplex simplex_from_json(const Json& j, const std::string& pointer = "");

/// {kind, temperature?, scale?, bias?}
Json to_json(const Calibrator& c);
Calibrator calibrator_from_json(const Json& j);

Json to_json(const CalibrationReport& r);
Json to_json(const EstimateResult& r);

/// {alpha, seed, target_prior, n_total}
Json to_json(const DirichletShiftScenario& s);

/// {means, variance, prior}
Json to_json(const GaussianOracle& o);
GaussianOracle oracle_from_json(const Json& j, const std::string& pointer = "");

Json to_json(const BenchmarkConfig& cfg);
/// Errors are ParseError messages prefixed with the JSON pointer of the bad
/// field. Keys outside the known set and `extra_keys` are rejected.
BenchmarkConfig benchmark_config_from_json(const Json& j,
                                           const std::set<std::string>& extra_keys = {});

/// 64-bit FNV-1a over the canonical JSON dump of the config.
std::uint64_t config_hash(const BenchmarkConfig& cfg);
std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h = 0xcbf29ce484222325ULL);

Json to_json(const BenchmarkReport& report);
/// Columns: alpha, run, estimator, calibration, mse, n_test, tau_used.
std::string report_csv(const BenchmarkReport& report);

}  // namespace shiftbench
