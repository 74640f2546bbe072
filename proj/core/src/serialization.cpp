#include "shiftbench/serialization.hpp"

#include <cmath>
#include <sstream>

#include "shiftbench/csv.hpp"
#include "shiftbench/errors.hpp"
#include "shiftbench/rng.hpp"

namespace shiftbench {

namespace {

[[noreturn]] void bad(const std::string& pointer, const std::string& what) {
  throw Error(ErrorCode::ParseError, (pointer.empty() ? "/" : pointer) + ": " + what);
}

double get_number(const Json& j, const std::string& pointer) {
  if (!j.is_number()) bad(pointer, "expected a number");
  return j.get<double>();
}

std::size_t get_count(const Json& j, const std::string& pointer) {
  if (!j.is_number_integer() || j.get<std::int64_t>() < 0) {
    bad(pointer, "expected a nonnegative integer");
  }
  return j.get<std::size_t>();
}

std::vector<double> get_numbers(const Json& j, const std::string& pointer) {
  if (!j.is_array()) bad(pointer, "expected an array of numbers");
  std::vector<double> out;
  for (std::size_t i = 0; i < j.size(); ++i) {
    out.push_back(get_number(j[i], pointer + "/" + std::to_string(i)));
  }
  return out;
}

std::string get_string(const Json& j, const std::string& pointer) {
  if (!j.is_string()) bad(pointer, "expected a string");
  return j.get<std::string>();
}

template <class F>
auto at_field(const std::string& pointer, F&& parse) {
  try {
    return parse();
  } catch (const Error& e) {
    if (e.code() == ErrorCode::ParseError) throw;
    bad(pointer, e.detail());
  }
}

std::optional<double> optional_number(const Json& obj, const char* key, const std::string& ptr) {
  if (!obj.contains(key) || obj[key].is_null()) return std::nullopt;
  return get_number(obj[key], ptr + "/" + key);
}

void check_keys(const Json& obj, const std::string& pointer, const std::set<std::string>& known) {
  if (!obj.is_object()) bad(pointer, "expected an object");
  for (const auto& [key, value] : obj.items()) {
    if (!known.contains(key)) bad(pointer + "/" + key, "unknown field");
  }
}

Json optional_json(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

}  // namespace

Json to_json(const ProbabilitySimplex& p) { return Json(p.to_vector()); }

ProbabilitySimplex simplex_from_json(const Json& j, const std::string& pointer) {
  const auto values = get_numbers(j, pointer);
  return at_field(pointer, [&] { return validate_simplex(values); });
}

Json to_json(const Calibrator& c) {
  Json j;
  j["kind"] = std::string(to_string(c.kind()));
  switch (c.kind()) {
    case CalibratorKind::Identity: break;
    case CalibratorKind::Temperature: j["temperature"] = c.temperature(); break;
    case CalibratorKind::BiasCorrectedTemperature:
      j["temperature"] = c.temperature();
      j["bias"] = c.bias();
      break;
    case CalibratorKind::Vector:
      j["scale"] = c.scale();
      j["bias"] = c.bias();
      break;
    case CalibratorKind::NoBiasVector: j["scale"] = c.scale(); break;
  }
  return j;
}

Calibrator calibrator_from_json(const Json& j) {
  check_keys(j, "", {"kind", "temperature", "scale", "bias"});
  if (!j.contains("kind")) bad("/kind", "missing");
  const auto kind =
      at_field("/kind", [&] { return parse_calibrator_kind(get_string(j["kind"], "/kind")); });
  auto need = [&](const char* key) -> const Json& {
    if (!j.contains(key)) bad(std::string("/") + key, "missing for kind " + std::string(to_string(kind)));
    return j[key];
  };
  return at_field("", [&] {
    switch (kind) {
      case CalibratorKind::Identity: return Calibrator::identity();
      case CalibratorKind::Temperature:
        return Calibrator::temperature(get_number(need("temperature"), "/temperature"));
      case CalibratorKind::BiasCorrectedTemperature:
        return Calibrator::bias_corrected_temperature(
            get_number(need("temperature"), "/temperature"), get_numbers(need("bias"), "/bias"));
      case CalibratorKind::Vector:
        return Calibrator::vector(get_numbers(need("scale"), "/scale"),
                                  get_numbers(need("bias"), "/bias"));
      case CalibratorKind::NoBiasVector:
        return Calibrator::no_bias_vector(get_numbers(need("scale"), "/scale"));
    }
    return Calibrator::identity();
  });
}

Json to_json(const CalibrationReport& r) {
  return Json{{"nll_before", r.nll_before},   {"nll_after", r.nll_after},
              {"ece_before", r.ece_before},   {"ece_after", r.ece_after},
              {"iterations", r.iterations},   {"converged", r.converged},
              {"gradient_norm", r.gradient_norm}};
}

Json to_json(const EstimateResult& r) {
  Json j{{"distribution", to_json(r.distribution)},
         {"iterations", r.iterations},
         {"tau_used", r.tau_used ? Json(*r.tau_used) : Json(nullptr)},
         {"diagnostics", Json(r.diagnostics)}};
  return j;
}

Json to_json(const DirichletShiftScenario& s) {
  return Json{{"alpha", s.alpha},
              {"seed", s.seed},
              {"target_prior", to_json(s.target_prior)},
              {"n_total", s.n_total}};
}

Json to_json(const GaussianOracle& o) {
  return Json{{"means", o.means()}, {"variance", o.variance()}, {"prior", to_json(o.prior())}};
}

GaussianOracle oracle_from_json(const Json& j, const std::string& pointer) {
  check_keys(j, pointer, {"means", "variance", "prior"});
  for (const char* key : {"means", "variance", "prior"}) {
    if (!j.contains(key)) bad(pointer + "/" + key, "missing");
  }
  const auto& means_json = j["means"];
  if (!means_json.is_array()) bad(pointer + "/means", "expected an array of arrays");
  std::vector<std::vector<double>> means;
  for (std::size_t i = 0; i < means_json.size(); ++i) {
    means.push_back(get_numbers(means_json[i], pointer + "/means/" + std::to_string(i)));
  }
  const double variance = get_number(j["variance"], pointer + "/variance");
  auto prior = simplex_from_json(j["prior"], pointer + "/prior");
  return at_field(pointer, [&] { return GaussianOracle(std::move(means), variance, prior); });
}

Json to_json(const BenchmarkConfig& cfg) {
  Json estimators = Json::array();
  for (auto e : cfg.estimators) estimators.push_back(std::string(to_string(e)));
  Json calibrations = Json::array();
  for (auto c : cfg.calibrations) calibrations.push_back(std::string(to_string(c)));
  return Json{
      {"alphas", cfg.alphas},
      {"runs_per_alpha", cfg.runs_per_alpha},
      {"estimators", estimators},
      {"calibrations", calibrations},
      {"base_seed", cfg.base_seed},
      {"validation_size", cfg.validation_size},
      {"convention", std::string(to_string(cfg.convention))},
      {"em", {{"tol", cfg.em_tol}, {"max_iter", cfg.em_max_iter}}},
      {"leip", {{"tau", optional_json(cfg.leip_tau)}, {"floor", optional_json(cfg.leip_floor)}}},
      {"rlls",
       {{"alpha", cfg.rlls.alpha},
        {"delta", cfg.rlls.delta},
        {"lambda", optional_json(cfg.rlls.lambda_override)},
        {"validation_size",
         cfg.rlls.validation_size ? Json(*cfg.rlls.validation_size) : Json(nullptr)}}},
  };
}

BenchmarkConfig benchmark_config_from_json(const Json& j, const std::set<std::string>& extra_keys) {
  std::set<std::string> known{"alphas", "runs_per_alpha", "estimators", "calibrations",
                              "base_seed", "validation_size", "convention", "em", "leip", "rlls"};
  known.insert(extra_keys.begin(), extra_keys.end());
  check_keys(j, "", known);

  BenchmarkConfig cfg;
  if (j.contains("alphas")) {
    cfg.alphas = get_numbers(j["alphas"], "/alphas");
    if (cfg.alphas.empty()) bad("/alphas", "must be nonempty");
    for (std::size_t i = 0; i < cfg.alphas.size(); ++i) {
      if (!(cfg.alphas[i] > 0.0)) bad("/alphas/" + std::to_string(i), "alpha must be positive");
    }
  }
  if (j.contains("runs_per_alpha")) {
    cfg.runs_per_alpha = get_count(j["runs_per_alpha"], "/runs_per_alpha");
    if (cfg.runs_per_alpha == 0) bad("/runs_per_alpha", "must be >= 1");
  }
  if (j.contains("estimators")) {
    const auto& arr = j["estimators"];
    if (!arr.is_array() || arr.empty()) bad("/estimators", "expected a nonempty array");
    cfg.estimators.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ptr = "/estimators/" + std::to_string(i);
      cfg.estimators.push_back(
          at_field(ptr, [&] { return parse_estimator_kind(get_string(arr[i], ptr)); }));
    }
  }
  if (j.contains("calibrations")) {
    const auto& arr = j["calibrations"];
    if (!arr.is_array() || arr.empty()) bad("/calibrations", "expected a nonempty array");
    cfg.calibrations.clear();
    for (std::size_t i = 0; i < arr.size(); ++i) {
      const std::string ptr = "/calibrations/" + std::to_string(i);
      cfg.calibrations.push_back(
          at_field(ptr, [&] { return parse_calibrator_kind(get_string(arr[i], ptr)); }));
    }
  }
  if (j.contains("base_seed")) {
    if (!j["base_seed"].is_number_unsigned()) bad("/base_seed", "expected a nonnegative integer");
    cfg.base_seed = j["base_seed"].get<std::uint64_t>();
  }
  if (j.contains("validation_size")) {
    cfg.validation_size = get_count(j["validation_size"], "/validation_size");
    if (cfg.validation_size == 0) bad("/validation_size", "must be >= 1");
  }
  if (j.contains("convention")) {
    cfg.convention = at_field("/convention", [&] {
      return parse_weight_convention(get_string(j["convention"], "/convention"));
    });
  }
  if (j.contains("em")) {
    const auto& em = j["em"];
    check_keys(em, "/em", {"tol", "max_iter"});
    if (em.contains("tol")) {
      cfg.em_tol = get_number(em["tol"], "/em/tol");
      if (!(cfg.em_tol > 0.0)) bad("/em/tol", "must be positive");
    }
    if (em.contains("max_iter")) {
      cfg.em_max_iter = get_count(em["max_iter"], "/em/max_iter");
      if (cfg.em_max_iter == 0) bad("/em/max_iter", "must be >= 1");
    }
  }
  if (j.contains("leip")) {
    const auto& leip = j["leip"];
    check_keys(leip, "/leip", {"tau", "floor"});
    cfg.leip_tau = optional_number(leip, "tau", "/leip");
    if (cfg.leip_tau && !(*cfg.leip_tau > 0.0 && *cfg.leip_tau <= 1.0)) {
      bad("/leip/tau", "must lie in (0,1]");
    }
    cfg.leip_floor = optional_number(leip, "floor", "/leip");
    if (cfg.leip_floor && !(*cfg.leip_floor > 0.0)) bad("/leip/floor", "must be positive");
  }
  if (j.contains("rlls")) {
    const auto& rlls = j["rlls"];
    check_keys(rlls, "/rlls", {"alpha", "delta", "lambda", "validation_size"});
    if (rlls.contains("alpha")) cfg.rlls.alpha = get_number(rlls["alpha"], "/rlls/alpha");
    if (!(cfg.rlls.alpha >= 0.0)) bad("/rlls/alpha", "must be >= 0");
    if (rlls.contains("delta")) cfg.rlls.delta = get_number(rlls["delta"], "/rlls/delta");
    if (!(cfg.rlls.delta > 0.0 && cfg.rlls.delta < 1.0)) bad("/rlls/delta", "must lie in (0,1)");
    cfg.rlls.lambda_override = optional_number(rlls, "lambda", "/rlls");
    if (cfg.rlls.lambda_override && !(*cfg.rlls.lambda_override >= 0.0)) {
      bad("/rlls/lambda", "must be >= 0");
    }
    if (rlls.contains("validation_size") && !rlls["validation_size"].is_null()) {
      cfg.rlls.validation_size = get_count(rlls["validation_size"], "/rlls/validation_size");
    }
  }
  return cfg;
}

std::uint64_t fnv1a64(std::string_view bytes, std::uint64_t h) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const BenchmarkConfig& cfg) { return fnv1a64(to_json(cfg).dump()); }

Json to_json(const BenchmarkReport& report) {
  Json cells = Json::array();
  for (const auto& c : report.cells) {
    cells.push_back(Json{{"alpha", c.alpha},
                         {"estimator", std::string(to_string(c.estimator))},
                         {"calibration", std::string(to_string(c.calibration))},
                         {"mean_mse", c.mean_mse},
                         {"std_mse", c.std_mse},
                         {"mean_mse_x1e3", c.mean_mse * kMseReportScale},
                         {"std_mse_x1e3", c.std_mse * kMseReportScale},
                         {"run_mses", c.run_mses},
                         {"failures", c.failures}});
  }
  Json runs = Json::array();
  for (const auto& r : report.runs) {
    Json row{{"alpha", r.alpha},
             {"alpha_index", r.alpha_index},
             {"run", r.run},
             {"seed", r.seed},
             {"estimator", std::string(to_string(r.estimator))},
             {"calibration", std::string(to_string(r.calibration))},
             {"mse", r.mse},
             {"n_test", r.n_test},
             {"tau_used", optional_json(r.tau_used)},
             {"distribution", r.distribution}};
    if (r.error) row["error"] = *r.error;
    runs.push_back(std::move(row));
  }
  std::ostringstream hash;
  hash << std::hex << report.config_hash;
  return Json{{"config", to_json(report.config)},
              {"config_hash", hash.str()},
              {"mse_scale_note", "mean_mse_x1e3 is mean_mse multiplied by 1e3"},
              {"rng", std::string(CounterRng::kName) + " v" + std::to_string(CounterRng::kVersion)},
              {"cells", cells},
              {"runs", runs}};
}

std::string report_csv(const BenchmarkReport& report) {
  std::ostringstream out;
  out << "alpha,run,estimator,calibration,mse,n_test,tau_used\n";
  for (const auto& r : report.runs) {
    out << format_double(r.alpha) << ',' << r.run << ',' << to_string(r.estimator) << ','
        << to_string(r.calibration) << ',' << (r.error ? "" : format_double(r.mse)) << ','
        << r.n_test << ',' << (r.tau_used ? format_double(*r.tau_used) : "") << '\n';
  }
  return out.str();
}

}  // namespace shiftbench
