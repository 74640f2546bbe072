#include "shiftbench/commands.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "shiftbench/benchmark_runner.hpp"
#include "shiftbench/calibration.hpp"
#include "shiftbench/csv.hpp"
#include "shiftbench/errors.hpp"
#include "shiftbench/estimators.hpp"
#include "shiftbench/evaluation.hpp"
#include "shiftbench/input.hpp"
#include "shiftbench/manifest.hpp"
#include "shiftbench/rng.hpp"
#include "shiftbench/serialization.hpp"
#include "shiftbench/simulation.hpp"

namespace fs = std::filesystem;

namespace shiftbench::cli {

namespace {

constexpr const char* kSeedEnv = "SHIFTBENCH_SEED";
constexpr double kDefaultSeparation = 2.0;
constexpr double kDefaultVariance = 1.0;

bool is_computation_error(ErrorCode c) {
  switch (c) {
    case ErrorCode::DegenerateSupport:
    case ErrorCode::SingularConfusion:
    case ErrorCode::EmptyConfidentSet:
      return true;
    default:
      return false;
  }
}

/// Resolved base seed and where it came from: an explicit flag wins over the
/// environment, which wins over the config file or built-in default.
struct SeedChoice {
  std::uint64_t value = 0;
  std::string source = "default";
};

std::uint64_t parse_seed(const std::string& text, const std::string& what) {
  try {
    std::size_t pos = 0;
    const auto v = std::stoull(text, &pos, 0);
    if (pos != text.size()) throw std::invalid_argument(text);
    return v;
  } catch (const std::exception&) {
    throw Error(ErrorCode::InvalidArgument, what + ": '" + text + "' is not an unsigned integer");
  }
}

SeedChoice resolve_seed(const std::optional<std::uint64_t>& flag,
                        std::optional<std::uint64_t> fallback) {
  if (flag) return {*flag, "flag"};
  if (const char* env = std::getenv(kSeedEnv); env && *env) {
    return {parse_seed(env, kSeedEnv), "env"};
  }
  if (fallback) return {*fallback, "config"};
  return {};
}

Json seeds_json(const SeedChoice& s) { return {{"base_seed", s.value}, {"source", s.source}}; }

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(ErrorCode::InvalidArgument, dir.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::InvalidArgument, path.string() + ": cannot write file");
  return out;
}

void write_text(const fs::path& path, const std::string& text) { open_out(path) << text; }

void write_batch(const fs::path& dir, const std::string& prefix, const LabeledBatch& b) {
  const auto& p = b.posteriors();
  const auto& z = b.logits();
  {
    auto out = open_out(dir / (prefix + "_posteriors.csv"));
    write_matrix_csv(out, p.rows(), p.cols(), p.data());
  }
  {
    auto out = open_out(dir / (prefix + "_logits.csv"));
    write_matrix_csv(out, z.rows(), z.cols(), z.data());
  }
  auto out = open_out(dir / (prefix + "_labels.csv"));
  write_labels_csv(out, b.labels());
}

Json read_json_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::ParseError, path.string() + ": cannot open file");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw Error(ErrorCode::ParseError, path.string() + ": " + e.what());
  }
}

std::vector<double> to_vector(const ShiftWeights& w) { return {w.values().begin(), w.values().end()}; }

// ---------------------------------------------------------------- estimate

struct EstimateArgs {
  std::string test;
  std::string estimator = "cc";
  std::optional<std::string> source_prior;
  std::optional<std::string> validation;
  std::optional<std::string> validation_labels;
  std::optional<std::string> calibrator;
  std::optional<double> tau;
  std::optional<double> leip_floor;
  double recall_floor = kDefaultRecallFloor;
  double em_tol = 1e-8;
  std::size_t em_max_iter = 10'000;
  std::string em_init = "auto";
  std::optional<double> rlls_lambda;
  double rlls_alpha = 0.01;
  double rlls_delta = 0.05;
  std::optional<std::string> manifest;
};

PosteriorMatrix load_scores(const std::string& path, const std::optional<Calibrator>& c,
                            RunManifest& m) {
  m.inputs.emplace_back(path);
  const auto in = read_matrix(path);
  if (!c) return to_posteriors(in);
  const auto logits = to_logits(in);
  if (c->classes() != 0 && c->classes() != logits.cols()) {
    throw Error(ErrorCode::DimensionMismatch,
                path + ": calibrator expects " + std::to_string(c->classes()) + " columns");
  }
  return c->apply(logits);
}

int cmd_estimate(const EstimateArgs& a, RunManifest& manifest) {
  const EstimatorKind kind = parse_estimator_kind(a.estimator);
  manifest.config = {{"estimator", a.estimator},       {"em_tol", a.em_tol},
                     {"em_max_iter", a.em_max_iter},   {"em_init", a.em_init},
                     {"recall_floor", a.recall_floor}, {"rlls_alpha", a.rlls_alpha},
                     {"rlls_delta", a.rlls_delta}};
  if (a.tau) manifest.config["tau"] = *a.tau;
  if (a.leip_floor) manifest.config["leip_floor"] = *a.leip_floor;
  if (a.rlls_lambda) manifest.config["rlls_lambda"] = *a.rlls_lambda;
  std::optional<Calibrator> calibrator;
  if (a.calibrator) {
    manifest.inputs.emplace_back(*a.calibrator);
    try {
      calibrator = calibrator_from_json(read_json_file(*a.calibrator));
    } catch (const Json::exception& e) {
      throw Error(ErrorCode::ParseError, *a.calibrator + ": " + e.what());
    }
  }
  const PosteriorMatrix test = load_scores(a.test, calibrator, manifest);
  const std::size_t m = test.cols();

  std::optional<ProbabilitySimplex> given_source;
  if (a.source_prior) {
    manifest.inputs.emplace_back(*a.source_prior);
    given_source = read_prior(*a.source_prior);
  }
  std::optional<PosteriorMatrix> val_post;
  std::optional<LabeledBatch> val_batch;
  if (a.validation) val_post = load_scores(*a.validation, calibrator, manifest);
  if (a.validation_labels && !val_post) {
    throw Error(ErrorCode::MissingValidation, "--validation-labels requires --validation");
  }
  if (val_post) {
    if (val_post->cols() != m) {
      throw Error(ErrorCode::DimensionMismatch, "validation and test files differ in column count");
    }
    if (a.validation_labels) {
      manifest.inputs.emplace_back(*a.validation_labels);
      auto labels = read_labels(*a.validation_labels, {});
      if (labels.size() != val_post->rows()) {
        throw Error(ErrorCode::DimensionMismatch,
                    *a.validation_labels + ": " + std::to_string(labels.size()) +
                        " labels for " + std::to_string(val_post->rows()) + " validation rows");
      }
      val_batch.emplace(*val_post, std::move(labels));
    }
  }
  if (given_source && given_source->size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "source prior length differs from test columns");
  }
  if (!given_source && !val_post && kind != EstimatorKind::CC) {
    throw Error(ErrorCode::MissingValidation,
                std::string(to_string(kind)) + " needs --source-prior or --validation");
  }

  // EM and LEIP re-target from the soft-mean validation prior unless a
  // source prior is given explicitly.
  auto soft_source = [&] {
    if (given_source) return *given_source;
    return mean_prediction(*val_post, PredictionMode::Soft);
  };
  auto require_labels = [&](const char* why) -> const LabeledBatch& {
    if (!val_batch) {
      throw Error(ErrorCode::MissingValidation,
                  std::string(to_string(kind)) + " needs --validation and --validation-labels (" +
                      why + ")");
    }
    return *val_batch;
  };

  std::optional<EstimateResult> result;
  std::optional<WeightEstimate> weight_estimate;
  switch (kind) {
    case EstimatorKind::CC:
      result = estimate_cc(test);
      break;
    case EstimatorKind::EM: {
      EmConfig cfg;
      cfg.tol = a.em_tol;
      cfg.max_iter = a.em_max_iter;
      if (a.em_init == "source") {
        cfg.init = EmInitSourcePrior{};
      } else if (a.em_init == "soft-mean") {
        if (!val_post) throw Error(ErrorCode::MissingValidation, "--em-init soft-mean needs --validation");
        cfg.init = EmInitSoftMeanValidation{};
      } else if (a.em_init == "auto") {
        cfg.init = val_post ? EmInit{EmInitSoftMeanValidation{}} : EmInit{EmInitSourcePrior{}};
      } else {
        throw Error(ErrorCode::InvalidArgument, "--em-init: expected auto, source or soft-mean");
      }
      result = estimate_em(test, soft_source(), cfg, val_post ? &*val_post : nullptr);
      break;
    }
    case EstimatorKind::LEIP: {
      LeipConfig cfg;
      cfg.floor_epsilon = a.leip_floor;
      cfg.recall_floor = a.recall_floor;
      std::optional<ConfusionMatrix> confusion;
      if (a.tau) {
        cfg.tau = TauExplicit{*a.tau};
      } else {
        confusion = estimate_confusion(require_labels("automatic tau uses the confusion matrix"),
                                       PredictionMode::Hard);
      }
      result = estimate_leip(test, soft_source(), cfg, confusion ? &*confusion : nullptr);
      break;
    }
    case EstimatorKind::BBSL:
    case EstimatorKind::RLLS:
    case EstimatorKind::RLLSHard: {
      const auto& val = require_labels("confusion matrix");
      const bool soft = kind == EstimatorKind::RLLS;
      const auto mode = soft ? PredictionMode::Soft : PredictionMode::Hard;
      const auto confusion = estimate_confusion(val, mode);
      const auto hard_source =
          guard_source_prior(source_prior(val, WeightConvention::HardCount), val.size());
      const auto u_hat = mean_prediction(test, mode);
      if (kind == EstimatorKind::BBSL) {
        weight_estimate = estimate_bbsl(confusion, u_hat, hard_source);
      } else {
        RllsConfig cfg;
        cfg.alpha = a.rlls_alpha;
        cfg.delta = a.rlls_delta;
        cfg.lambda_override = a.rlls_lambda;
        cfg.validation_size = val.size();
        weight_estimate = estimate_rlls(confusion, u_hat, hard_source, cfg);
      }
      result.emplace(distribution_from_weights(weight_estimate->weights, hard_source));
      result->diagnostics["condition_number"] = weight_estimate->condition_number;
      result->diagnostics["clipped"] = weight_estimate->clipped ? 1.0 : 0.0;
      result->diagnostics["lambda"] = weight_estimate->lambda;
      break;
    }
  }

  Json out = to_json(*result);
  out["estimator"] = std::string(to_string(kind));
  Json weights = Json::object();
  if (val_batch) {
    for (auto conv : {WeightConvention::SoftMean, WeightConvention::HardCount}) {
      const auto src = guard_source_prior(source_prior(*val_batch, conv), val_batch->size());
      weights[std::string(to_string(conv))] = to_vector(weights_from(result->distribution, src));
    }
  } else if (given_source) {
    weights["source_prior"] = to_vector(weights_from(result->distribution, *given_source));
  } else if (val_post) {
    const auto src = guard_source_prior(mean_prediction(*val_post, PredictionMode::Soft),
                                        val_post->rows());
    weights[std::string(to_string(WeightConvention::SoftMean))] =
        to_vector(weights_from(result->distribution, src));
  }
  out["weights"] = weights;
  std::cout << out.dump(2) << '\n';
  if (a.manifest) manifest.write(*a.manifest);
  return kExitOk;
}

// ---------------------------------------------------------------- calibrate

struct CalibrateArgs {
  std::string logits;
  std::string labels;
  std::string method = "ts";
  std::size_t bins = 15;
  std::optional<std::string> out;
  std::optional<std::string> manifest;
};

int cmd_calibrate(const CalibrateArgs& a, RunManifest& manifest) {
  const CalibratorKind kind = parse_calibrator_kind(a.method);
  manifest.inputs = {a.logits, a.labels};
  manifest.config = {{"method", a.method}, {"bins", a.bins}};
  const auto logits = to_logits(read_matrix(a.logits));
  auto labels = read_labels(a.labels, {});
  if (labels.size() != logits.rows()) {
    throw Error(ErrorCode::DimensionMismatch, a.labels + ": " + std::to_string(labels.size()) +
                                                  " labels for " + std::to_string(logits.rows()) +
                                                  " logit rows");
  }
  const LabeledBatch batch(logits, std::move(labels));
  FitOptions opts;
  opts.ece_bins = a.bins;
  const auto fit = fit_calibrator(kind, batch, opts);
  const Json out{{"calibrator", to_json(fit.calibrator)}, {"report", to_json(fit.report)}};
  if (!fit.report.converged) {
    std::cerr << "warning: calibration stopped after " << fit.report.iterations
              << " iterations without meeting the gradient tolerance\n";
  }
  if (a.out) {
    ensure_dir(*a.out);
    write_text(fs::path(*a.out) / "calibrator.json", to_json(fit.calibrator).dump(2) + "\n");
    manifest.write(fs::path(*a.out) / "manifest.json");
  }
  if (a.manifest) manifest.write(*a.manifest);
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- simulate

struct SimulateArgs {
  double alpha = 1.0;
  std::size_t classes = 3;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> oracle_spec;
  std::size_t n = 10'000;
  std::size_t validation_size = 2'500;
  double separation = kDefaultSeparation;
  double variance = kDefaultVariance;
  std::string out;
};

int cmd_simulate(const SimulateArgs& a, RunManifest& manifest) {
  const SeedChoice seed = resolve_seed(a.seed, std::nullopt);
  std::optional<GaussianOracle> oracle;
  if (a.oracle_spec) {
    manifest.inputs.emplace_back(*a.oracle_spec);
    oracle = oracle_from_json(read_json_file(*a.oracle_spec));
  } else {
    if (a.classes < 2) throw Error(ErrorCode::DimensionTooSmall, "--classes must be >= 2");
    oracle = GaussianOracle::simplex(a.classes, a.separation, a.variance,
                                     ProbabilitySimplex::uniform(a.classes));
  }
  const std::size_t m = oracle->classes();
  if (a.n == 0 || a.validation_size == 0) {
    throw Error(ErrorCode::InvalidArgument, "--n and --validation-size must be >= 1");
  }

  const auto validation = oracle_generate(*oracle, oracle->prior(), a.validation_size,
                                          derive_seed(seed.value, 0x56414CULL));
  const auto pool =
      oracle_generate(*oracle, oracle->prior(), a.n, derive_seed(seed.value, 0x504F4F4CULL));
  const auto scenario =
      make_dirichlet_scenario(pool.labels(), m, a.alpha, scenario_seed(seed.value, 0, 0));
  const auto test = pool.select(scenario.selected_indices);

  ensure_dir(a.out);
  const fs::path dir(a.out);
  const Json scenario_json = to_json(scenario);
  write_text(dir / "scenario.json", scenario_json.dump(2) + "\n");
  write_text(dir / "oracle.json", to_json(*oracle).dump(2) + "\n");
  write_batch(dir, "validation", validation);
  write_batch(dir, "test", test);

  manifest.config = {{"alpha", a.alpha},
                     {"classes", m},
                     {"n", a.n},
                     {"validation_size", a.validation_size},
                     {"oracle", to_json(*oracle)}};
  manifest.seeds = seeds_json(seed);
  manifest.write(dir / "manifest.json");
  std::cout << scenario_json.dump(2) << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- benchmark

struct BenchmarkArgs {
  std::string config;
  std::string out;
  std::size_t jobs = 1;
  std::optional<std::uint64_t> seed;
};

template <class T>
T data_field(const Json& data, const char* key, const T& fallback) {
  if (!data.contains(key)) return fallback;
  try {
    return data.at(key).get<T>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::ParseError, std::string("/data/") + key + ": wrong type");
  }
}

DataSource data_source_from_json(const Json& data, const fs::path& base_dir,
                                 RunManifest& manifest) {
  if (!data.is_object()) throw Error(ErrorCode::ParseError, "/data: expected an object");
  for (const auto& [key, _] : data.items()) {
    static const std::set<std::string> known{"oracle", "simplex",    "pool_size",
                                             "logits", "posteriors", "labels"};
    if (!known.contains(key)) {
      throw Error(ErrorCode::ParseError, "/data/" + key + ": unknown key");
    }
  }
  const bool files = data.contains("labels");
  if (files) {
    auto resolve = [&](const char* key) {
      const auto p = fs::path(data_field<std::string>(data, key, ""));
      return p.is_absolute() ? p : base_dir / p;
    };
    std::optional<PosteriorMatrix> post;
    std::optional<LogitMatrix> logits;
    if (data.contains("posteriors")) {
      const auto p = resolve("posteriors");
      manifest.inputs.push_back(p);
      post = to_posteriors(read_matrix(p));
    }
    if (data.contains("logits")) {
      const auto p = resolve("logits");
      manifest.inputs.push_back(p);
      logits = to_logits(read_matrix(p));
    }
    if (!post && !logits) {
      throw Error(ErrorCode::ParseError, "/data: file data needs posteriors or logits");
    }
    if (!post) post = Calibrator::identity().apply(*logits);
    const auto lp = resolve("labels");
    manifest.inputs.push_back(lp);
    auto labels = read_labels(lp, {});
    return IngestedSource{LabeledBatch(std::move(post), std::move(logits), std::move(labels))};
  }

  const auto pool_size = data_field<std::size_t>(data, "pool_size", 12'500);
  if (data.contains("oracle") && data.contains("simplex")) {
    throw Error(ErrorCode::ParseError, "/data: give either oracle or simplex, not both");
  }
  if (data.contains("oracle")) {
    return OracleSource{oracle_from_json(data.at("oracle"), "/data/oracle"), pool_size};
  }
  const Json spec = data.value("simplex", Json::object());
  if (!spec.is_object()) throw Error(ErrorCode::ParseError, "/data/simplex: expected an object");
  for (const auto& [key, _] : spec.items()) {
    if (key != "classes" && key != "separation" && key != "variance" && key != "prior") {
      throw Error(ErrorCode::ParseError, "/data/simplex/" + key + ": unknown key");
    }
  }
  std::size_t classes = 3;
  double separation = kDefaultSeparation;
  double variance = kDefaultVariance;
  try {
    classes = spec.value("classes", classes);
    separation = spec.value("separation", separation);
    variance = spec.value("variance", variance);
  } catch (const Json::exception&) {
    throw Error(ErrorCode::ParseError, "/data/simplex: wrong field type");
  }
  if (classes < 2) throw Error(ErrorCode::ParseError, "/data/simplex/classes: must be >= 2");
  auto prior = spec.contains("prior") ? simplex_from_json(spec.at("prior"), "/data/simplex/prior")
                                      : ProbabilitySimplex::uniform(classes);
  try {
    return OracleSource{GaussianOracle::simplex(classes, separation, variance, std::move(prior)),
                        pool_size};
  } catch (const Error& e) {
    throw Error(ErrorCode::ParseError, std::string("/data/simplex: ") + e.detail());
  }
}

int cmd_benchmark(const BenchmarkArgs& a, RunManifest& manifest) {
  manifest.inputs.emplace_back(a.config);
  const Json j = read_json_file(a.config);
  BenchmarkConfig cfg = benchmark_config_from_json(j, {"data"});
  const SeedChoice seed =
      resolve_seed(a.seed, j.contains("base_seed") ? std::optional(cfg.base_seed) : std::nullopt);
  cfg.base_seed = seed.value;
  const fs::path base_dir = fs::path(a.config).parent_path();
  const DataSource source =
      data_source_from_json(j.value("data", Json::object()), base_dir, manifest);
  if (a.jobs == 0) throw Error(ErrorCode::InvalidArgument, "--jobs must be >= 1");

  const auto report = run_benchmark(cfg, source, a.jobs);
  Json report_json = to_json(report);
  ensure_dir(a.out);
  const fs::path dir(a.out);
  write_text(dir / "report.json", report_json.dump(2) + "\n");
  write_text(dir / "report.csv", report_csv(report));

  manifest.config = to_json(cfg);
  if (j.contains("data")) manifest.config["data"] = j.at("data");
  manifest.seeds = seeds_json(seed);
  manifest.write(dir / "manifest.json");

  std::size_t failures = 0;
  for (const auto& c : report.cells) failures += c.failures;
  if (failures > 0) {
    std::cerr << failures << " estimator runs failed; see the error column of report.json\n";
  }
  std::cout << Json{{"config_hash", report_json.at("config_hash")},
                    {"cells", report_json.at("cells")}}
                   .dump(2)
            << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- replay

int cmd_replay(const std::string& manifest_path) {
  const Json m = read_json_file(manifest_path);
  std::vector<std::string> argv;
  try {
    argv = m.at("argv").get<std::vector<std::string>>();
  } catch (const Json::exception&) {
    throw Error(ErrorCode::ParseError, "/argv: expected an array of strings");
  }
  if (argv.empty() || argv.front() == "replay") {
    throw Error(ErrorCode::ParseError, "/argv: nothing to replay");
  }
  // Reinstate the seed environment the original run saw.
  const Json seeds = m.value("seeds", Json::object());
  if (seeds.value("source", std::string()) == "env") {
    ::setenv(kSeedEnv, std::to_string(seeds.at("base_seed").get<std::uint64_t>()).c_str(), 1);
  } else {
    ::unsetenv(kSeedEnv);
  }
  return run(argv);
}

int report_error(const Error& e) {
  std::cerr << "error: " << e.what() << '\n';
  return is_computation_error(e.code()) ? kExitComputeError : kExitInputError;
}

}  // namespace

int run(const std::vector<std::string>& args) {
  CLI::App app{"Label shift estimation and benchmarking", "shiftbench"};
  app.require_subcommand(1);
  app.set_version_flag("--version", SHIFTBENCH_VERSION);

  EstimateArgs est;
  auto* e = app.add_subcommand("estimate", "Estimate the test label distribution");
  e->add_option("test", est.test, "Test posteriors CSV (logits with --calibrator)")->required();
  e->add_option("--estimator", est.estimator, "cc, em, leip, bbsl, rlls or rlls-hard");
  e->add_option("--source-prior", est.source_prior, "One-row CSV with the source prior");
  e->add_option("--validation", est.validation, "Validation posteriors CSV");
  e->add_option("--validation-labels", est.validation_labels, "Validation labels CSV");
  e->add_option("--calibrator", est.calibrator, "Calibrator JSON; inputs are then logits");
  e->add_option("--tau", est.tau, "LEIP confidence threshold (default: from min recall)");
  e->add_option("--leip-floor", est.leip_floor, "Floor for LEIP running distributions");
  e->add_option("--recall-floor", est.recall_floor, "Below this min recall use mean recall");
  e->add_option("--em-tol", est.em_tol);
  e->add_option("--em-max-iter", est.em_max_iter);
  e->add_option("--em-init", est.em_init, "auto, source or soft-mean");
  e->add_option("--rlls-lambda", est.rlls_lambda);
  e->add_option("--rlls-alpha", est.rlls_alpha);
  e->add_option("--rlls-delta", est.rlls_delta);
  e->add_option("--manifest", est.manifest, "Write a run manifest here");

  CalibrateArgs cal;
  auto* c = app.add_subcommand("calibrate", "Fit a calibrator on labeled logits");
  c->add_option("logits", cal.logits)->required();
  c->add_option("labels", cal.labels)->required();
  c->add_option("--method", cal.method, "ts, bcts, vs or nbvs");
  c->add_option("--bins", cal.bins, "ECE bins")->check(CLI::PositiveNumber);
  c->add_option("--out", cal.out, "Directory for calibrator.json and manifest.json");
  c->add_option("--manifest", cal.manifest, "Write a run manifest here");

  SimulateArgs sim;
  auto* s = app.add_subcommand("simulate", "Generate a Dirichlet-shifted oracle scenario");
  s->add_option("--alpha", sim.alpha, "Dirichlet concentration")->required();
  s->add_option("--classes", sim.classes);
  s->add_option("--seed", sim.seed, "Base seed (else $SHIFTBENCH_SEED, else 0)");
  s->add_option("--oracle-spec", sim.oracle_spec, "Oracle JSON {means, variance, prior}");
  s->add_option("--n", sim.n, "Unshifted test pool size before subsampling");
  s->add_option("--validation-size", sim.validation_size);
  s->add_option("--separation", sim.separation, "Distance between class means");
  s->add_option("--variance", sim.variance);
  s->add_option("--out", sim.out, "Output directory")->required();

  BenchmarkArgs bench;
  auto* b = app.add_subcommand("benchmark", "Run a Dirichlet-shift benchmark sweep");
  b->add_option("--config", bench.config, "Benchmark config JSON")->required();
  b->add_option("--out", bench.out, "Output directory")->required();
  b->add_option("--jobs", bench.jobs, "Worker threads");
  b->add_option("--seed", bench.seed, "Base seed override");

  std::string replay_path;
  auto* r = app.add_subcommand("replay", "Re-run the command recorded in a manifest");
  r->add_option("manifest", replay_path)->required();

  std::vector<const char*> argv{"shiftbench"};
  for (const auto& arg : args) argv.push_back(arg.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitInputError;
  }

  RunManifest manifest;
  manifest.argv = args;
  try {
    if (e->parsed()) {
      manifest.command = "estimate";
      return cmd_estimate(est, manifest);
    }
    if (c->parsed()) {
      manifest.command = "calibrate";
      return cmd_calibrate(cal, manifest);
    }
    if (s->parsed()) {
      manifest.command = "simulate";
      return cmd_simulate(sim, manifest);
    }
    if (b->parsed()) {
      manifest.command = "benchmark";
      return cmd_benchmark(bench, manifest);
    }
    return cmd_replay(replay_path);
  } catch (const Error& err) {
    return report_error(err);
  } catch (const std::exception& err) {
    std::cerr << "error: " << err.what() << '\n';
    return kExitInputError;
  }
}

}  // namespace shiftbench::cli
