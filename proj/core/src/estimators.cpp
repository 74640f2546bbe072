#include "shiftbench/estimators.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "shiftbench/errors.hpp"
#include "shiftbench/prior_update.hpp"

namespace shiftbench {

namespace {

std::vector<double> argmax_counts(const PosteriorMatrix& m) {
  std::vector<double> counts(m.cols(), 0.0);
  for (std::size_t k = 0; k < m.rows(); ++k) counts[m.row_argmax(k)] += 1.0;
  return counts;
}

void require_positive_source(const ProbabilitySimplex& source, std::size_t classes) {
  if (source.size() != classes) {
    throw Error(ErrorCode::DimensionMismatch,
                "source prior has " + std::to_string(source.size()) + " classes, data has " +
                    std::to_string(classes));
  }
  for (std::size_t i = 0; i < source.size(); ++i) {
    if (!(source[i] > 0.0)) {
      throw Error(ErrorCode::ZeroSourceEntry, "source prior of class " + std::to_string(i));
    }
  }
}

}  // namespace

EstimateResult estimate_cc(const PosteriorMatrix& test) {
  if (test.rows() == 0) throw Error(ErrorCode::EmptyBatch, "no test rows");
  return EstimateResult{ProbabilitySimplex::normalize(argmax_counts(test))};
}

ProbabilitySimplex mean_prediction(const PosteriorMatrix& test, PredictionMode mode) {
  if (test.rows() == 0) throw Error(ErrorCode::EmptyBatch, "no test rows");
  if (mode == PredictionMode::Hard) return ProbabilitySimplex::normalize(argmax_counts(test));
  std::vector<double> sums(test.cols(), 0.0);
  for (std::size_t k = 0; k < test.rows(); ++k) {
    const auto r = test.row(k);
    for (std::size_t i = 0; i < r.size(); ++i) sums[i] += r[i];
  }
  return ProbabilitySimplex::normalize(std::move(sums));
}

// ---------------------------------------------------------------- EM

EmConfig default_em_config(bool have_validation) {
  EmConfig cfg;
  if (have_validation) cfg.init = EmInitSoftMeanValidation{};
  return cfg;
}

double em_objective(const PosteriorMatrix& test, const ProbabilitySimplex& source,
                    const ProbabilitySimplex& prior) {
  const auto ratio = detail::prior_ratio(source, prior);
  long double total = 0.0L;
  for (std::size_t k = 0; k < test.rows(); ++k) {
    const auto r = test.row(k);
    double mix = 0.0;
    for (std::size_t j = 0; j < r.size(); ++j) mix += ratio[j] * r[j];
    total += std::log(static_cast<long double>(mix));
  }
  return static_cast<double>(total / static_cast<long double>(test.rows()));
}

EstimateResult estimate_em(const PosteriorMatrix& test, const ProbabilitySimplex& source,
                           const EmConfig& cfg, const PosteriorMatrix* validation) {
  if (test.rows() == 0) throw Error(ErrorCode::EmptyBatch, "no test rows");
  if (!(cfg.tol > 0.0) || cfg.max_iter == 0) {
    throw Error(ErrorCode::InvalidArgument, "EM needs tol > 0 and max_iter >= 1");
  }
  const std::size_t m = test.cols();
  require_positive_source(source, m);

  std::vector<double> prior;
  if (std::holds_alternative<EmInitSourcePrior>(cfg.init)) {
    prior = source.to_vector();
  } else if (std::holds_alternative<EmInitSoftMeanValidation>(cfg.init)) {
    if (validation == nullptr) {
      throw Error(ErrorCode::MissingValidation,
                  "soft-mean initialization needs validation posteriors");
    }
    if (validation->cols() != m) {
      throw Error(ErrorCode::DimensionMismatch, "validation width differs from test width");
    }
    prior = mean_prediction(*validation, PredictionMode::Soft).to_vector();
  } else {
    const auto& init = std::get<EmInitExplicit>(cfg.init).prior;
    if (init.size() != m) throw Error(ErrorCode::DimensionMismatch, "initial prior length");
    prior = init.to_vector();
  }

  EstimateResult result{ProbabilitySimplex::normalize(prior)};
  if (cfg.record_objective) {
    result.objective_trace.push_back(em_objective(test, source, result.distribution));
  }

  std::vector<double> ratio(m), row(m), next(m);
  std::size_t iter = 0;
  double change = 0.0;
  while (iter < cfg.max_iter) {
    ++iter;
    for (std::size_t i = 0; i < m; ++i) ratio[i] = prior[i] / source[i];
    std::fill(next.begin(), next.end(), 0.0);
    // E step per row, M step as the running mean.
    for (std::size_t k = 0; k < test.rows(); ++k) {
      if (!detail::reweight_row(test.row(k), ratio, row)) {
        throw Error(ErrorCode::DegenerateSupport, "EM prior vanishes on a row's support", k);
      }
      for (std::size_t i = 0; i < m; ++i) next[i] += row[i];
    }
    const double n = static_cast<double>(test.rows());
    change = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      next[i] /= n;
      change += std::abs(next[i] - prior[i]);
    }
    prior.swap(next);
    if (cfg.record_objective) {
      result.objective_trace.push_back(
          em_objective(test, source, ProbabilitySimplex::normalize(prior)));
    }
    if (change < cfg.tol) break;
  }
  result.distribution = ProbabilitySimplex::normalize(prior);
  result.iterations = iter;
  result.diagnostics["final_l1_change"] = change;
  result.diagnostics["converged"] = change < cfg.tol ? 1.0 : 0.0;
  return result;
}

// ---------------------------------------------------------------- confusion-matrix methods

namespace {

struct JointSystem {
  Eigen::MatrixXd a;
  double condition = 0.0;
};

JointSystem joint_system(const ConfusionMatrix& confusion, const ProbabilitySimplex& u_hat,
                         const ProbabilitySimplex& source) {
  const std::size_t m = confusion.size();
  if (u_hat.size() != m || source.size() != m) {
    throw Error(ErrorCode::DimensionMismatch, "confusion, u_hat and source lengths differ");
  }
  const ConfusionMatrix joint =
      confusion.kind() == ConfusionKind::Joint ? confusion : confusion.to_joint(source);
  JointSystem sys{Eigen::MatrixXd(m, m)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) sys.a(i, j) = joint(i, j);
  }
  const Eigen::JacobiSVD<Eigen::MatrixXd> svd(sys.a);
  const auto& sv = svd.singularValues();
  const double smallest = sv(sv.size() - 1);
  sys.condition = smallest > 0.0 ? sv(0) / smallest : std::numeric_limits<double>::infinity();
  if (!(sys.condition <= kMaxConditionNumber)) {
    throw Error(ErrorCode::SingularConfusion,
                "condition number " + std::to_string(sys.condition) + " exceeds 1e12");
  }
  return sys;
}

WeightEstimate finish_weights(const Eigen::VectorXd& raw, const ProbabilitySimplex& source,
                              double condition, double lambda) {
  const auto m = static_cast<std::size_t>(raw.size());
  std::vector<double> unclipped(raw.data(), raw.data() + m);
  std::vector<double> w(m);
  bool clipped = false;
  double mass = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    if (!std::isfinite(unclipped[i])) {
      throw Error(ErrorCode::SingularConfusion, "non-finite weight solution");
    }
    w[i] = std::max(unclipped[i], 0.0);
    clipped = clipped || unclipped[i] < 0.0;
    mass += w[i] * source[i];
  }
  if (!(mass > 0.0)) {
    throw Error(ErrorCode::DegenerateSupport, "every weight clipped to zero");
  }
  for (auto& v : w) v /= mass;
  return WeightEstimate{ShiftWeights(std::move(w)), std::move(unclipped), condition, clipped,
                        lambda};
}

Eigen::VectorXd to_eigen(const ProbabilitySimplex& p) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(p.size()));
  for (std::size_t i = 0; i < p.size(); ++i) v(static_cast<Eigen::Index>(i)) = p[i];
  return v;
}

}  // namespace

WeightEstimate estimate_bbsl(const ConfusionMatrix& confusion, const ProbabilitySimplex& u_hat,
                             const ProbabilitySimplex& source) {
  const auto sys = joint_system(confusion, u_hat, source);
  const Eigen::VectorXd w = sys.a.colPivHouseholderQr().solve(to_eigen(u_hat));
  return finish_weights(w, source, sys.condition, 0.0);
}

double rlls_lambda(double alpha, double delta, std::size_t classes, std::size_t n) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "RLLS radius needs n >= 1");
  const double log_term = std::log(2.0 * static_cast<double>(classes) / delta);
  const double nn = static_cast<double>(n);
  return alpha * 3.0 * (2.0 * log_term / (3.0 * nn) + std::sqrt(2.0 * log_term / nn));
}

double resolve_rlls_lambda(const RllsConfig& cfg, std::size_t classes) {
  if (!(cfg.alpha >= 0.0) || !(cfg.delta > 0.0 && cfg.delta < 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "RLLS needs alpha >= 0 and delta in (0,1)");
  }
  if (cfg.lambda_override) {
    if (!(*cfg.lambda_override >= 0.0)) {
      throw Error(ErrorCode::InvalidArgument, "lambda must be nonnegative");
    }
    return *cfg.lambda_override;
  }
  if (cfg.validation_size) return rlls_lambda(cfg.alpha, cfg.delta, classes, *cfg.validation_size);
  return cfg.alpha;
}

WeightEstimate estimate_rlls(const ConfusionMatrix& confusion, const ProbabilitySimplex& u_hat,
                             const ProbabilitySimplex& source, const RllsConfig& cfg) {
  const double lambda = resolve_rlls_lambda(cfg, confusion.size());
  const auto sys = joint_system(confusion, u_hat, source);
  const auto m = static_cast<Eigen::Index>(confusion.size());
  const Eigen::VectorXd b = to_eigen(u_hat) - sys.a * Eigen::VectorXd::Ones(m);
  Eigen::VectorXd theta;
  if (lambda == 0.0) {
    theta = sys.a.colPivHouseholderQr().solve(b);
  } else {
    const Eigen::MatrixXd normal =
        sys.a.transpose() * sys.a + lambda * Eigen::MatrixXd::Identity(m, m);
    theta = normal.ldlt().solve(sys.a.transpose() * b);
  }
  return finish_weights(Eigen::VectorXd::Ones(m) + theta, source, sys.condition, lambda);
}

ProbabilitySimplex distribution_from_weights(const ShiftWeights& w,
                                             const ProbabilitySimplex& source) {
  if (w.size() != source.size()) {
    throw Error(ErrorCode::DimensionMismatch, "weights and source lengths differ");
  }
  std::vector<double> p(w.size());
  for (std::size_t i = 0; i < p.size(); ++i) p[i] = w[i] * source[i];
  return ProbabilitySimplex::normalize(std::move(p));
}

// ---------------------------------------------------------------- LEIP

double select_tau(const ConfusionMatrix& confusion, std::span<const double> top_probs,
                  double recall_floor) {
  if (top_probs.empty()) throw Error(ErrorCode::EmptyInput, "no top probabilities");
  for (double p : top_probs) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "top probabilities must lie in [0,1]");
    }
  }
  const auto recalls = confusion.recalls();
  double recall = *std::min_element(recalls.begin(), recalls.end());
  if (recall < recall_floor) {
    recall = std::accumulate(recalls.begin(), recalls.end(), 0.0) /
             static_cast<double>(recalls.size());
  }
  std::vector<double> sorted(top_probs.begin(), top_probs.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const double n = static_cast<double>(sorted.size());
  // Nearest rank; the slack absorbs rounding in recall * n (e.g. 0.8 * 10).
  const double rank = std::ceil(recall * n - 1e-9);
  const auto last = static_cast<double>(sorted.size() - 1);
  const auto index = static_cast<std::size_t>(std::clamp(rank - 1.0, 0.0, last));
  return sorted[index];
}

namespace {

// Ratio of the running label distribution to the source, with optional floor.
void running_ratio(std::span<const double> counts, double total,
                   const ProbabilitySimplex& source, std::optional<double> floor,
                   std::span<double> ratio) {
  double mass = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    double p = counts[i] / total;
    if (floor) p = std::max(p, *floor);
    ratio[i] = p;
    mass += p;
  }
  for (std::size_t i = 0; i < counts.size(); ++i) ratio[i] = ratio[i] / mass / source[i];
}

double skewness(std::span<const double> v) {
  const double n = static_cast<double>(v.size());
  const double mean = std::accumulate(v.begin(), v.end(), 0.0) / n;
  double m2 = 0.0, m3 = 0.0;
  for (double x : v) {
    const double d = x - mean;
    m2 += d * d;
    m3 += d * d * d;
  }
  m2 /= n;
  m3 /= n;
  return m2 > 0.0 ? m3 / std::pow(m2, 1.5) : 0.0;
}

}  // namespace

EstimateResult estimate_leip(const PosteriorMatrix& test, const ProbabilitySimplex& source,
                             const LeipConfig& cfg, const ConfusionMatrix* confusion) {
  if (test.rows() == 0) throw Error(ErrorCode::EmptyBatch, "no test rows");
  const std::size_t m = test.cols();
  const std::size_t n = test.rows();
  require_positive_source(source, m);
  if (cfg.floor_epsilon &&
      !(*cfg.floor_epsilon > 0.0 && *cfg.floor_epsilon < 1.0 / static_cast<double>(m))) {
    throw Error(ErrorCode::InvalidArgument, "floor epsilon must lie in (0, 1/m)");
  }

  std::vector<double> top(n);
  for (std::size_t k = 0; k < n; ++k) top[k] = test.row_max(k);

  double tau = 0.0;
  if (const auto* fixed = std::get_if<TauExplicit>(&cfg.tau)) {
    if (!(fixed->value > 0.0 && fixed->value <= 1.0)) {
      throw Error(ErrorCode::InvalidArgument, "tau must lie in (0,1]");
    }
    tau = fixed->value;
  } else {
    if (confusion == nullptr) {
      throw Error(ErrorCode::MissingValidation, "automatic tau needs a confusion matrix");
    }
    if (confusion->size() != m) {
      throw Error(ErrorCode::DimensionMismatch, "confusion size differs from test width");
    }
    tau = select_tau(*confusion, top, cfg.recall_floor);
  }

  // Confident set A seeds the label counts; B is everything below tau.
  std::vector<double> counts(m, 0.0);
  std::vector<std::size_t> uncertain;
  for (std::size_t k = 0; k < n; ++k) {
    if (top[k] >= tau) {
      counts[test.row_argmax(k)] += 1.0;
    } else {
      uncertain.push_back(k);
    }
  }
  const std::size_t confident = n - uncertain.size();
  if (confident == 0) {
    throw Error(ErrorCode::EmptyConfidentSet,
                "no row reaches tau = " + std::to_string(tau) + "; lower tau");
  }
  std::stable_sort(uncertain.begin(), uncertain.end(),
                   [&](std::size_t a, std::size_t b) { return top[a] > top[b]; });

  std::vector<double> ratio(m), updated(m);
  double total = static_cast<double>(confident);
  std::size_t degenerate = 0;
  for (std::size_t k : uncertain) {
    running_ratio(counts, total, source, cfg.floor_epsilon, ratio);
    std::size_t label = test.row_argmax(k);
    if (detail::reweight_row(test.row(k), ratio, updated)) {
      label = argmax(updated);
    } else {
      ++degenerate;
    }
    counts[label] += 1.0;
    total += 1.0;
  }

  // Final pass: re-target every row with the incremental estimate.
  running_ratio(counts, total, source, cfg.floor_epsilon, ratio);
  std::vector<double> final_counts(m, 0.0);
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t label = test.row_argmax(k);
    if (detail::reweight_row(test.row(k), ratio, updated)) {
      label = argmax(updated);
    } else {
      ++degenerate;
    }
    final_counts[label] += 1.0;
  }

  EstimateResult result{ProbabilitySimplex::normalize(std::move(final_counts))};
  result.tau_used = tau;
  result.diagnostics["tau"] = tau;
  result.diagnostics["confident_fraction"] = static_cast<double>(confident) /
                                             static_cast<double>(n);
  result.diagnostics["uncertain_rows"] = static_cast<double>(uncertain.size());
  result.diagnostics["degenerate_updates"] = static_cast<double>(degenerate);
  result.diagnostics["top_prob_skewness"] = skewness(top);
  return result;
}

}  // namespace shiftbench
