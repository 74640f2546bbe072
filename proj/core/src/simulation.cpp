#include "shiftbench/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "shiftbench/errors.hpp"
#include "shiftbench/rng.hpp"

namespace shiftbench {

GaussianOracle::GaussianOracle(std::vector<std::vector<double>> means, double variance,
                               ProbabilitySimplex prior)
    : means_(std::move(means)), variance_(variance), prior_(std::move(prior)) {
  if (means_.size() < 2) throw Error(ErrorCode::DimensionTooSmall, "oracle needs >= 2 classes");
  if (means_.size() != prior_.size()) {
    throw Error(ErrorCode::DimensionMismatch, "oracle prior length differs from class count");
  }
  const std::size_t d = means_.front().size();
  if (d == 0) throw Error(ErrorCode::InvalidArgument, "oracle means need >= 1 dimension");
  for (const auto& mu : means_) {
    if (mu.size() != d) throw Error(ErrorCode::DimensionMismatch, "oracle means differ in length");
    for (double v : mu) {
      if (!std::isfinite(v)) throw Error(ErrorCode::NonFiniteValue, "oracle mean");
    }
  }
  if (!(variance_ > 0.0) || !std::isfinite(variance_)) {
    throw Error(ErrorCode::InvalidArgument, "oracle variance must be positive");
  }
}

GaussianOracle GaussianOracle::simplex(std::size_t classes, double separation, double variance,
                                       ProbabilitySimplex prior) {
  std::vector<std::vector<double>> means(classes, std::vector<double>(classes, 0.0));
  for (std::size_t i = 0; i < classes; ++i) means[i][i] = separation / std::sqrt(2.0);
  return GaussianOracle(std::move(means), variance, std::move(prior));
}

void GaussianOracle::log_posterior(std::span<const double> x, std::span<double> out) const {
  if (x.size() != dimension()) {
    throw Error(ErrorCode::DimensionMismatch, "point has wrong dimension");
  }
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < classes(); ++i) {
    double dist2 = 0.0;
    for (std::size_t j = 0; j < x.size(); ++j) {
      const double d = x[j] - means_[i][j];
      dist2 += d * d;
    }
    out[i] = std::log(prior_[i]) - dist2 / (2.0 * variance_);
    top = std::max(top, out[i]);
  }
  double total = 0.0;
  for (std::size_t i = 0; i < classes(); ++i) total += std::exp(out[i] - top);
  const double lse = top + std::log(total);
  for (std::size_t i = 0; i < classes(); ++i) out[i] -= lse;
}

ProbabilitySimplex GaussianOracle::posterior(std::span<const double> x) const {
  std::vector<double> lp(classes());
  log_posterior(x, lp);
  for (auto& v : lp) v = std::exp(v);
  return ProbabilitySimplex::normalize(std::move(lp));
}

namespace {

std::size_t draw_category(CounterRng& rng, const ProbabilitySimplex& p) {
  const double u = rng.uniform();
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] > 0.0) last_positive = i;
    acc += p[i];
    if (u < acc && p[i] > 0.0) return i;
  }
  return last_positive;
}

}  // namespace

LabeledBatch oracle_generate(const GaussianOracle& oracle, const ProbabilitySimplex& prior,
                             std::size_t n, std::uint64_t seed) {
  if (n == 0) throw Error(ErrorCode::InvalidArgument, "oracle batch size must be >= 1");
  if (prior.size() != oracle.classes()) {
    throw Error(ErrorCode::DimensionMismatch, "sampling prior length differs from class count");
  }
  const std::size_t m = oracle.classes();
  const std::size_t d = oracle.dimension();
  const double sigma = std::sqrt(oracle.variance());
  CounterRng rng(seed);
  std::vector<double> logits(n * m), post(n * m), x(d);
  std::vector<std::size_t> labels(n);
  for (std::size_t k = 0; k < n; ++k) {
    const std::size_t y = draw_category(rng, prior);
    labels[k] = y;
    for (std::size_t j = 0; j < d; ++j) x[j] = oracle.means()[y][j] + sigma * rng.normal();
    std::span<double> lrow(logits.data() + k * m, m);
    oracle.log_posterior(x, lrow);
    for (std::size_t i = 0; i < m; ++i) post[k * m + i] = std::exp(lrow[i]);
  }
  return LabeledBatch(PosteriorMatrix(n, m, std::move(post)), LogitMatrix(n, m, std::move(logits)),
                      std::move(labels));
}

LabeledBatch distort(const LabeledBatch& batch, double temperature) {
  if (!(temperature > 0.0) || !std::isfinite(temperature)) {
    throw Error(ErrorCode::InvalidTemperature, "temperature must be positive and finite");
  }
  const auto& logits = batch.logits();
  const std::size_t m = logits.cols();
  std::vector<double> scaled(logits.data().begin(), logits.data().end());
  for (auto& z : scaled) z /= temperature;
  std::vector<double> post(scaled.size());
  for (std::size_t k = 0; k < logits.rows(); ++k) {
    softmax(std::span<const double>(scaled.data() + k * m, m),
            std::span<double>(post.data() + k * m, m));
  }
  return LabeledBatch(PosteriorMatrix(logits.rows(), m, std::move(post)),
                      LogitMatrix(logits.rows(), m, std::move(scaled)), batch.labels());
}

ProbabilitySimplex sample_dirichlet_prior(double alpha, std::size_t classes, std::uint64_t seed) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) {
    throw Error(ErrorCode::InvalidAlpha, "Dirichlet alpha must be positive and finite");
  }
  if (classes < 2) throw Error(ErrorCode::DimensionTooSmall, "need at least 2 classes");
  CounterRng rng(seed);
  std::vector<double> logs(classes);
  for (auto& v : logs) v = rng.log_gamma_draw(alpha);
  const double top = *std::max_element(logs.begin(), logs.end());
  for (auto& v : logs) v = std::exp(v - top);
  return ProbabilitySimplex::normalize(std::move(logs));
}

SubsamplePlan plan_subsample(std::span<const std::size_t> counts,
                             const ProbabilitySimplex& target) {
  if (counts.size() != target.size()) {
    throw Error(ErrorCode::DimensionMismatch, "class counts and target lengths differ");
  }
  const std::size_t m = counts.size();
  double cap = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < m; ++i) {
    if (target[i] <= 0.0) continue;
    if (counts[i] == 0) {
      throw Error(ErrorCode::MissingRequiredClass,
                  "class " + std::to_string(i) + " has target mass but no samples");
    }
    cap = std::min(cap, static_cast<double>(counts[i]) / target[i]);
  }
  // The slack absorbs rounding when the target equals the empirical mix.
  std::size_t n_total = static_cast<std::size_t>(std::floor(cap + 1e-9));

  SubsamplePlan plan;
  plan.per_class.assign(m, 0);
  std::vector<double> remainder(m, -1.0);
  std::size_t assigned = 0;
  for (std::size_t i = 0; i < m; ++i) {
    if (target[i] <= 0.0) continue;
    const double quota = static_cast<double>(n_total) * target[i];
    const auto base = std::min(static_cast<std::size_t>(std::floor(quota)), counts[i]);
    plan.per_class[i] = base;
    remainder[i] = quota - static_cast<double>(base);
    assigned += base;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return remainder[a] > remainder[b]; });
  for (std::size_t i : order) {
    if (assigned >= n_total) break;
    if (target[i] <= 0.0 || plan.per_class[i] >= counts[i]) continue;
    ++plan.per_class[i];
    ++assigned;
  }
  plan.n_total = assigned;
  return plan;
}

std::vector<std::size_t> subsample_without_replacement(std::span<const std::size_t> labels,
                                                       const ProbabilitySimplex& target,
                                                       std::uint64_t seed) {
  if (labels.empty()) throw Error(ErrorCode::EmptyInput, "no labels to sample from");
  const std::size_t m = target.size();
  std::vector<std::vector<std::size_t>> by_class(m);
  for (std::size_t k = 0; k < labels.size(); ++k) {
    if (labels[k] >= m) throw Error(ErrorCode::LabelOutOfRange, "label exceeds target length", k);
    by_class[labels[k]].push_back(k);
  }
  std::vector<std::size_t> counts(m);
  for (std::size_t i = 0; i < m; ++i) counts[i] = by_class[i].size();
  const auto plan = plan_subsample(counts, target);

  CounterRng rng(seed);
  std::vector<std::size_t> out;
  out.reserve(plan.n_total);
  for (std::size_t i = 0; i < m; ++i) {
    auto& pool = by_class[i];
    // Partial Fisher-Yates: the first per_class[i] slots become the sample.
    for (std::size_t s = 0; s < plan.per_class[i]; ++s) {
      const std::size_t j = s + static_cast<std::size_t>(rng.below(pool.size() - s));
      std::swap(pool[s], pool[j]);
      out.push_back(pool[s]);
    }
  }
  std::sort(out.begin(), out.end());
  return out;
}

DirichletShiftScenario make_dirichlet_scenario(std::span<const std::size_t> labels,
                                               std::size_t classes, double alpha,
                                               std::uint64_t seed) {
  DirichletShiftScenario s{alpha, seed, sample_dirichlet_prior(alpha, classes, seed), 0, {}};
  s.selected_indices = subsample_without_replacement(labels, s.target_prior,
                                                     derive_seed(seed, 0x5355425341ULL));
  s.n_total = s.selected_indices.size();
  return s;
}

ConfusionMatrix estimate_confusion(const LabeledBatch& validation, PredictionMode mode) {
  const auto& post = validation.posteriors();
  const std::size_t m = post.cols();
  const auto counts = validation.label_counts();
  for (std::size_t j = 0; j < m; ++j) {
    if (counts[j] == 0) {
      throw Error(ErrorCode::ClassWithNoValidationSamples,
                  "class " + std::to_string(j) + " never appears in validation labels");
    }
  }
  std::vector<double> entries(m * m, 0.0);
  for (std::size_t k = 0; k < post.rows(); ++k) {
    const std::size_t y = validation.labels()[k];
    if (mode == PredictionMode::Hard) {
      entries[post.row_argmax(k) * m + y] += 1.0;
    } else {
      const auto r = post.row(k);
      for (std::size_t i = 0; i < m; ++i) entries[i * m + y] += r[i];
    }
  }
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) entries[i * m + j] /= static_cast<double>(counts[j]);
  }
  return ConfusionMatrix(m, std::move(entries), ConfusionKind::Conditional);
}

}  // namespace shiftbench
