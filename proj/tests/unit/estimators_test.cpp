#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "shiftbench/errors.hpp"
#include "shiftbench/estimators.hpp"
#include "support/random.hpp"

namespace shiftbench {
namespace {

using testing::Random;
using Rows = std::vector<std::vector<double>>;

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

// Dense solve by Gaussian elimination with partial pivoting.
std::vector<double> solve(std::vector<std::vector<double>> a, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t c = 0; c < n; ++c) {
    std::size_t piv = c;
    for (std::size_t r = c + 1; r < n; ++r) {
      if (std::abs(a[r][c]) > std::abs(a[piv][c])) piv = r;
    }
    std::swap(a[c], a[piv]);
    std::swap(b[c], b[piv]);
    for (std::size_t r = c + 1; r < n; ++r) {
      const double f = a[r][c] / a[c][c];
      for (std::size_t k = c; k < n; ++k) a[r][k] -= f * a[c][k];
      b[r] -= f * b[c];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t k = i + 1; k < n; ++k) s -= a[i][k] * x[k];
    x[i] = s / a[i][i];
  }
  return x;
}

// Random diagonally dominant conditional confusion matrix.
ConfusionMatrix random_confusion(Random& rng, std::size_t m) {
  std::vector<double> e(m * m);
  for (std::size_t j = 0; j < m; ++j) {
    double total = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
      e[i * m + j] = i == j ? 2.0 + rng.uniform() : 0.5 * rng.uniform();
      total += e[i * m + j];
    }
    for (std::size_t i = 0; i < m; ++i) e[i * m + j] /= total;
  }
  return ConfusionMatrix(m, std::move(e), ConfusionKind::Conditional);
}

std::vector<double> joint_times(const ConfusionMatrix& c, const ProbabilitySimplex& s,
                                const std::vector<double>& w) {
  const std::size_t m = c.size();
  std::vector<double> u(m, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) u[i] += c(i, j) * s[j] * w[j];
  }
  return u;
}

// ---------------------------------------------------------------- CC

TEST(EstimateCc, CountsArgmaxes) {
  const auto all0 = PosteriorMatrix::from_rows(Rows{{0.9, 0.1}, {0.6, 0.4}});
  EXPECT_EQ(estimate_cc(all0).distribution.to_vector(), (std::vector<double>{1.0, 0.0}));
  const auto four = PosteriorMatrix::from_rows(Rows{{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}, {0.6, 0.4}});
  EXPECT_EQ(estimate_cc(four).distribution.to_vector(), (std::vector<double>{0.75, 0.25}));
  const auto tie = PosteriorMatrix::from_rows(Rows{{0.5, 0.5}});
  EXPECT_EQ(estimate_cc(tie).distribution.to_vector(), (std::vector<double>{1.0, 0.0}));
}

// ---------------------------------------------------------------- EM

TEST(EstimateEm, SourceRowsAreAFixedPoint) {
  const auto s = validate_simplex({0.2, 0.3, 0.5});
  const auto rows = PosteriorMatrix::from_rows(Rows{{0.2, 0.3, 0.5}, {0.2, 0.3, 0.5}});
  const auto r = estimate_em(rows, s);
  EXPECT_EQ(r.iterations, 1u);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(r.distribution[i], s[i], 1e-15);
}

TEST(EstimateEm, OneHotRowsConvergeToPointMass) {
  const auto rows = PosteriorMatrix::from_rows(Rows{{1, 0, 0}, {1, 0, 0}, {1, 0, 0}});
  const auto r = estimate_em(rows, ProbabilitySimplex::uniform(3));
  EXPECT_NEAR(r.distribution[0], 1.0, 1e-8);
}

TEST(EstimateEm, ThreeRowReferenceFixedPoint) {
  // A reference iteration of the E and M steps to 1e-12 ends on the boundary [1, 0].
  const auto rows = PosteriorMatrix::from_rows(Rows{{0.9, 0.1}, {0.8, 0.2}, {0.3, 0.7}});
  EmConfig cfg;
  cfg.tol = 1e-12;
  cfg.max_iter = 1'000'000;
  const auto r = estimate_em(rows, validate_simplex({0.5, 0.5}), cfg);
  EXPECT_NEAR(r.distribution[0], 1.0, 1e-6);
}

TEST(EstimateEm, InteriorReferenceFixedPoint) {
  const auto rows = PosteriorMatrix::from_rows(Rows{{.7, .2, .1},
                                                    {.6, .3, .1},
                                                    {.2, .5, .3},
                                                    {.1, .2, .7},
                                                    {.3, .3, .4},
                                                    {.25, .6, .15}});
  EmConfig cfg;
  cfg.tol = 1e-13;
  cfg.max_iter = 1'000'000;
  const auto r = estimate_em(rows, validate_simplex({0.4, 0.35, 0.25}), cfg);
  EXPECT_NEAR(r.distribution[0], 0.2448680265913061, 1e-9);
  EXPECT_NEAR(r.distribution[1], 0.31466574900226413, 1e-9);
  EXPECT_NEAR(r.distribution[2], 0.4404662244064297, 1e-9);
}

TEST(EstimateEm, ObjectiveNeverDecreases) {
  Random rng(31);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 2 + rng.index(4);
    const std::size_t n = 1 + rng.index(100);
    const auto test = rng.posteriors(n, m, 0.001);
    EmConfig cfg;
    cfg.record_objective = true;
    const auto r = estimate_em(test, rng.simplex(m), cfg);
    ASSERT_GE(r.objective_trace.size(), 1u);
    for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
      EXPECT_GE(r.objective_trace[i], r.objective_trace[i - 1] - 1e-10);
    }
  }
}

TEST(EstimateEm, InvariantUnderRowPermutation) {
  Random rng(32);
  const auto test = rng.posteriors(60, 4);
  const auto s = rng.simplex(4);
  std::vector<std::size_t> perm(60);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng.engine());
  const auto a = estimate_em(test, s).distribution;
  const auto b = estimate_em(test.select(perm), s).distribution;
  for (std::size_t i = 0; i < 4; ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}

TEST(EstimateEm, InitializationsAndErrors) {
  const auto rows = PosteriorMatrix::from_rows(Rows{{0.9, 0.1}, {0.4, 0.6}});
  const auto s = validate_simplex({0.5, 0.5});
  EmConfig soft;
  soft.init = EmInitSoftMeanValidation{};
  EXPECT_EQ(code_of([&] { estimate_em(rows, s, soft); }), ErrorCode::MissingValidation);
  const auto val = PosteriorMatrix::from_rows(Rows{{0.7, 0.3}, {0.3, 0.7}});
  EXPECT_GE(estimate_em(rows, s, soft, &val).iterations, 1u);
  EmConfig explicit_init;
  explicit_init.init = EmInitExplicit{validate_simplex({0.6, 0.4})};
  const auto a = estimate_em(rows, s, explicit_init).distribution;
  const auto b = estimate_em(rows, s).distribution;
  EXPECT_NEAR(a[0], b[0], 1e-6);
  EXPECT_EQ(code_of([&] { estimate_em(rows, validate_simplex({1.0, 0.0})); }),
            ErrorCode::ZeroSourceEntry);
  EXPECT_TRUE(std::holds_alternative<EmInitSoftMeanValidation>(default_em_config(true).init));
  EXPECT_TRUE(std::holds_alternative<EmInitSourcePrior>(default_em_config(false).init));
}

// ---------------------------------------------------------------- mean prediction

TEST(MeanPrediction, SoftAndHard) {
  const auto rows = PosteriorMatrix::from_rows(Rows{{0.6, 0.4}, {0.2, 0.8}});
  const auto soft = mean_prediction(rows, PredictionMode::Soft);
  EXPECT_NEAR(soft[0], 0.4, 1e-15);
  EXPECT_NEAR(soft[1], 0.6, 1e-15);
  EXPECT_EQ(mean_prediction(rows, PredictionMode::Hard).to_vector(), (std::vector<double>{0.5, 0.5}));
  const auto one = PosteriorMatrix::from_rows(Rows{{0.3, 0.7}});
  EXPECT_EQ(mean_prediction(one, PredictionMode::Soft).to_vector(), (std::vector<double>{0.3, 0.7}));
}

// ---------------------------------------------------------------- BBSL / RLLS

TEST(EstimateBbsl, PerfectClassifier) {
  const ConfusionMatrix eye(3, {1, 0, 0, 0, 1, 0, 0, 0, 1}, ConfusionKind::Conditional);
  const auto s = ProbabilitySimplex::uniform(3);
  const auto target = validate_simplex({0.5, 0.3, 0.2});
  const auto w = estimate_bbsl(eye, target, s);
  EXPECT_NEAR(w.weights[0], 1.5, 1e-12);
  EXPECT_NEAR(w.weights[1], 0.9, 1e-12);
  EXPECT_NEAR(w.weights[2], 0.6, 1e-12);
  EXPECT_FALSE(w.clipped);
}

TEST(EstimateBbsl, NoShiftGivesUnitWeights) {
  Random rng(41);
  const auto c = random_confusion(rng, 4);
  const auto s = rng.simplex(4);
  const auto u = validate_simplex(joint_times(c, s, {1, 1, 1, 1}));
  const auto w = estimate_bbsl(c, u, s);
  for (double v : w.weights.values()) EXPECT_NEAR(v, 1.0, 1e-10);
}

TEST(EstimateBbsl, ForwardConstructedWeightsAreRecovered) {
  Random rng(42);
  for (int t = 0; t < 50; ++t) {
    const std::size_t m = 2 + rng.index(5);
    const auto c = random_confusion(rng, m);
    const auto s = rng.simplex(m);
    const auto target = rng.simplex(m);
    std::vector<double> w_star(m);
    for (std::size_t i = 0; i < m; ++i) w_star[i] = target[i] / s[i];
    const auto u = validate_simplex(joint_times(c, s, w_star));
    const auto w = estimate_bbsl(c, u, s);
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(w.unclipped[i], w_star[i], 1e-8);
    // Forward multiplication reproduces u when nothing was clipped.
    ASSERT_FALSE(w.clipped);
    const auto back = joint_times(c, s, w.weights.to_vector());
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(back[i], u[i], 1e-8);
  }
}

TEST(EstimateBbsl, NegativeSolutionIsClippedAndRescaled) {
  const ConfusionMatrix c(2, {0.8, 0.3, 0.2, 0.7}, ConfusionKind::Conditional);
  const auto s = validate_simplex({0.5, 0.5});
  // û beyond what any nonnegative w can produce.
  const auto w = estimate_bbsl(c, validate_simplex({0.9, 0.1}), s);
  EXPECT_TRUE(w.clipped);
  EXPECT_LT(w.unclipped[1], 0.0);
  EXPECT_EQ(w.weights[1], 0.0);
  EXPECT_TRUE(w.weights.consistent_with(s, 1e-12));
}

TEST(EstimateBbsl, SingularConfusionIsRejected) {
  const ConfusionMatrix c(2, {0.5, 0.5, 0.5, 0.5}, ConfusionKind::Conditional);
  EXPECT_EQ(code_of([&] {
              estimate_bbsl(c, validate_simplex({0.5, 0.5}), validate_simplex({0.5, 0.5}));
            }),
            ErrorCode::SingularConfusion);
}

TEST(EstimateRlls, ZeroLambdaEqualsBbsl) {
  Random rng(43);
  for (int t = 0; t < 30; ++t) {
    const std::size_t m = 2 + rng.index(4);
    const auto c = random_confusion(rng, m);
    const auto s = rng.simplex(m);
    const auto u = rng.simplex(m);
    RllsConfig cfg;
    cfg.lambda_override = 0.0;
    const auto a = estimate_bbsl(c, u, s);
    const auto b = estimate_rlls(c, u, s, cfg);
    for (std::size_t i = 0; i < m; ++i) EXPECT_NEAR(a.weights[i], b.weights[i], 1e-10);
  }
}

TEST(EstimateRlls, HugeLambdaShrinksToNoShift) {
  Random rng(44);
  const auto c = random_confusion(rng, 3);
  const auto s = rng.simplex(3);
  RllsConfig cfg;
  cfg.lambda_override = 1e12;
  const auto w = estimate_rlls(c, rng.simplex(3), s, cfg);
  for (double v : w.weights.values()) {
    EXPECT_NEAR(v, 1.0, 1e-9);
  }
}

TEST(EstimateRlls, MatchesRidgeNormalEquations) {
  Random rng(45);
  const auto c = random_confusion(rng, 3);
  const auto s = rng.simplex(3);
  const auto u = ProbabilitySimplex::normalize(joint_times(c, s, {1.3, 0.9, 0.7}));
  const double lambda = 0.1;
  std::vector<std::vector<double>> a(3, std::vector<double>(3));
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) a[i][j] = c(i, j) * s[j];
  }
  const auto ones = joint_times(c, s, {1, 1, 1});
  std::vector<std::vector<double>> ata(3, std::vector<double>(3, 0.0));
  std::vector<double> atb(3, 0.0);
  for (std::size_t i = 0; i < 3; ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      for (std::size_t k = 0; k < 3; ++k) ata[i][j] += a[k][i] * a[k][j];
      atb[i] += a[j][i] * (u[j] - ones[j]);
    }
    ata[i][i] += lambda;
  }
  const auto theta = solve(ata, atb);
  RllsConfig cfg;
  cfg.lambda_override = lambda;
  const auto w = estimate_rlls(c, u, s, cfg);
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(w.unclipped[i], 1.0 + theta[i], 1e-12);
  EXPECT_EQ(w.lambda, lambda);
}

TEST(EstimateRlls, LambdaResolution) {
  const double log_term = std::log(2.0 * 3 / 0.05);
  const double expect = 0.01 * 3.0 * (2.0 * log_term / (3.0 * 1000) + std::sqrt(2.0 * log_term / 1000));
  EXPECT_NEAR(rlls_lambda(0.01, 0.05, 3, 1000), expect, 1e-15);
  RllsConfig cfg;
  EXPECT_EQ(resolve_rlls_lambda(cfg, 3), 0.01);
  cfg.validation_size = 1000;
  EXPECT_NEAR(resolve_rlls_lambda(cfg, 3), expect, 1e-15);
  cfg.lambda_override = 0.5;
  EXPECT_EQ(resolve_rlls_lambda(cfg, 3), 0.5);
}

TEST(DistributionFromWeights, MultipliesBySource) {
  const auto d = distribution_from_weights(ShiftWeights({1.6, 0.4}), validate_simplex({0.5, 0.5}));
  EXPECT_NEAR(d[0], 0.8, 1e-15);
  EXPECT_NEAR(d[1], 0.2, 1e-15);
}

// ---------------------------------------------------------------- tau selection

TEST(SelectTau, PerfectRecallAdmitsEverything) {
  const ConfusionMatrix eye(2, {1, 0, 0, 1}, ConfusionKind::Conditional);
  const std::vector<double> top{0.9, 0.6, 0.75, 0.99};
  EXPECT_EQ(select_tau(eye, top), 0.6);
}

TEST(SelectTau, NearestRankPercentile) {
  const ConfusionMatrix c(2, {0.8, 0.1, 0.2, 0.9}, ConfusionKind::Conditional);
  const std::vector<double> top{0.95, 0.99, 0.91, 0.97, 0.93, 0.90, 0.92, 0.98, 0.94, 0.96};
  EXPECT_EQ(select_tau(c, top), 0.92);
}

TEST(SelectTau, FallsBackToMeanRecall) {
  // Min recall 0.05 is under the 0.3 floor, so the mean recall 0.6 applies.
  const ConfusionMatrix d(3, {0.05, 0.0, 0.0, 0.95, 0.9, 0.15, 0.0, 0.1, 0.85},
                          ConfusionKind::Conditional);
  ASSERT_NEAR((0.05 + 0.9 + 0.85) / 3.0, 0.6, 1e-15);
  std::vector<double> top(10);
  for (std::size_t i = 0; i < 10; ++i) top[i] = 0.90 + 0.01 * static_cast<double>(i);
  // n = 60 percent -> index ceil(6) - 1 = 5 of the descending list.
  EXPECT_DOUBLE_EQ(select_tau(d, top), 0.94);
}

TEST(SelectTau, EmptyInput) {
  const ConfusionMatrix eye(2, {1, 0, 0, 1}, ConfusionKind::Conditional);
  EXPECT_EQ(code_of([&] { select_tau(eye, std::vector<double>{}); }), ErrorCode::EmptyInput);
}

}  // namespace
}  // namespace shiftbench
