#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "shiftbench/errors.hpp"
#include "shiftbench/estimators.hpp"
#include "support/leip_reference.hpp"
#include "support/random.hpp"

namespace shiftbench {
namespace {

using testing::leip_reference;
using testing::Random;
using Rows = std::vector<std::vector<double>>;

LeipConfig fixed_tau(double tau) {
  LeipConfig cfg;
  cfg.tau = TauExplicit{tau};
  return cfg;
}

ErrorCode code_of(auto&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "expected an Error";
  return ErrorCode::InvalidArgument;
}

// Rows on a 0.01 grid so several share the same top probability.
Rows grid_rows(Random& rng, std::size_t n, std::size_t m) {
  Rows rows(n, std::vector<double>(m));
  for (auto& r : rows) {
    std::vector<int> cents(m, 0);
    int left = 100;
    for (std::size_t i = 0; i + 1 < m; ++i) {
      cents[i] = static_cast<int>(rng.index(static_cast<std::size_t>(left) + 1));
      left -= cents[i];
    }
    cents[m - 1] = left;
    std::shuffle(cents.begin(), cents.end(), rng.engine());
    for (std::size_t i = 0; i < m; ++i) r[i] = cents[i] / 100.0;
  }
  return rows;
}

TEST(EstimateLeip, AllRowsConfidentReducesToFinalPass) {
  const Rows rows{{0.95, 0.05}, {0.92, 0.08}, {0.1, 0.9}};
  const auto s = validate_simplex({0.5, 0.5});
  // p_a = [2/3, 1/3]; the final pass keeps every argmax, so the result is CC.
  const auto r = estimate_leip(PosteriorMatrix::from_rows(rows), s, fixed_tau(0.9));
  EXPECT_EQ(r.distribution.to_vector(), (std::vector<double>{2.0 / 3.0, 1.0 / 3.0}));
  EXPECT_EQ(r.diagnostics.at("uncertain_rows"), 0.0);
  EXPECT_EQ(r.diagnostics.at("confident_fraction"), 1.0);
}

TEST(EstimateLeip, TwoClassHandTrace) {
  const Rows rows{{0.99, 0.01}, {0.98, 0.02}, {0.97, 0.03}, {0.45, 0.55}};
  const auto r = estimate_leip(PosteriorMatrix::from_rows(rows), validate_simplex({0.5, 0.5}),
                               fixed_tau(0.9));
  EXPECT_EQ(r.distribution.to_vector(), (std::vector<double>{1.0, 0.0}));
  EXPECT_EQ(r.tau_used, std::optional<double>(0.9));
  EXPECT_EQ(r.diagnostics.at("uncertain_rows"), 1.0);
}

TEST(EstimateLeip, SourceShapedCountsGiveCc) {
  const Rows rows{{0.9, 0.1}, {0.95, 0.05}, {0.2, 0.8}};
  const auto test = PosteriorMatrix::from_rows(rows);
  // No uncertain rows and confident counts [2,1] match the source, so the
  // final pass is the identity.
  const auto r =
      estimate_leip(test, validate_simplex({2.0 / 3.0, 1.0 / 3.0}), fixed_tau(0.8));
  EXPECT_EQ(r.distribution, estimate_cc(test).distribution);
}

TEST(EstimateLeip, MatchesReferenceOnRandomSmallInstances) {
  Random rng(51);
  for (int t = 0; t < 200; ++t) {
    const std::size_t m = t < 100 ? 2 : 2 + rng.index(3);
    const std::size_t n = 1 + rng.index(10);
    const auto rows = grid_rows(rng, n, m);
    const auto source = rng.simplex_values(m, 0.1);
    double top_max = 0.0;
    for (const auto& r : rows) top_max = std::max(top_max, *std::max_element(r.begin(), r.end()));
    const double tau = std::min(top_max, 0.5 + 0.5 * rng.uniform());
    const auto want = leip_reference(rows, source, tau);
    const auto got = estimate_leip(PosteriorMatrix::from_rows(rows),
                                   ProbabilitySimplex::normalize(source), fixed_tau(tau));
    EXPECT_EQ(got.distribution.to_vector(), want.distribution) << "instance " << t;
  }
}

TEST(EstimateLeip, FloorMatchesReference) {
  Random rng(52);
  for (int t = 0; t < 100; ++t) {
    const std::size_t m = 3;
    const auto rows = grid_rows(rng, 12, m);
    const auto source = rng.simplex_values(m, 0.1);
    double top_max = 0.0;
    for (const auto& r : rows) top_max = std::max(top_max, *std::max_element(r.begin(), r.end()));
    LeipConfig cfg = fixed_tau(top_max);
    cfg.floor_epsilon = 0.05;
    const auto want = leip_reference(rows, source, top_max, 0.05);
    const auto got =
        estimate_leip(PosteriorMatrix::from_rows(rows), ProbabilitySimplex::normalize(source), cfg);
    EXPECT_EQ(got.distribution.to_vector(), want.distribution) << "instance " << t;
  }
}

TEST(EstimateLeip, AbsentClassStaysLockedWithoutFloor) {
  // Class 1 never appears among confident rows, so updates zero it out.
  const Rows rows{{0.95, 0.05}, {0.2, 0.8}, {0.25, 0.75}};
  const auto test = PosteriorMatrix::from_rows(rows);
  const auto s = validate_simplex({0.5, 0.5});
  EXPECT_EQ(estimate_leip(test, s, fixed_tau(0.9)).distribution.to_vector(),
            (std::vector<double>{1.0, 0.0}));
  LeipConfig floored = fixed_tau(0.9);
  floored.floor_epsilon = 0.4;
  EXPECT_GT(estimate_leip(test, s, floored).distribution[1], 0.0);
}

TEST(EstimateLeip, DegenerateNormalizerKeepsOriginalArgmax) {
  // Running mass sits on class 0 only, while row 1 has no support there.
  const Rows rows{{0.96, 0.02, 0.02}, {0.0, 0.5, 0.5}};
  const auto s = ProbabilitySimplex::uniform(3);
  const auto r = estimate_leip(PosteriorMatrix::from_rows(rows), s, fixed_tau(0.9));
  EXPECT_EQ(r.distribution.to_vector(), (std::vector<double>{0.5, 0.5, 0.0}));
  EXPECT_EQ(r.distribution.to_vector(), leip_reference(rows, s.to_vector(), 0.9).distribution);
  EXPECT_EQ(r.diagnostics.at("degenerate_updates"), 1.0);
}

TEST(EstimateLeip, PermutationInvariantWithDistinctConfidences) {
  Random rng(53);
  const auto test = rng.posteriors(200, 3);
  const auto s = rng.simplex(3);
  std::vector<std::size_t> perm(200);
  std::iota(perm.begin(), perm.end(), 0);
  for (int t = 0; t < 5; ++t) {
    std::shuffle(perm.begin(), perm.end(), rng.engine());
    EXPECT_EQ(estimate_leip(test, s, fixed_tau(0.6)).distribution,
              estimate_leip(test.select(perm), s, fixed_tau(0.6)).distribution);
  }
}

TEST(EstimateLeip, AutomaticTauUsesConfusionRecall) {
  Random rng(54);
  const auto test = rng.posteriors(40, 2);
  const ConfusionMatrix c(2, {0.8, 0.1, 0.2, 0.9}, ConfusionKind::Conditional);
  std::vector<double> top(40);
  for (std::size_t k = 0; k < 40; ++k) top[k] = test.row_max(k);
  const auto r = estimate_leip(test, validate_simplex({0.5, 0.5}), {}, &c);
  EXPECT_EQ(r.tau_used, std::optional<double>(select_tau(c, top)));
}

TEST(EstimateLeip, Errors) {
  const auto test = PosteriorMatrix::from_rows(Rows{{0.6, 0.4}, {0.3, 0.7}});
  const auto s = validate_simplex({0.5, 0.5});
  EXPECT_EQ(code_of([&] { estimate_leip(test, s, fixed_tau(0.9)); }),
            ErrorCode::EmptyConfidentSet);
  EXPECT_EQ(code_of([&] { estimate_leip(test, s); }), ErrorCode::MissingValidation);
  EXPECT_EQ(code_of([&] { estimate_leip(test, s, fixed_tau(0.0)); }), ErrorCode::InvalidArgument);
  LeipConfig bad_floor = fixed_tau(0.5);
  bad_floor.floor_epsilon = 0.5;
  EXPECT_EQ(code_of([&] { estimate_leip(test, s, bad_floor); }), ErrorCode::InvalidArgument);
  EXPECT_EQ(code_of([&] { estimate_leip(test, validate_simplex({1.0, 0.0}), fixed_tau(0.5)); }),
            ErrorCode::ZeroSourceEntry);
}

}  // namespace
}  // namespace shiftbench
